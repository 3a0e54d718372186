// capcert: capacity, capacity-achieving set and quadratic-decay certificate
// of a discrete memoryless channel described in a JSON file.

#include <capcert/pipeline.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw capcert::ParseError("cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capacity and quadratic-decay certificates for discrete memoryless channels"};
    app.require_subcommand(1);

    capcert::RunOptions opts;
    std::string file;
    std::string output;
    bool bits = false;
    std::size_t direction_index = 0;
    std::vector<double> direction;
    std::string t_grid = "0:0.1:21";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("file", file, "channel description (JSON)")->required();
        cmd->add_option("--tol", opts.tol, "duality-gap tolerance of the capacity solver (nats)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--support-tol", opts.support_tol, "threshold for identifying capacity-achieving inputs")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--output", output, "write the report here instead of stdout");
        cmd->add_flag("--bits", bits, "show the summary on stderr in bits");
    };

    CLI::App* capacity = app.add_subcommand("capacity", "capacity and capacity-achieving output distribution");
    add_common(capacity);

    CLI::App* certify = app.add_subcommand("certify", "full certificate with sampled verification");
    add_common(certify);
    certify->add_option("--samples", opts.samples, "direction and verification samples")->check(CLI::PositiveNumber);
    certify->add_option("--seed", opts.seed, "seed for all sampling");
    certify->add_option("--slack", opts.slack, "allowed excess over the quadratic bound (nats); negative tightens");

    CLI::App* scan = app.add_subcommand("scan", "CSV of I, second-order model and envelope along a direction");
    add_common(scan);
    scan->add_option("--direction-index", direction_index, "index of the sampled valid direction");
    scan->add_option("--direction", direction, "explicit sum-zero direction from the representative")->delimiter(',');
    scan->add_option("--t-grid", t_grid, "start:stop:count or t1,t2,...");
    scan->add_option("--seed", opts.seed, "seed for direction sampling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : capcert::kExitParse;
    }

    try {
        const capcert::ChannelSpecFile spec = capcert::load_channel_spec(file);
        if (scan->parsed()) {
            capcert::ScanOptions scan_opts;
            scan_opts.direction_index = direction_index;
            if (!direction.empty()) scan_opts.direction = direction;
            scan_opts.t_grid = capcert::parse_t_grid(t_grid);
            emit(capcert::cmd_scan(spec, scan_opts, opts), output);
            return capcert::kExitPass;
        }
        const capcert::CommandResult result =
            certify->parsed() ? capcert::cmd_certify(spec, opts) : capcert::cmd_capacity(spec, opts);
        emit(result.report.dump(2) + "\n", output);
        std::cerr << capcert::summarize(result.report, bits);
        return result.exit_code;
    } catch (const capcert::ParseError& e) {
        std::cerr << "capcert: " << e.what() << '\n';
        return capcert::kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "capcert: " << e.what() << '\n';
        return capcert::kExitSolver;
    }
}
