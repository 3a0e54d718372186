#pragma once

// Umbrella header for the capcert library.

#include "capcert/capacity.hpp"
#include "capcert/certify.hpp"
#include "capcert/core.hpp"
#include "capcert/error.hpp"
#include "capcert/expansion.hpp"
#include "capcert/geometry.hpp"
