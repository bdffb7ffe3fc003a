#pragma once

#include <random>

namespace slowtrack {

/// The single generator type threaded through sampling, tracking and training.
using Rng = std::mt19937_64;

}  // namespace slowtrack
