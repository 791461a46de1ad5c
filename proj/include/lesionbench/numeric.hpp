#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lesionbench {

/// Linear-interpolation ("inclusive") percentile, p in [0,100]: position
/// p/100 * (n-1) between order statistics. Input need not be sorted.
double percentile(std::vector<double> values, double p);
double percentile_sorted(std::span<const double> sorted, double p);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);
double compensated_mean(std::span<const double> values);

/// Round half to even, matching the default IEEE rounding mode.
long long round_half_even(double x);

/// Parses "start:stop:step" into an inclusive grid. Values are snapped to
/// 1e-12 so that 0.1:0.9:0.1 yields exactly the decimal literals.
std::vector<double> parse_grid(const std::string& spec);

// Random streams. All randomness in the library is derived from a 64-bit
// seed through these helpers so results do not depend on the standard
// library's distribution implementations.

std::uint64_t splitmix64(std::uint64_t x);
/// Independent stream seed for sub-task `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

using Engine = std::mt19937_64;

/// Unbiased draw from [0, n) by rejection.
std::size_t uniform_index(Engine& engine, std::size_t n);
/// Uniform double in [0, 1) with 53 random bits.
double uniform_unit(Engine& engine);

/// Runs fn(i) for i in [0, n) over `threads` workers with static contiguous
/// chunks. Each index must write only its own output slot.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lesionbench
