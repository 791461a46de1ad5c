#pragma once

// In-test synthetic cohorts with answers known by construction.

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "lesionbench/core.hpp"

namespace fixture {

/// `n_certain` patients classified correctly with near-identical folds, then
/// `n_coin` patients whose label is a coin flip and whose folds disagree.
inline std::vector<lesionbench::PredictionRecord> certain_and_coin(std::uint64_t seed, int n_certain = 1600,
                                                                   int n_coin = 400) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<lesionbench::PredictionRecord> out;
  char id[16];
  for (int i = 0; i < n_certain + n_coin; ++i) {
    lesionbench::PredictionRecord r;
    std::snprintf(id, sizeof id, "P%05d", i);
    r.patient_id = id;
    r.site = "S";
    r.phase = "PV";
    r.label = static_cast<int>(g() % 2);
    double mean, spread;
    if (i < n_certain) {
      mean = r.label ? 0.8 + 0.19 * u(g) : 0.01 + 0.19 * u(g);
      spread = 0.001 * u(g);
    } else {
      mean = 0.3 + 0.4 * u(g);
      spread = 0.1 + 0.1 * u(g);
    }
    for (double k : {-1.0, -0.5, 0.0, 0.5, 1.0}) r.fold_probs.push_back(mean + k * spread);
    out.push_back(r);
  }
  return out;
}

}  // namespace fixture
