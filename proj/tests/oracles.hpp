#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here deliberately avoids the code paths under test.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace oracles {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // population variance
};

/// Classic two-pass estimator: mean first, then squared deviations.
inline MeanVar two_pass(const std::vector<double>& values) {
  MeanVar out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.var = sq / static_cast<double>(values.size());
  return out;
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace oracles
