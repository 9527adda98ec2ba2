#pragma once

// Test-only generators and reference computations. Nothing here calls into
// the model code it is used to check.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pfcalc/matrix.hpp"
#include "pfcalc/pipeline_model.hpp"

namespace pfcalc::testing {

#ifndef PFCALC_TEST_DATA
#define PFCALC_TEST_DATA "tests/data"
#endif

inline std::string data_path(const std::string& name) {
  return std::string(PFCALC_TEST_DATA) + "/" + name;
}

class Gen {
public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  /// Open interval, away from the degenerate ends.
  double open_unit() { return std::uniform_real_distribution<double>(1e-3, 1.0 - 1e-3)(eng_); }
  std::size_t below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_);
  }

  /// Occasionally pins a rate to 0 or 1 to exercise the edges of the domain.
  double rate() {
    const auto pick = below(20);
    if (pick == 0) return 0.0;
    if (pick == 1) return 1.0;
    return unit();
  }

  NormalizedConfusionMatrix gamma() {
    return NormalizedConfusionMatrix::from_positive_rates(rate(), rate());
  }
  NormalizedConfusionMatrix strict_gamma() {
    return NormalizedConfusionMatrix::from_positive_rates(open_unit(), open_unit());
  }

  ResolvedPipeline pipeline(std::size_t len) {
    std::vector<double> fs;
    std::vector<NormalizedConfusionMatrix> gs;
    for (std::size_t k = 0; k < len; ++k) {
      fs.push_back(rate());
      gs.push_back(gamma());
    }
    return ResolvedPipeline::from_stages(fs, gs);
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

/// p(X_L, pred_L) by brute force over every binary label chain and every
/// binary decision chain of length L+1. Chains that break the generative
/// rules (a negative turning positive, a rejected document accepted again)
/// get probability zero instead of being skipped.
inline Matrix2 brute_force_omega(const std::vector<double>& fs,
                                 const std::vector<Matrix2>& gammas) {
  const std::size_t n = fs.size();  // L + 1 nodes, index 0 is the root
  double cell[2][2] = {{0, 0}, {0, 0}};
  for (std::uint64_t xs = 0; xs < (1ULL << n); ++xs) {
    for (std::uint64_t ds = 0; ds < (1ULL << n); ++ds) {
      double p = 1.0;
      for (std::size_t k = 0; k < n && p != 0.0; ++k) {
        const int x = static_cast<int>((xs >> k) & 1U);
        const int d = static_cast<int>((ds >> k) & 1U);
        if (k == 0) {
          p *= (x == 1 && d == 1) ? 1.0 : 0.0;
          continue;
        }
        const int px = static_cast<int>((xs >> (k - 1)) & 1U);
        const int pd = static_cast<int>((ds >> (k - 1)) & 1U);
        p *= px == 1 ? (x == 1 ? fs[k] : 1.0 - fs[k]) : (x == 0 ? 1.0 : 0.0);
        p *= pd == 1 ? gammas[k].at(x, d) : (d == 0 ? 1.0 : 0.0);
      }
      const int xl = static_cast<int>((xs >> (n - 1)) & 1U);
      const int dl = static_cast<int>((ds >> (n - 1)) & 1U);
      cell[xl][dl] += p;
    }
  }
  return {cell[0][0], cell[0][1], cell[1][0], cell[1][1]};
}

inline Matrix2 brute_force_omega(const ResolvedPipeline& p) {
  std::vector<double> fs(p.fs().begin(), p.fs().end());
  std::vector<Matrix2> gs;
  for (const auto& g : p.gammas()) gs.push_back(g.matrix());
  return brute_force_omega(fs, gs);
}

/// Straight matrix product of two 2x2 matrices.
inline Matrix2 matmul(const Matrix2& a, const Matrix2& b) {
  return {a.v00 * b.v00 + a.v01 * b.v10, a.v00 * b.v01 + a.v01 * b.v11,
          a.v10 * b.v00 + a.v11 * b.v10, a.v10 * b.v01 + a.v11 * b.v11};
}

/// tP from the cells, no flags.
inline double raw_precision(const Matrix2& w) { return w.v11 / (w.v01 + w.v11); }

}  // namespace pfcalc::testing
