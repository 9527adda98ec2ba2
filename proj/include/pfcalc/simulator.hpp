#pragma once

#include <cstdint>
#include <vector>

#include "pfcalc/matrix.hpp"
#include "pfcalc/metrics.hpp"
#include "pfcalc/philox.hpp"
#include "pfcalc/pipeline_model.hpp"
#include "pfcalc/taxonomy.hpp"

namespace pfcalc {

enum class SimMode { Pipeline, Taxonomy };

struct SimConfig {
  std::uint64_t m = 100000;
  std::uint64_t seed = 42;
  SimMode mode = SimMode::Pipeline;
  /// Number of seeded runs (seed, seed+1, ...) a caller should perform.
  std::uint32_t replications = 1;
  /// Threads used for one run; results do not depend on it.
  unsigned workers = 1;

  /// Throws InvalidArgument on m = 0, replications = 0 or workers = 0.
  void validate() const;
};

/// RNG streams. Slots are depths in pipeline mode and category indices in
/// taxonomy mode.
inline constexpr std::uint32_t kLabelStream = 0;
inline constexpr std::uint32_t kDecisionStream = 1;
inline constexpr std::uint32_t kSweepStream = 2;

struct CountMatrix {
  std::uint64_t c00 = 0;
  std::uint64_t c01 = 0;
  std::uint64_t c10 = 0;
  std::uint64_t c11 = 0;

  void add(int label, int decision) noexcept;
  std::uint64_t total() const noexcept { return c00 + c01 + c10 + c11; }
  std::uint64_t at(int label, int decision) const noexcept;
  CountMatrix& operator+=(const CountMatrix& o) noexcept;
  friend bool operator==(const CountMatrix&, const CountMatrix&) = default;
};

/// Tallies of (true label, pipeline decision) at every depth 0..L.
struct SimOutcome {
  std::uint64_t m = 0;
  std::vector<CountMatrix> per_depth;

  const CountMatrix& counts() const { return per_depth.back(); }
  /// Xi / m at the last depth.
  Matrix2 empirical_omega() const;
  friend bool operator==(const SimOutcome&, const SimOutcome&) = default;
};

struct DeviationReport {
  Matrix2 deviation;
  Matrix2 sigma;
  Matrix2 z;
  double max_z = 0.0;
  double threshold = 4.0;
  bool pass = true;
};

/// Exact p(X_L, pred_L) by summation over every monotone label chain and
/// every monotone decision chain of the event tree.
JointMatrix enumerate_exact(const ResolvedPipeline& p);
JointMatrix enumerate_exact(const Pipeline& p, const ClassifierProfileSet& profiles);

/// Documents flow through one pipeline: labels by Bernoulli(f_k) while still
/// positive, decisions by Bernoulli(gamma row x_k, column 1) while still
/// accepted.
SimOutcome simulate_pipeline(const ResolvedPipeline& p, const SimConfig& cfg);
SimOutcome simulate_pipeline(const Pipeline& p, const ClassifierProfileSet& profiles,
                             const SimConfig& cfg);

/// Generates consistent label sets for a whole taxonomy. Each category n
/// draws one uniform per document and is a member iff all its parents are
/// members and the draw is below q_n, where q_n is chosen so that
/// p(n | parent) equals the edge probability on every covering edge. This
/// requires the path products of f to agree on all paths reaching n; the
/// constructor throws InconsistentProbabilities otherwise.
class TaxonomySampler {
public:
  TaxonomySampler(const Taxonomy& t, std::uint64_t seed);

  /// Membership per category index.
  std::vector<char> sample_membership(std::uint64_t doc) const;
  LabelSet sample_labels(std::uint64_t doc) const;

  /// p(n) for every category index.
  const std::vector<double>& traversal() const noexcept { return traversal_; }
  const std::vector<double>& node_rates() const noexcept { return rates_; }

private:
  const Taxonomy* taxonomy_;
  CounterRng rng_;
  std::vector<double> traversal_;
  std::vector<double> rates_;
};

struct PipelineOutcome {
  Pipeline pipeline;
  SimOutcome outcome;
};

/// Top-down pass-down over the whole taxonomy. Each category holds one
/// score per document; a node instance on a pipeline accepts iff its parent
/// instance accepted and the score is below its gamma acceptance rate.
/// Tallies are extracted for every pipeline (or leaf-terminated ones only).
std::vector<PipelineOutcome> simulate_taxonomy(const Taxonomy& t,
                                               const ClassifierProfileSet& profiles,
                                               const SimConfig& cfg,
                                               bool leaf_only = false);

DeviationReport compare(const JointMatrix& model, const CountMatrix& counts,
                        std::uint64_t m, double z_threshold = 4.0);
DeviationReport compare(const JointMatrix& model, const SimOutcome& outcome,
                        double z_threshold = 4.0);
/// Two-sample z-test per cell with the pooled proportion.
DeviationReport compare_outcomes(const SimOutcome& a, const SimOutcome& b,
                                 double z_threshold = 4.0);

struct SweepRow {
  std::vector<double> fs;
  JointMatrix omega = JointMatrix::root();
  MetricReport metrics;
};

struct Spread {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

struct SweepReport {
  double target = 0.0;
  std::vector<SweepRow> rows;
  Spread precision;
  Spread recall;
  Spread f1;
};

/// Random conditional-probability chains with fixed product F_L = target:
/// log(target) is split with flat Dirichlet weights over the L steps. Row 0
/// always uses the equal split. Throws InfeasibleTarget unless
/// 0 < target < 1 and L >= 2.
SweepReport imbalance_sweep(const ResolvedPipeline& p, double target,
                            std::size_t n_distributions, const SimConfig& cfg);

}  // namespace pfcalc
