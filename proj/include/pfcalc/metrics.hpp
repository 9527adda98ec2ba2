#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "pfcalc/matrix.hpp"
#include "pfcalc/pipeline_model.hpp"

namespace pfcalc {

struct MetricFlags {
  /// No predicted positives (w01 + w11 = 0).
  bool precision_undefined = false;
  /// No true positives in the input (w10 + w11 = 0).
  bool recall_undefined = false;
  /// Either component undefined.
  bool f1_undefined = false;
  /// Precision or recall is exactly 0; F1 is reported as 0.
  bool f1_zero_component = false;

  friend bool operator==(const MetricFlags&, const MetricFlags&) = default;
};

/// Taxonomic precision, recall, F1 and accuracy of one pipeline.
struct MetricReport {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double accuracy = 0.0;
  MetricFlags flags;
};

MetricReport pipeline_metrics(const JointMatrix& omega);

/// Quantities carried from pi_{k-1} to pi_k when testing the precision
/// constraint: (1-F)*eta, F, psi11 and psi01 of the shorter pipeline.
struct PrefixState {
  double negative_eta = 0.0;
  double traversal = 1.0;
  double psi11 = 1.0;
  double psi01 = 1.0;

  /// State of pi_0.
  static PrefixState root() noexcept { return {}; }
  /// State after appending a classifier with conditional probability `f`.
  /// Throws DegenerateBound when psi01 = 0 (the accumulated eta diverges).
  PrefixState extend(double f, const NormalizedConfusionMatrix& gamma) const;
};

enum class PrecisionVerdict { NonDecreasing, Decreasing };

std::string_view to_string(PrecisionVerdict v) noexcept;

struct PrecisionCheck {
  PrecisionVerdict verdict = PrecisionVerdict::NonDecreasing;
  /// Largest g01 of the appended classifier that keeps tP from dropping.
  double bound = 0.0;
  PrefixState next;
};

/// Decides whether appending (f, gamma) to the pipeline summarized by `prev`
/// can keep tP from decreasing: NonDecreasing iff gamma.fp() <= bound with
///   bound = ((1-F)eta / (1-F')eta') * f * gamma.tp().
/// Throws DegenerateBound when (1-F')eta' is zero or not finite.
PrecisionCheck precision_constraint_check(const PrefixState& prev, double f,
                                          const NormalizedConfusionMatrix& gamma);

struct DepthStep {
  std::size_t k = 0;
  double f = 1.0;
  JointMatrix omega = JointMatrix::root();
  MetricReport metrics;
  /// Empty at k = 0 and when the bound is degenerate.
  std::optional<PrecisionVerdict> verdict;
  std::optional<double> bound;
  bool bound_degenerate = false;
};

struct DepthProfile {
  std::vector<DepthStep> steps;
  /// tR never increases from one prefix to the next (tolerance 1e-12).
  bool recall_non_increasing = true;
};

DepthProfile depth_profile(const ResolvedPipeline& p);
DepthProfile depth_profile(const Pipeline& p, const ClassifierProfileSet& profiles);

}  // namespace pfcalc
