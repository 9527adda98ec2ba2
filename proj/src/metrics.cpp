#include "pfcalc/metrics.hpp"

#include <cmath>

#include "pfcalc/error.hpp"

namespace pfcalc {

MetricReport pipeline_metrics(const JointMatrix& omega) {
  const auto& w = omega.matrix();
  MetricReport r;
  r.accuracy = w.trace();

  const double predicted = w.v01 + w.v11;
  if (predicted > 0.0) {
    r.precision = w.v11 / predicted;
  } else {
    r.flags.precision_undefined = true;
  }
  const double actual = w.v10 + w.v11;
  if (actual > 0.0) {
    r.recall = w.v11 / actual;
  } else {
    r.flags.recall_undefined = true;
  }

  if (!r.precision || !r.recall) {
    r.flags.f1_undefined = true;
  } else if (*r.precision == 0.0 || *r.recall == 0.0) {
    r.flags.f1_zero_component = true;
    r.f1 = 0.0;
  } else {
    r.f1 = 2.0 / (1.0 / *r.precision + 1.0 / *r.recall);
  }
  return r;
}

PrefixState PrefixState::extend(double f, const NormalizedConfusionMatrix& gamma) const {
  if (psi01 == 0.0) {
    throw Error(ErrorKind::DegenerateBound,
                "psi01 vanished upstream; accumulated eta diverges");
  }
  PrefixState next;
  next.negative_eta = negative_eta + (1.0 - f) * traversal * psi11 / psi01;
  next.traversal = traversal * f;
  next.psi11 = psi11 * gamma.tp();
  next.psi01 = psi01 * gamma.fp();
  return next;
}

std::string_view to_string(PrecisionVerdict v) noexcept {
  return v == PrecisionVerdict::NonDecreasing ? "NonDecreasing" : "Decreasing";
}

PrecisionCheck precision_constraint_check(const PrefixState& prev, double f,
                                          const NormalizedConfusionMatrix& gamma) {
  PrecisionCheck out;
  out.next = prev.extend(f, gamma);
  const double denom = out.next.negative_eta;
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw Error(ErrorKind::DegenerateBound,
                "(1-F')eta' is " + std::to_string(denom) + "; bound undefined");
  }
  out.bound = prev.negative_eta / denom * f * gamma.tp();
  out.verdict = gamma.fp() <= out.bound ? PrecisionVerdict::NonDecreasing
                                        : PrecisionVerdict::Decreasing;
  return out;
}

DepthProfile depth_profile(const ResolvedPipeline& p) {
  DepthProfile profile;
  DepthStep root;
  root.metrics = pipeline_metrics(root.omega);
  profile.steps.push_back(root);

  std::optional<PrefixState> state = PrefixState::root();
  for (std::size_t k = 1; k <= p.length(); ++k) {
    DepthStep step;
    step.k = k;
    step.f = p.f(k);
    step.omega = omega_step(profile.steps.back().omega, p.f(k), p.gamma(k));
    step.metrics = pipeline_metrics(step.omega);
    if (state) {
      try {
        const auto check = precision_constraint_check(*state, p.f(k), p.gamma(k));
        step.verdict = check.verdict;
        step.bound = check.bound;
        state = check.next;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateBound) throw;
        step.bound_degenerate = true;
        // A zero denominator leaves the state usable for deeper steps; a
        // vanished psi01 does not.
        try {
          state = state->extend(p.f(k), p.gamma(k));
        } catch (const Error&) {
          state.reset();
        }
      }
    } else {
      step.bound_degenerate = true;
    }

    const auto& prev = profile.steps.back().metrics.recall;
    if (prev && step.metrics.recall && *step.metrics.recall > *prev + 1e-12) {
      profile.recall_non_increasing = false;
    }
    profile.steps.push_back(std::move(step));
  }
  return profile;
}

DepthProfile depth_profile(const Pipeline& p, const ClassifierProfileSet& profiles) {
  return depth_profile(resolve(p, profiles));
}

}  // namespace pfcalc
