#include "pfcalc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "pfcalc/error.hpp"

namespace pfcalc {

void SimConfig::validate() const {
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "m must be at least 1");
  if (replications == 0) {
    throw Error(ErrorKind::InvalidArgument, "replications must be at least 1");
  }
  if (workers == 0) throw Error(ErrorKind::InvalidArgument, "workers must be at least 1");
}

void CountMatrix::add(int label, int decision) noexcept {
  if (label) {
    decision ? ++c11 : ++c10;
  } else {
    decision ? ++c01 : ++c00;
  }
}

std::uint64_t CountMatrix::at(int label, int decision) const noexcept {
  return label ? (decision ? c11 : c10) : (decision ? c01 : c00);
}

CountMatrix& CountMatrix::operator+=(const CountMatrix& o) noexcept {
  c00 += o.c00;
  c01 += o.c01;
  c10 += o.c10;
  c11 += o.c11;
  return *this;
}

Matrix2 SimOutcome::empirical_omega() const {
  const auto& c = counts();
  const double md = static_cast<double>(m);
  return {static_cast<double>(c.c00) / md, static_cast<double>(c.c01) / md,
          static_cast<double>(c.c10) / md, static_cast<double>(c.c11) / md};
}

// ---------------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------------

JointMatrix enumerate_exact(const ResolvedPipeline& p) {
  const std::size_t len = p.length();
  Matrix2 joint;
  // Label chain: positive up to depth `last_pos`, negative afterwards.
  double traversal = 1.0;
  for (std::size_t last_pos = 0; last_pos <= len; ++last_pos) {
    if (last_pos > 0) traversal *= p.f(last_pos);
    const double p_labels =
        traversal * (last_pos < len ? 1.0 - p.f(last_pos + 1) : 1.0);
    if (p_labels == 0.0) continue;
    auto label_at = [last_pos](std::size_t k) { return k <= last_pos ? 1 : 0; };

    // Decision chain: accepted up to depth `last_acc` (the root accepts all).
    double accepted = 1.0;
    for (std::size_t last_acc = 0; last_acc <= len; ++last_acc) {
      if (last_acc > 0) accepted *= p.gamma(last_acc).accept(label_at(last_acc));
      const double p_decisions =
          accepted *
          (last_acc < len ? 1.0 - p.gamma(last_acc + 1).accept(label_at(last_acc + 1))
                          : 1.0);
      const double mass = p_labels * p_decisions;
      const bool pos = last_pos == len;
      const bool acc = last_acc == len;
      if (pos) {
        (acc ? joint.v11 : joint.v10) += mass;
      } else {
        (acc ? joint.v01 : joint.v00) += mass;
      }
    }
  }
  return JointMatrix::trusted(joint);
}

JointMatrix enumerate_exact(const Pipeline& p, const ClassifierProfileSet& profiles) {
  return enumerate_exact(resolve(p, profiles));
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

namespace {

/// Splits [0, m) into contiguous chunks, one per worker, and merges the
/// per-worker tallies in chunk order.
template <class Fn>
std::vector<CountMatrix> run_documents(std::uint64_t m, unsigned workers, std::size_t width,
                                       Fn&& per_document) {
  const unsigned n = static_cast<unsigned>(
      std::min<std::uint64_t>(workers, std::max<std::uint64_t>(m, 1)));
  std::vector<std::vector<CountMatrix>> partial(n, std::vector<CountMatrix>(width));
  auto work = [&](unsigned w) {
    const std::uint64_t lo = m * w / n;
    const std::uint64_t hi = m * (w + 1) / n;
    for (std::uint64_t doc = lo; doc < hi; ++doc) per_document(doc, partial[w]);
  };
  if (n == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(n);
    for (unsigned w = 0; w < n; ++w) threads.emplace_back(work, w);
  }
  std::vector<CountMatrix> total(width);
  for (const auto& part : partial) {
    for (std::size_t i = 0; i < width; ++i) total[i] += part[i];
  }
  return total;
}

}  // namespace

SimOutcome simulate_pipeline(const ResolvedPipeline& p, const SimConfig& cfg) {
  cfg.validate();
  const CounterRng rng(cfg.seed);
  const std::size_t len = p.length();
  SimOutcome out;
  out.m = cfg.m;
  out.per_depth = run_documents(
      cfg.m, cfg.workers, len + 1, [&](std::uint64_t doc, std::vector<CountMatrix>& tally) {
        int label = 1;
        int decision = 1;
        tally[0].add(1, 1);
        for (std::size_t k = 1; k <= len; ++k) {
          const auto slot = static_cast<std::uint32_t>(k);
          if (label) label = rng.bernoulli(p.f(k), doc, slot, kLabelStream) ? 1 : 0;
          if (decision) {
            decision =
                rng.bernoulli(p.gamma(k).accept(label), doc, slot, kDecisionStream) ? 1 : 0;
          }
          tally[k].add(label, decision);
        }
      });
  return out;
}

SimOutcome simulate_pipeline(const Pipeline& p, const ClassifierProfileSet& profiles,
                             const SimConfig& cfg) {
  return simulate_pipeline(resolve(p, profiles), cfg);
}

TaxonomySampler::TaxonomySampler(const Taxonomy& t, std::uint64_t seed)
    : taxonomy_(&t), rng_(seed), traversal_(t.size(), 1.0), rates_(t.size(), 1.0) {
  constexpr double kTolerance = 1e-9;
  const auto& names = t.categories();
  // Categories are stored in topological order, so parents come first.
  for (std::size_t n = 1; n < t.size(); ++n) {
    std::optional<double> reach;
    for (auto parent : t.parents(n)) {
      const auto f = *t.edge_probability(n, parent);
      if (!f) {
        throw Error(ErrorKind::MissingEdgeProbability,
                    "edge " + names[n].str() + " -> " + names[parent].str() +
                        " has no probability");
      }
      const double via = traversal_[parent] * *f;
      if (reach && std::abs(*reach - via) > kTolerance) {
        throw Error(ErrorKind::InconsistentProbabilities,
                    "paths reaching the category give different traversal "
                    "probabilities",
                    names[n].str());
      }
      if (!reach) reach = via;
    }
    traversal_[n] = *reach;

    if (t.parents(n).size() == 1) {
      rates_[n] = **t.edge_probability(n, t.parents(n).front());
      continue;
    }
    // q_n = p(n) / prod of q over all ancestors.
    std::vector<bool> ancestor(t.size(), false);
    std::vector<std::size_t> stack(t.parents(n).begin(), t.parents(n).end());
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      if (ancestor[a]) continue;
      ancestor[a] = true;
      for (auto up : t.parents(a)) stack.push_back(up);
    }
    double upstream = 1.0;
    for (std::size_t a = 0; a < t.size(); ++a) {
      if (ancestor[a]) upstream *= rates_[a];
    }
    if (upstream == 0.0) {
      if (traversal_[n] > kTolerance) {
        throw Error(ErrorKind::InconsistentProbabilities,
                    "category is reachable only through impossible ancestors",
                    names[n].str());
      }
      rates_[n] = 0.0;
      continue;
    }
    const double q = traversal_[n] / upstream;
    if (q > 1.0 + kTolerance) {
      throw Error(ErrorKind::InconsistentProbabilities,
                  "edge probabilities require p(category | all parents) = " +
                      std::to_string(q) + " > 1",
                  names[n].str());
    }
    rates_[n] = std::min(q, 1.0);
  }
}

std::vector<char> TaxonomySampler::sample_membership(std::uint64_t doc) const {
  const auto& t = *taxonomy_;
  std::vector<char> member(t.size(), 0);
  member[0] = 1;
  for (std::size_t n = 1; n < t.size(); ++n) {
    const auto parents = t.parents(n);
    const bool all_parents =
        std::all_of(parents.begin(), parents.end(), [&](std::size_t a) { return member[a]; });
    member[n] = all_parents &&
                rng_.bernoulli(rates_[n], doc, static_cast<std::uint32_t>(n), kLabelStream);
  }
  return member;
}

LabelSet TaxonomySampler::sample_labels(std::uint64_t doc) const {
  const auto member = sample_membership(doc);
  LabelSet out;
  for (std::size_t n = 0; n < member.size(); ++n) {
    if (member[n]) out.insert(taxonomy_->categories()[n]);
  }
  return out;
}

std::vector<PipelineOutcome> simulate_taxonomy(const Taxonomy& t,
                                               const ClassifierProfileSet& profiles,
                                               const SimConfig& cfg, bool leaf_only) {
  cfg.validate();
  const TaxonomySampler sampler(t, cfg.seed);
  const CounterRng rng(cfg.seed);

  struct Route {
    std::vector<std::size_t> nodes;
    std::vector<double> accept_neg;
    std::vector<double> accept_pos;
    std::size_t offset = 0;  // first tally slot of this pipeline
  };
  const auto pipelines = enumerate_pipelines(t, leaf_only);
  std::vector<Route> routes;
  std::size_t width = 0;
  for (const auto& p : pipelines) {
    Route r;
    const auto gammas = resolve_gammas(p, profiles);
    for (std::size_t k = 0; k < p.nodes().size(); ++k) {
      r.nodes.push_back(t.index_of(p.nodes()[k]));
      r.accept_neg.push_back(gammas[k].accept(0));
      r.accept_pos.push_back(gammas[k].accept(1));
    }
    r.offset = width;
    width += r.nodes.size();
    routes.push_back(std::move(r));
  }

  const auto tallies = run_documents(
      cfg.m, cfg.workers, width, [&](std::uint64_t doc, std::vector<CountMatrix>& tally) {
        const auto member = sampler.sample_membership(doc);
        std::vector<double> score(t.size());
        for (std::size_t n = 1; n < t.size(); ++n) {
          score[n] = rng.uniform(doc, static_cast<std::uint32_t>(n), kDecisionStream);
        }
        for (const auto& r : routes) {
          int decision = 1;
          tally[r.offset].add(1, 1);
          for (std::size_t k = 1; k < r.nodes.size(); ++k) {
            const auto n = r.nodes[k];
            const int label = member[n];
            if (decision) {
              decision = score[n] < (label ? r.accept_pos[k] : r.accept_neg[k]) ? 1 : 0;
            }
            tally[r.offset + k].add(label, decision);
          }
        }
      });

  std::vector<PipelineOutcome> out;
  out.reserve(pipelines.size());
  for (std::size_t i = 0; i < pipelines.size(); ++i) {
    SimOutcome o;
    o.m = cfg.m;
    const auto first = tallies.begin() + static_cast<std::ptrdiff_t>(routes[i].offset);
    o.per_depth.assign(first, first + static_cast<std::ptrdiff_t>(routes[i].nodes.size()));
    out.push_back({pipelines[i], std::move(o)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deviation statistics
// ---------------------------------------------------------------------------

namespace {

double z_score(double deviation, double sigma) {
  if (sigma > 0.0) return deviation / sigma;
  return deviation == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

void finish(DeviationReport& r, double threshold) {
  r.threshold = threshold;
  r.max_z = std::max({r.z.v00, r.z.v01, r.z.v10, r.z.v11});
  r.pass = r.max_z <= threshold;
}

}  // namespace

DeviationReport compare(const JointMatrix& model, const CountMatrix& counts,
                        std::uint64_t m, double z_threshold) {
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "m must be at least 1");
  const double md = static_cast<double>(m);
  DeviationReport r;
  auto cell = [&](int i, int j, double& dev, double& sig, double& z) {
    const double w = model.matrix().at(i, j);
    dev = std::abs(static_cast<double>(counts.at(i, j)) / md - w);
    sig = std::sqrt(w * (1.0 - w) / md);
    z = z_score(dev, sig);
  };
  cell(0, 0, r.deviation.v00, r.sigma.v00, r.z.v00);
  cell(0, 1, r.deviation.v01, r.sigma.v01, r.z.v01);
  cell(1, 0, r.deviation.v10, r.sigma.v10, r.z.v10);
  cell(1, 1, r.deviation.v11, r.sigma.v11, r.z.v11);
  finish(r, z_threshold);
  return r;
}

DeviationReport compare(const JointMatrix& model, const SimOutcome& outcome,
                        double z_threshold) {
  return compare(model, outcome.counts(), outcome.m, z_threshold);
}

DeviationReport compare_outcomes(const SimOutcome& a, const SimOutcome& b,
                                 double z_threshold) {
  if (a.m == 0 || b.m == 0) throw Error(ErrorKind::InvalidArgument, "empty outcome");
  const double ma = static_cast<double>(a.m);
  const double mb = static_cast<double>(b.m);
  DeviationReport r;
  auto cell = [&](int i, int j, double& dev, double& sig, double& z) {
    const double ca = static_cast<double>(a.counts().at(i, j));
    const double cb = static_cast<double>(b.counts().at(i, j));
    const double pooled = (ca + cb) / (ma + mb);
    dev = std::abs(ca / ma - cb / mb);
    sig = std::sqrt(pooled * (1.0 - pooled) * (1.0 / ma + 1.0 / mb));
    z = z_score(dev, sig);
  };
  cell(0, 0, r.deviation.v00, r.sigma.v00, r.z.v00);
  cell(0, 1, r.deviation.v01, r.sigma.v01, r.z.v01);
  cell(1, 0, r.deviation.v10, r.sigma.v10, r.z.v10);
  cell(1, 1, r.deviation.v11, r.sigma.v11, r.z.v11);
  finish(r, z_threshold);
  return r;
}

// ---------------------------------------------------------------------------
// Imbalance sweep
// ---------------------------------------------------------------------------

namespace {

void accumulate(Spread& s, const std::optional<double>& v) {
  if (!v) return;
  if (s.count == 0) {
    s.min = s.max = *v;
  } else {
    s.min = std::min(s.min, *v);
    s.max = std::max(s.max, *v);
  }
  s.mean += (*v - s.mean) / static_cast<double>(++s.count);
}

}  // namespace

SweepReport imbalance_sweep(const ResolvedPipeline& p, double target,
                            std::size_t n_distributions, const SimConfig& cfg) {
  if (!(target > 0.0 && target < 1.0)) {
    throw Error(ErrorKind::InfeasibleTarget, "target positive rate must lie in (0,1)");
  }
  const std::size_t len = p.length();
  if (len < 2) {
    throw Error(ErrorKind::InfeasibleTarget,
                "a sweep needs at least two classifiers below the root");
  }
  if (n_distributions == 0) {
    throw Error(ErrorKind::InvalidArgument, "need at least one distribution");
  }
  const CounterRng rng(cfg.seed);
  const double log_target = std::log(target);

  SweepReport report;
  report.target = target;
  for (std::size_t i = 0; i < n_distributions; ++i) {
    std::vector<double> weights(len, 1.0);
    if (i > 0) {
      for (std::size_t k = 0; k < len; ++k) {
        // Exponential(1) draws; 1 - u lies in (0, 1].
        const double u = rng.uniform(i, static_cast<std::uint32_t>(k + 1), kSweepStream);
        weights[k] = -std::log1p(-u);
      }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    if (total == 0.0) {
      std::fill(weights.begin(), weights.end(), 1.0);
      total = static_cast<double>(len);
    }
    std::vector<double> fs{1.0};
    for (double w : weights) fs.push_back(std::exp(log_target * w / total));

    SweepRow row;
    row.omega = omega_closed(p.with_profile(fs));
    row.metrics = pipeline_metrics(row.omega);
    row.fs = std::move(fs);
    accumulate(report.precision, row.metrics.precision);
    accumulate(report.recall, row.metrics.recall);
    accumulate(report.f1, row.metrics.f1);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace pfcalc
