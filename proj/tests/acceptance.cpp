// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "pfcalc/cli.hpp"
#include "pfcalc/io.hpp"
#include "pfcalc/metrics.hpp"
#include "pfcalc/simulator.hpp"
#include "support.hpp"

using namespace pfcalc;
using pfcalc::testing::brute_force_omega;
using pfcalc::testing::data_path;
using pfcalc::testing::Gen;
using pfcalc::testing::raw_precision;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Fmt {
public:
  template <typename T>
  Fmt& operator<<(const T& v) {
    ss_ << v;
    return *this;
  }
  std::string str() const { return ss_.str(); }

private:
  std::ostringstream ss_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

NormalizedConfusionMatrix g(double tn, double fp, double fn, double tp) {
  return NormalizedConfusionMatrix::from_rates(tn, fp, fn, tp);
}

// 1 -------------------------------------------------------------------------
Outcome monoid() {
  const auto start = std::chrono::steady_clock::now();
  Gen gen(101);
  std::vector<NormalizedConfusionMatrix> ms;
  for (int i = 0; i < 1000; ++i) ms.push_back(gen.gamma());
  const auto mu = NormalizedConfusionMatrix::neutral();
  double closure = 0.0, assoc = 0.0, neutral = 0.0;
  bool in_range = true;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& a = ms[i];
    const auto& b = ms[(i + 1) % ms.size()];
    const auto& c = ms[(i + 2) % ms.size()];
    const auto ab = oplus(a.matrix(), b.matrix());
    for (double v : ab.cells()) in_range = in_range && v >= 0.0 && v <= 1.0;
    closure = std::max({closure, std::abs(ab.row_sum(0) - 1), std::abs(ab.row_sum(1) - 1)});
    assoc = std::max(assoc, max_abs_diff(oplus(oplus(a, b), c).matrix(),
                                         oplus(a, oplus(b, c)).matrix()));
    neutral = std::max({neutral, max_abs_diff(oplus(mu, a).matrix(), a.matrix()),
                        max_abs_diff(oplus(a, mu).matrix(), a.matrix())});
  }
  const double t = seconds_since(start);
  return {in_range && closure <= 1e-12 && assoc < 1e-12 && neutral < 1e-12 && t < 1.0,
          (Fmt() << "closure " << closure << ", assoc " << assoc << ", neutral " << neutral
                 << ", " << t << " s")
              .str()};
}

// 2 -------------------------------------------------------------------------
Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  Gen gen(102);
  double worst = 0.0, sums = 0.0, brute = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto p = gen.pipeline(gen.below(7));
    const auto e = enumerate_exact(p).matrix();
    const auto r = omega_recursive(p).matrix();
    const auto c = omega_closed(p).matrix();
    worst = std::max({worst, max_abs_diff(e, r), max_abs_diff(e, c), max_abs_diff(r, c)});
    sums = std::max({sums, std::abs(e.sum() - 1), std::abs(r.sum() - 1), std::abs(c.sum() - 1)});
    brute = std::max(brute, max_abs_diff(e, brute_force_omega(p)));
  }
  const double t = seconds_since(start);
  return {worst <= 1e-12 && sums <= 1e-12 && brute <= 1e-12 && t < 5.0,
          (Fmt() << "pairwise " << worst << ", sum " << sums << ", brute force " << brute
                 << ", " << t << " s")
              .str()};
}

// 3 -------------------------------------------------------------------------
Outcome long_pipelines() {
  Gen gen(103);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> fs;
    std::vector<NormalizedConfusionMatrix> gs;
    for (int k = 0; k < 64; ++k) {
      // Keep most of the mass moving so the tail is not trivially zero.
      fs.push_back(0.9 + 0.1 * gen.unit());
      gs.push_back(NormalizedConfusionMatrix::from_positive_rates(gen.unit(),
                                                                  0.9 + 0.1 * gen.unit()));
    }
    const auto p = ResolvedPipeline::from_stages(fs, gs);
    worst = std::max(worst, max_abs_diff(omega_closed(p).matrix(), omega_recursive(p).matrix()));
  }
  return {worst <= 1e-9, (Fmt() << "max closed vs recursive " << worst).str()};
}

// 4 -------------------------------------------------------------------------
Outcome factorization() {
  Gen gen(104);
  double recon = 0.0, rows = 0.0, phi_psi = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = gen.pipeline(gen.below(9));
    const auto fz = factorize(p);
    recon = std::max(recon, max_abs_diff(fz.reconstruct().matrix(), omega_recursive(p).matrix()));
    for (const auto* m : {&fz.phi, &fz.psi}) {
      rows = std::max({rows, std::abs(m->matrix().row_sum(0) - 1),
                       std::abs(m->matrix().row_sum(1) - 1)});
    }
  }
  for (int i = 0; i < 200; ++i) {
    const std::size_t len = 1 + gen.below(6);
    std::vector<double> fs(len, 1.0);
    fs[0] = gen.open_unit();
    std::vector<NormalizedConfusionMatrix> gs;
    for (std::size_t k = 0; k < len; ++k) gs.push_back(gen.gamma());
    const auto fz = factorize(ResolvedPipeline::from_stages(fs, gs));
    phi_psi = std::max(phi_psi, max_abs_diff(fz.phi.matrix(), fz.psi.matrix()));
  }
  return {recon <= 1e-12 && rows <= 1e-12 && phi_psi <= 1e-12,
          (Fmt() << "reconstruction " << recon << ", row sums " << rows
                 << ", single-step phi vs psi " << phi_psi)
              .str()};
}

// 5 -------------------------------------------------------------------------
Outcome homomorphism() {
  Gen gen(105);
  const auto root = CategoryId("r");
  ClassifierProfileSet profiles(root);
  std::vector<CategoryId> alphabet{root};
  for (int i = 0; i < 8; ++i) {
    alphabet.emplace_back("c" + std::to_string(i));
    profiles.set(alphabet.back(), gen.gamma());
  }
  double worst = 0.0;
  std::size_t splits = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<CategoryId> s;
    const auto len = gen.below(9);
    for (std::size_t k = 0; k < len; ++k) s.push_back(alphabet[gen.below(alphabet.size())]);
    const std::span<const CategoryId> all(s);
    const auto whole = psi(all, profiles);
    for (std::size_t cut = 0; cut <= s.size(); ++cut) {
      const auto composed = oplus(psi(all.first(cut), profiles), psi(all.subspan(cut), profiles));
      worst = std::max(worst, max_abs_diff(composed.matrix(), whole.matrix()));
      ++splits;
    }
    worst = std::max(worst, max_abs_diff(homomorphism_map(all, profiles).matrix(),
                                          psi(all, profiles, PsiMode::Closed).matrix()));
  }
  return {worst <= 1e-12, (Fmt() << splits << " splits, max " << worst).str()};
}

// 6 -------------------------------------------------------------------------
Outcome metrics() {
  Gen gen(106);
  double recall = 0.0, accuracy = 0.0;
  bool monotone = true;
  for (int i = 0; i < 1000; ++i) {
    const auto len = 1 + gen.below(8);
    std::vector<double> fs;
    std::vector<NormalizedConfusionMatrix> gs;
    double product = 1.0;
    for (std::size_t k = 0; k < len; ++k) {
      fs.push_back(gen.open_unit());
      gs.push_back(gen.gamma());
      product *= gs.back().tp();
    }
    const auto p = ResolvedPipeline::from_stages(fs, gs);
    const auto w = omega_recursive(p);
    const auto r = pipeline_metrics(w);
    recall = std::max(recall, std::abs(*r.recall - product));
    accuracy = std::max(accuracy, std::abs(r.accuracy - w.matrix().trace()));
    const auto d = depth_profile(p);
    monotone = monotone && d.recall_non_increasing;
    for (std::size_t k = 1; k < d.steps.size(); ++k) {
      monotone = monotone && *d.steps[k].metrics.recall <= *d.steps[k - 1].metrics.recall + 1e-12;
    }
  }

  int agree = 0, decided = 0;
  for (int i = 0; decided < 1000 && i < 5000; ++i) {
    const auto len = gen.below(6);
    std::vector<double> fs;
    std::vector<NormalizedConfusionMatrix> gs;
    for (std::size_t k = 0; k < len; ++k) {
      fs.push_back(gen.open_unit());
      gs.push_back(gen.strict_gamma());
    }
    const double f = gen.open_unit();
    const auto next = gen.strict_gamma();
    auto state = PrefixState::root();
    for (std::size_t k = 0; k < len; ++k) state = state.extend(fs[k], gs[k]);
    const auto verdict = precision_constraint_check(state, f, next).verdict;
    const double before = raw_precision(brute_force_omega(ResolvedPipeline::from_stages(fs, gs)));
    fs.push_back(f);
    gs.push_back(next);
    const double after = raw_precision(brute_force_omega(ResolvedPipeline::from_stages(fs, gs)));
    if (std::abs(after - before) < 1e-12) continue;
    ++decided;
    const auto expected =
        after >= before ? PrecisionVerdict::NonDecreasing : PrecisionVerdict::Decreasing;
    agree += verdict == expected ? 1 : 0;
  }
  return {recall <= 1e-12 && accuracy <= 1e-12 && monotone && decided == 1000 && agree == 1000,
          (Fmt() << "tR error " << recall << ", tA error " << accuracy << ", monotone "
                 << (monotone ? "yes" : "no") << ", verdicts " << agree << "/" << decided)
              .str()};
}

// 7 -------------------------------------------------------------------------
Outcome degenerate() {
  Gen gen(107);
  bool ok = true;
  std::size_t unbounded = 0, zero_mass = 0;
  for (int i = 0; i < 200; ++i) {
    const auto len = 1 + gen.below(8);
    std::vector<double> fs;
    std::vector<double> ones(len, 1.0);
    std::vector<NormalizedConfusionMatrix> no_fp;
    std::vector<NormalizedConfusionMatrix> any;
    for (std::size_t k = 0; k < len; ++k) {
      fs.push_back(gen.open_unit());
      no_fp.push_back(NormalizedConfusionMatrix::from_positive_rates(0.0, gen.unit()));
      any.push_back(gen.gamma());
    }
    const auto p = ResolvedPipeline::from_stages(fs, no_fp);
    const auto w = omega_closed(p).matrix();
    for (double v : w.cells()) ok = ok && std::isfinite(v);
    ok = ok && w.v01 == 0.0 && std::abs(w.sum() - 1) <= 1e-12;
    ok = ok && max_abs_diff(w, omega_recursive(p).matrix()) <= 1e-12;
    const auto fz = factorize(p);
    unbounded += fz.eta_status == EtaStatus::Unbounded ? 1 : 0;

    const auto q = ResolvedPipeline::from_stages(ones, any);
    const auto fq = factorize(q);
    const auto wq = omega_recursive(q).matrix();
    zero_mass += fq.prior_negative == 0.0 && fq.eta_status == EtaStatus::ZeroNegativeMass &&
                         std::isnan(fq.eta)
                     ? 1
                     : 0;
    ok = ok && std::abs(wq.sum() - 1) <= 1e-12 && wq.v00 == 0.0 && wq.v01 == 0.0;
    ok = ok && max_abs_diff(fq.reconstruct().matrix(), wq) <= 1e-12;
    ok = ok && max_abs_diff(wq, enumerate_exact(q).matrix()) <= 1e-12;
  }
  return {ok && unbounded == 200 && zero_mass == 200,
          (Fmt() << "finite omega " << (ok ? "yes" : "no") << ", unbounded eta flagged "
                 << unbounded << "/200, zero negative mass flagged " << zero_mass << "/200")
              .str()};
}

// 8 -------------------------------------------------------------------------
Outcome monte_carlo() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> fs{0.5};
  const std::vector<NormalizedConfusionMatrix> gs{g(0.8, 0.2, 0.1, 0.9)};
  const auto p = ResolvedPipeline::from_stages(fs, gs);
  const auto model = JointMatrix::from_cells(0.40, 0.10, 0.05, 0.45);
  bool matches_model = max_abs_diff(enumerate_exact(p).matrix(), model.matrix()) <= 1e-12;

  SimConfig cfg;
  cfg.m = 100000;
  const auto first = compare(model, simulate_pipeline(p, cfg));
  int passed = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    cfg.seed = 42 + s;
    const auto dev = compare(model, simulate_pipeline(p, cfg));
    passed += dev.pass ? 1 : 0;
    worst = std::max(worst, dev.max_z);
  }
  const double t = seconds_since(start);
  return {matches_model && first.pass && passed >= 99 && t < 10.0,
          (Fmt() << "default seed max z " << first.max_z << ", " << passed
                 << "/100 seeds pass, worst z " << worst << ", " << t << " s")
              .str()};
}

// 9 -------------------------------------------------------------------------
Outcome taxonomy_simulation() {
  const auto bundle = io::parse_inputs(io::read_file(data_path("diamond_taxonomy.json")),
                                       io::read_file(data_path("diamond_profiles.json")));
  const auto& t = bundle.taxonomy;
  const TaxonomySampler sampler(t, 42);
  std::size_t inconsistent = 0;
  const std::uint64_t m = 100000;
  for (std::uint64_t d = 0; d < m; ++d) {
    inconsistent += check_label_consistency(t, sampler.sample_labels(d)).consistent ? 0 : 1;
  }
  SimConfig cfg;
  cfg.m = m;
  cfg.mode = SimMode::Taxonomy;
  const auto outcomes = simulate_taxonomy(t, bundle.profiles, cfg);
  bool all = outcomes.size() == 5;
  double worst = 0.0;
  for (const auto& po : outcomes) {
    const auto dev = compare(omega_recursive(po.pipeline, bundle.profiles), po.outcome);
    all = all && dev.pass;
    worst = std::max(worst, dev.max_z);
  }
  return {inconsistent == 0 && all,
          (Fmt() << inconsistent << " inconsistent label sets in " << m << ", "
                 << outcomes.size() << " pipelines, worst z " << worst)
              .str()};
}

// 10 ------------------------------------------------------------------------
Outcome determinism() {
  const std::vector<std::string> inputs{"--taxonomy", data_path("diamond_taxonomy.json"),
                                        "--profiles", data_path("diamond_profiles.json")};
  const std::vector<std::vector<std::string>> commands{
      {"analyze"},
      {"analyze", "--format", "tsv"},
      {"simulate", "--m", "20000", "--replications", "3"},
      {"simulate", "--m", "20000", "--format", "tsv", "--workers", "3"},
  };
  bool ok = true;
  std::size_t bytes = 0;
  for (auto cmd : commands) {
    cmd.insert(cmd.end(), inputs.begin(), inputs.end());
    std::ostringstream a, b, err;
    const int ca = run_cli(cmd, a, err);
    const int cb = run_cli(cmd, b, err);
    ok = ok && ca == kExitOk && cb == kExitOk && !a.str().empty() && a.str() == b.str();
    bytes += a.str().size();
  }
  return {ok, (Fmt() << commands.size() << " commands run twice, " << bytes
                     << " bytes compared")
                  .str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"monoid laws of oplus", monoid},
      {"oracle equivalence L<=6", oracle_equivalence},
      {"long pipeline stability L=64", long_pipelines},
      {"factorization", factorization},
      {"homomorphism", homomorphism},
      {"metrics", metrics},
      {"degenerate handling", degenerate},
      {"Monte-Carlo single step", monte_carlo},
      {"taxonomy simulation", taxonomy_simulation},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
  }
  std::fflush(stdout);
  return failed;
}
