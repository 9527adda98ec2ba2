#include "pfcalc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pfcalc/error.hpp"
#include "pfcalc/io.hpp"
#include "pfcalc/simulator.hpp"

namespace pfcalc {

using nlohmann::ordered_json;

namespace {

struct Options {
  std::string taxonomy;
  std::string profiles;
  std::string out;
  std::string format = "json";
  std::uint64_t seed = 42;
  std::uint64_t m = 100000;
  std::uint32_t replications = 1;
  double tol = 1e-12;
  double z_threshold = 4.0;
  bool leaf_only = false;
  std::string pipeline;
  std::string mode = "taxonomy";
  double min_pass_rate = 0.99;
  double target = 0.1;
  std::size_t n_distributions = 100;
  std::size_t max_len = 6;
  std::size_t random = 0;
  unsigned workers = 1;
};

io::ReportFormat report_format(const Options& o) {
  return o.format == "tsv" ? io::ReportFormat::Tsv : io::ReportFormat::Json;
}

ordered_json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  const auto text = io::format_real(v);
  const double rounded = std::strtod(text.c_str(), nullptr);
  return rounded == 0.0 ? 0.0 : rounded;
}

ordered_json matrix(const Matrix2& m) {
  return ordered_json::array({ordered_json::array({real(m.v00), real(m.v01)}),
                              ordered_json::array({real(m.v10), real(m.v11)})});
}

std::string opt_text(const std::optional<double>& v) {
  return v ? io::format_real(*v) : "NA";
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out, std::ios::binary);
  if (!file) throw Error(ErrorKind::InvalidArgument, "cannot write file", o.out);
  file << text;
}

io::InputBundle load(const Options& o) {
  if (o.taxonomy.empty()) throw Error(ErrorKind::InvalidArgument, "--taxonomy is required");
  if (o.profiles.empty()) throw Error(ErrorKind::InvalidArgument, "--profiles is required");
  return io::parse_inputs(io::read_file(o.taxonomy), io::read_file(o.profiles));
}

std::vector<Pipeline> selected_pipelines(const Options& o, const Taxonomy& t) {
  if (!o.pipeline.empty()) return {make_pipeline(t, o.pipeline)};
  return enumerate_pipelines(t, o.leaf_only);
}

// ---------------------------------------------------------------------------

int cmd_pipelines(const Options& o, std::ostream& out) {
  if (o.taxonomy.empty()) throw Error(ErrorKind::InvalidArgument, "--taxonomy is required");
  const auto t = io::parse_taxonomy(io::read_file(o.taxonomy));
  const auto list = enumerate_pipelines(t, o.leaf_only);
  std::string text;
  if (o.format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& p : list) arr.push_back(p.path());
    text = arr.dump(2) + "\n";
  } else {
    for (const auto& p : list) text += p.path() + "\n";
  }
  emit(o, text, out);
  return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const auto bundle = load(o);
  std::optional<std::string> only;
  if (!o.pipeline.empty()) only = o.pipeline;
  const auto report = io::build_report(bundle, o.leaf_only, only);
  emit(o, io::write_report(report, report_format(o)), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyRow {
  std::string name;
  std::size_t length = 0;
  bool enumerated = false;
  double exact_vs_recursive = 0.0;
  double exact_vs_closed = 0.0;
  double closed_vs_recursive = 0.0;
  double sum_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

VerifyRow verify_one(std::string name, const ResolvedPipeline& p, const Options& o) {
  VerifyRow row;
  row.name = std::move(name);
  row.length = p.length();
  const auto rec = omega_recursive(p).matrix();
  const auto closed = omega_closed(p).matrix();
  row.closed_vs_recursive = max_abs_diff(rec, closed);
  row.sum_error = std::abs(rec.sum() - 1.0);
  row.enumerated = p.length() <= o.max_len;
  // Beyond the enumeration limit only the two analytic forms are compared,
  // and rounding grows with the length.
  row.tolerance = row.enumerated ? o.tol : std::max(o.tol, 1e-9);
  if (row.enumerated) {
    const auto exact = enumerate_exact(p).matrix();
    row.exact_vs_recursive = max_abs_diff(exact, rec);
    row.exact_vs_closed = max_abs_diff(exact, closed);
  }
  row.pass = row.closed_vs_recursive <= row.tolerance && row.sum_error <= row.tolerance &&
             row.exact_vs_recursive <= row.tolerance && row.exact_vs_closed <= row.tolerance;
  return row;
}

/// Pipelines with random f and random classifiers, addressed by
/// (seed, index) so the set does not depend on how many are requested.
ResolvedPipeline random_pipeline(const CounterRng& rng, std::size_t index,
                                 std::size_t max_len) {
  constexpr std::uint32_t kStream = 3;
  const std::size_t len =
      1 + static_cast<std::size_t>(rng.uniform(index, 0, kStream) *
                                   static_cast<double>(std::max<std::size_t>(max_len, 1)));
  std::vector<double> fs;
  std::vector<NormalizedConfusionMatrix> gammas;
  for (std::size_t k = 1; k <= len; ++k) {
    const auto slot = static_cast<std::uint32_t>(3 * k);
    fs.push_back(rng.uniform(index, slot, kStream));
    gammas.push_back(NormalizedConfusionMatrix::from_positive_rates(
        rng.uniform(index, slot + 1, kStream), rng.uniform(index, slot + 2, kStream)));
  }
  return ResolvedPipeline::from_stages(fs, gammas);
}

int cmd_verify(const Options& o, std::ostream& out) {
  std::vector<VerifyRow> rows;
  if (!o.taxonomy.empty() || o.random == 0) {
    const auto bundle = load(o);
    for (const auto& p : selected_pipelines(o, bundle.taxonomy)) {
      rows.push_back(verify_one(p.path(), resolve(p, bundle.profiles), o));
    }
  }
  const CounterRng rng(o.seed);
  for (std::size_t i = 0; i < o.random; ++i) {
    rows.push_back(verify_one("random/" + std::to_string(i),
                              random_pipeline(rng, i, o.max_len), o));
  }

  std::size_t failures = 0;
  for (const auto& r : rows) failures += r.pass ? 0 : 1;

  std::string text;
  if (report_format(o) == io::ReportFormat::Tsv) {
    text = "pipeline\tlength\tenumerated\texact_vs_recursive\texact_vs_closed\t"
           "closed_vs_recursive\tsum_error\ttolerance\tpass\n";
    for (const auto& r : rows) {
      text += r.name + '\t' + std::to_string(r.length) + '\t' +
              (r.enumerated ? "yes" : "no") + '\t' +
              (r.enumerated ? io::format_real(r.exact_vs_recursive) : "NA") + '\t' +
              (r.enumerated ? io::format_real(r.exact_vs_closed) : "NA") + '\t' +
              io::format_real(r.closed_vs_recursive) + '\t' + io::format_real(r.sum_error) +
              '\t' + io::format_real(r.tolerance) + '\t' + (r.pass ? "PASS" : "FAIL") + '\n';
    }
  } else {
    ordered_json doc;
    doc["checked"] = rows.size();
    doc["failures"] = failures;
    ordered_json list = ordered_json::array();
    for (const auto& r : rows) {
      ordered_json j;
      j["pipeline"] = r.name;
      j["length"] = r.length;
      j["enumerated"] = r.enumerated;
      j["exact_vs_recursive"] = r.enumerated ? real(r.exact_vs_recursive) : nullptr;
      j["exact_vs_closed"] = r.enumerated ? real(r.exact_vs_closed) : nullptr;
      j["closed_vs_recursive"] = real(r.closed_vs_recursive);
      j["sum_error"] = real(r.sum_error);
      j["tolerance"] = real(r.tolerance);
      j["pass"] = r.pass;
      list.push_back(j);
    }
    doc["checks"] = list;
    text = doc.dump(2) + "\n";
  }
  emit(o, text, out);
  return failures == 0 ? kExitOk : kExitVerificationFailed;
}

// ---------------------------------------------------------------------------

struct SimRun {
  std::uint64_t seed = 0;
  Matrix2 empirical;
  double max_z = 0.0;
  bool pass = true;
};

struct SimBlock {
  std::string pipeline;
  JointMatrix omega = JointMatrix::root();
  std::vector<SimRun> runs;
};

int cmd_simulate(const Options& o, std::ostream& out) {
  const auto bundle = load(o);
  SimConfig cfg;
  cfg.m = o.m;
  cfg.seed = o.seed;
  cfg.replications = o.replications;
  cfg.workers = o.workers;
  cfg.mode = o.mode == "pipeline" ? SimMode::Pipeline : SimMode::Taxonomy;
  cfg.validate();
  if (!(o.min_pass_rate >= 0.0 && o.min_pass_rate <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "--min-pass-rate must lie in [0,1]");
  }

  const auto pipelines = selected_pipelines(o, bundle.taxonomy);
  std::vector<SimBlock> blocks;
  for (const auto& p : pipelines) {
    blocks.push_back({p.path(), omega_recursive(p, bundle.profiles), {}});
  }

  std::uint32_t passed = 0;
  for (std::uint32_t r = 0; r < cfg.replications; ++r) {
    SimConfig run = cfg;
    run.seed = cfg.seed + r;
    std::vector<SimOutcome> outcomes;
    if (cfg.mode == SimMode::Taxonomy) {
      auto all = simulate_taxonomy(bundle.taxonomy, bundle.profiles, run, o.leaf_only);
      for (const auto& p : pipelines) {
        auto it = std::find_if(all.begin(), all.end(),
                               [&](const PipelineOutcome& x) { return x.pipeline == p; });
        if (it == all.end()) {
          // --pipeline selected a non-leaf path while --leaf-only is set.
          throw Error(ErrorKind::InvalidArgument, "pipeline not simulated", p.path());
        }
        outcomes.push_back(it->outcome);
      }
    } else {
      for (const auto& p : pipelines) {
        outcomes.push_back(simulate_pipeline(p, bundle.profiles, run));
      }
    }
    bool all_pass = true;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto dev = compare(blocks[i].omega, outcomes[i], o.z_threshold);
      blocks[i].runs.push_back({run.seed, outcomes[i].empirical_omega(), dev.max_z, dev.pass});
      all_pass = all_pass && dev.pass;
    }
    passed += all_pass ? 1 : 0;
  }
  const double pass_rate = static_cast<double>(passed) / cfg.replications;
  const bool ok = pass_rate >= o.min_pass_rate;

  std::string text;
  if (report_format(o) == io::ReportFormat::Tsv) {
    text = "pipeline\tseed\tm\tw00\tw01\tw10\tw11\txi00\txi01\txi10\txi11\tmax_z\tpass\n";
    for (const auto& b : blocks) {
      const auto& w = b.omega.matrix();
      for (const auto& run : b.runs) {
        text += b.pipeline + '\t' + std::to_string(run.seed) + '\t' + std::to_string(o.m) +
                '\t' + io::format_real(w.v00) + '\t' + io::format_real(w.v01) + '\t' +
                io::format_real(w.v10) + '\t' + io::format_real(w.v11) + '\t' +
                io::format_real(run.empirical.v00) + '\t' +
                io::format_real(run.empirical.v01) + '\t' +
                io::format_real(run.empirical.v10) + '\t' +
                io::format_real(run.empirical.v11) + '\t' + io::format_real(run.max_z) +
                '\t' + (run.pass ? "PASS" : "FAIL") + '\n';
      }
    }
  } else {
    ordered_json doc;
    doc["mode"] = cfg.mode == SimMode::Taxonomy ? "taxonomy" : "pipeline";
    doc["m"] = o.m;
    doc["seed"] = o.seed;
    doc["replications"] = o.replications;
    doc["z_threshold"] = real(o.z_threshold);
    doc["min_pass_rate"] = real(o.min_pass_rate);
    doc["passed_replications"] = passed;
    doc["pass"] = ok;
    ordered_json list = ordered_json::array();
    for (const auto& b : blocks) {
      ordered_json j;
      j["pipeline"] = b.pipeline;
      j["omega"] = matrix(b.omega.matrix());
      ordered_json runs = ordered_json::array();
      for (const auto& run : b.runs) {
        ordered_json rj;
        rj["seed"] = run.seed;
        rj["empirical_omega"] = matrix(run.empirical);
        rj["max_z"] = real(run.max_z);
        rj["pass"] = run.pass;
        runs.push_back(rj);
      }
      j["runs"] = runs;
      list.push_back(j);
    }
    doc["pipelines"] = list;
    text = doc.dump(2) + "\n";
  }
  emit(o, text, out);
  return ok ? kExitOk : kExitVerificationFailed;
}

// ---------------------------------------------------------------------------

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto bundle = load(o);
  if (o.pipeline.empty()) throw Error(ErrorKind::InvalidArgument, "--pipeline is required");
  const auto p = make_pipeline(bundle.taxonomy, o.pipeline);
  // The f chain is replaced by the sweep, so the edges need no probabilities.
  std::vector<NormalizedConfusionMatrix> gammas;
  for (std::size_t k = 1; k <= p.length(); ++k) {
    gammas.push_back(bundle.profiles.resolve_at(p.nodes().first(k + 1)));
  }
  const std::vector<double> ones(p.length(), 1.0);
  const auto resolved = ResolvedPipeline::from_stages(ones, gammas);
  SimConfig cfg;
  cfg.seed = o.seed;
  const auto sweep = imbalance_sweep(resolved, o.target, o.n_distributions, cfg);

  std::string text;
  if (report_format(o) == io::ReportFormat::Tsv) {
    text = "row";
    for (std::size_t k = 1; k <= p.length(); ++k) text += "\tf_" + std::to_string(k);
    text += "\tw00\tw01\tw10\tw11\ttP\ttR\ttF1\ttA\n";
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
      const auto& row = sweep.rows[i];
      text += std::to_string(i);
      for (std::size_t k = 1; k < row.fs.size(); ++k) text += '\t' + io::format_real(row.fs[k]);
      const auto& w = row.omega.matrix();
      text += '\t' + io::format_real(w.v00) + '\t' + io::format_real(w.v01) + '\t' +
              io::format_real(w.v10) + '\t' + io::format_real(w.v11) + '\t' +
              opt_text(row.metrics.precision) + '\t' + opt_text(row.metrics.recall) + '\t' +
              opt_text(row.metrics.f1) + '\t' + io::format_real(row.metrics.accuracy) + '\n';
    }
  } else {
    auto spread = [](const Spread& s) {
      ordered_json j;
      j["min"] = real(s.min);
      j["max"] = real(s.max);
      j["mean"] = real(s.mean);
      j["count"] = s.count;
      return j;
    };
    ordered_json doc;
    doc["pipeline"] = p.path();
    doc["target"] = real(sweep.target);
    doc["seed"] = o.seed;
    doc["tP"] = spread(sweep.precision);
    doc["tR"] = spread(sweep.recall);
    doc["tF1"] = spread(sweep.f1);
    ordered_json rows = ordered_json::array();
    for (const auto& row : sweep.rows) {
      ordered_json j;
      ordered_json fs = ordered_json::array();
      for (double f : row.fs) fs.push_back(real(f));
      j["conditional_probabilities"] = fs;
      j["omega"] = matrix(row.omega.matrix());
      j["tP"] = row.metrics.precision ? real(*row.metrics.precision) : nullptr;
      j["tR"] = row.metrics.recall ? real(*row.metrics.recall) : nullptr;
      j["tF1"] = row.metrics.f1 ? real(*row.metrics.f1) : nullptr;
      j["tA"] = real(row.metrics.accuracy);
      rows.push_back(j);
    }
    doc["rows"] = rows;
    text = doc.dump(2) + "\n";
  }
  emit(o, text, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expected confusion matrices of progressive-filtering pipelines", "pfcalc"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool profiles) {
    sub->add_option("--taxonomy", o.taxonomy, "taxonomy JSON file");
    if (profiles) sub->add_option("--profiles", o.profiles, "classifier profile JSON file");
    sub->add_option("--out", o.out, "write the report here instead of standard output");
    sub->add_option("--format", o.format, "json or tsv")
        ->check(CLI::IsMember({"json", "tsv"}));
    sub->add_flag("--leaf-only", o.leaf_only, "only leaf-terminated pipelines");
  };

  auto* pipelines = app.add_subcommand("pipelines", "list the pipelines of a taxonomy");
  common(pipelines, false);
  pipelines->get_option("--format")->default_str("text");

  auto* analyze = app.add_subcommand("analyze", "model report for every pipeline");
  common(analyze, true);
  analyze->add_option("--pipeline", o.pipeline, "only this slash-joined pipeline");

  auto* verify = app.add_subcommand("verify", "cross-check enumeration, recursion, closed form");
  common(verify, true);
  verify->add_option("--pipeline", o.pipeline, "only this slash-joined pipeline");
  verify->add_option("--tol", o.tol, "maximum allowed elementwise deviation");
  verify->add_option("--max-len", o.max_len, "longest pipeline checked by enumeration");
  verify->add_option("--random", o.random, "additional random pipelines to check");
  verify->add_option("--seed", o.seed, "seed for --random");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo check of the model");
  common(simulate, true);
  simulate->add_option("--pipeline", o.pipeline, "only this slash-joined pipeline");
  simulate->add_option("--seed", o.seed, "base seed; replication r uses seed + r");
  simulate->add_option("--m", o.m, "documents per replication");
  simulate->add_option("--replications", o.replications, "number of seeded runs");
  simulate->add_option("--z-threshold", o.z_threshold, "largest accepted per-cell z score");
  simulate->add_option("--min-pass-rate", o.min_pass_rate,
                       "fraction of replications that must pass");
  simulate->add_option("--mode", o.mode, "taxonomy or pipeline")
      ->check(CLI::IsMember({"taxonomy", "pipeline"}));
  simulate->add_option("--workers", o.workers, "threads per run");

  auto* sweep = app.add_subcommand("sweep", "metrics over input distributions of equal imbalance");
  common(sweep, true);
  sweep->add_option("--pipeline", o.pipeline, "slash-joined pipeline to sweep");
  sweep->add_option("--target", o.target, "product of the conditional probabilities");
  sweep->add_option("--n-distributions", o.n_distributions, "number of f chains");
  sweep->add_option("--seed", o.seed, "seed of the random chains");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (*pipelines) {
      if (o.format == "json" && pipelines->count("--format") == 0) o.format = "text";
      return cmd_pipelines(o, out);
    }
    if (*analyze) return cmd_analyze(o, out);
    if (*verify) return cmd_verify(o, out);
    if (*simulate) return cmd_simulate(o, out);
    if (*sweep) return cmd_sweep(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace pfcalc
