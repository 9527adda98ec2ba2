#include "pfcalc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pfcalc/error.hpp"

namespace pfcalc::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ":" + std::to_string(col);
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character.
    throw Error(ErrorKind::SyntaxError,
                std::string(what) + " is not valid JSON",
                line_column(text, e.byte > 0 ? e.byte - 1 : 0));
  }
}

[[noreturn]] void syntax(const std::string& pointer, const std::string& message) {
  throw Error(ErrorKind::SyntaxError, message, pointer);
}

const json& member(const json& obj, const std::string& key, const std::string& pointer) {
  if (!obj.is_object()) syntax(pointer, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) syntax(pointer + "/" + key, "missing field");
  return *it;
}

std::string as_string(const json& v, const std::string& pointer) {
  if (!v.is_string()) syntax(pointer, "expected a string");
  return v.get<std::string>();
}

double as_probability(const json& v, const std::string& pointer) {
  if (!v.is_number()) syntax(pointer, "expected a number");
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorKind::OutOfRangeProbability,
                "probability " + format_real(x) + " outside [0,1]", pointer);
  }
  return x;
}

const json& as_array(const json& v, const std::string& pointer) {
  if (!v.is_array()) syntax(pointer, "expected an array");
  return v;
}

CategoryId as_category(const json& v, const std::string& pointer) {
  try {
    return CategoryId(as_string(v, pointer));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidName) {
      throw Error(ErrorKind::InvalidName, "category names must not be blank", pointer);
    }
    throw;
  }
}

/// Reads tn/fp/fn/tp, checks each row against the input tolerance and
/// rescales it to sum to 1.
NormalizedConfusionMatrix read_rates(const json& obj, const std::string& pointer,
                                     std::vector<std::string>* notes) {
  const double tn = as_probability(member(obj, "tn", pointer), pointer + "/tn");
  const double fp = as_probability(member(obj, "fp", pointer), pointer + "/fp");
  const double fn = as_probability(member(obj, "fn", pointer), pointer + "/fn");
  const double tp = as_probability(member(obj, "tp", pointer), pointer + "/tp");

  auto row = [&](double zero, double one, const char* label) {
    const double sum = zero + one;
    if (std::abs(sum - 1.0) > kInputRowTolerance) {
      throw Error(ErrorKind::OutOfRangeProbability,
                  std::string(label) + " row sums to " + format_real(sum),
                  pointer + " (" + label + " row)");
    }
    if (sum != 1.0 && notes) {
      notes->push_back(pointer + " " + label + " row sum " + format_real(sum) +
                       " rescaled to 1");
    }
    return one / sum;
  };
  const double fp_rate = row(tn, fp, "negative");
  const double tp_rate = row(fn, tp, "positive");
  return NormalizedConfusionMatrix::from_positive_rates(fp_rate, tp_rate);
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> keys,
                         const std::string& pointer) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      syntax(pointer + "/" + it.key(), "unexpected field");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

Taxonomy parse_taxonomy(std::string_view text) {
  const json doc = parse_json(text, "taxonomy");
  if (!doc.is_object()) syntax("", "taxonomy must be a JSON object");
  reject_unknown_keys(doc, {"root", "categories", "edges"}, "");

  RawTaxonomy raw;
  raw.root = as_string(member(doc, "root", ""), "/root");
  const auto& cats = as_array(member(doc, "categories", ""), "/categories");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    raw.categories.push_back(as_string(cats[i], "/categories/" + std::to_string(i)));
  }
  if (doc.contains("edges")) {
    const auto& edges = as_array(doc["edges"], "/edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string ptr = "/edges/" + std::to_string(i);
      reject_unknown_keys(edges[i], {"child", "parent", "f"}, ptr);
      RawEdge e;
      e.child = as_string(member(edges[i], "child", ptr), ptr + "/child");
      e.parent = as_string(member(edges[i], "parent", ptr), ptr + "/parent");
      if (edges[i].contains("f") && !edges[i]["f"].is_null()) {
        e.f = as_probability(edges[i]["f"], ptr + "/f");
      }
      raw.edges.push_back(std::move(e));
    }
  }

  try {
    return Taxonomy::validate(raw);
  } catch (const Error& e) {
    // Map validation locations onto JSON pointers where they name an edge.
    std::string loc = e.location();
    if (loc.rfind("edges[", 0) == 0) {
      loc = "/edges/" + loc.substr(6, loc.size() - 7);
    }
    std::string msg = e.what();
    msg = msg.substr(msg.find(": ") + 2);
    throw Error(e.kind(), msg, loc);
  }
}

ClassifierProfileSet parse_profiles(std::string_view text, const Taxonomy& t,
                                    std::vector<std::string>* renormalized) {
  const json doc = parse_json(text, "profiles");
  if (!doc.is_object()) syntax("", "profiles must be a JSON object");
  reject_unknown_keys(doc, {"classifiers", "overrides"}, "");

  ClassifierProfileSet profiles(t.root());
  const auto& classifiers = member(doc, "classifiers", "");
  if (!classifiers.is_object()) syntax("/classifiers", "expected an object");
  for (auto it = classifiers.begin(); it != classifiers.end(); ++it) {
    const std::string ptr = "/classifiers/" + it.key();
    const CategoryId c = as_category(json(it.key()), ptr);
    if (!t.contains(c)) {
      throw Error(ErrorKind::UnknownCategory, "no such category in the taxonomy", ptr);
    }
    if (c == t.root()) {
      throw Error(ErrorKind::RootProfileForbidden,
                  "the root always behaves as the neutral classifier", ptr);
    }
    reject_unknown_keys(it.value(), {"tn", "fp", "fn", "tp"}, ptr);
    profiles.set(c, read_rates(it.value(), ptr, renormalized));
  }

  if (doc.contains("overrides")) {
    const auto& overrides = as_array(doc["overrides"], "/overrides");
    for (std::size_t i = 0; i < overrides.size(); ++i) {
      const std::string ptr = "/overrides/" + std::to_string(i);
      reject_unknown_keys(overrides[i], {"pipeline", "category", "tn", "fp", "fn", "tp"},
                          ptr);
      const auto path = as_string(member(overrides[i], "pipeline", ptr), ptr + "/pipeline");
      const auto c = as_category(member(overrides[i], "category", ptr), ptr + "/category");
      std::vector<CategoryId> nodes;
      try {
        nodes = split_path(path);
      } catch (const Error&) {
        syntax(ptr + "/pipeline", "malformed pipeline path");
      }
      for (const auto& n : nodes) {
        if (!t.contains(n)) {
          throw Error(ErrorKind::UnknownCategory, "unknown category '" + n.str() + "'",
                      ptr + "/pipeline");
        }
      }
      if (!t.contains(c)) {
        throw Error(ErrorKind::UnknownCategory, "no such category in the taxonomy",
                    ptr + "/category");
      }
      if (c == t.root()) {
        throw Error(ErrorKind::RootProfileForbidden,
                    "the root always behaves as the neutral classifier", ptr);
      }
      try {
        make_pipeline(t, nodes);
        profiles.set_override(path, c, read_rates(overrides[i], ptr, renormalized));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InvalidArgument) throw;
        std::string msg = e.what();
        throw Error(ErrorKind::InvalidArgument, msg.substr(msg.find(": ") + 2), ptr);
      }
    }
  }
  return profiles;
}

InstanceLabeling parse_labeling(std::string_view text, const Taxonomy& t) {
  const json doc = parse_json(text, "labeling");
  const auto& instances = as_array(member(doc, "instances", ""), "/instances");
  std::vector<InstanceLabeling::Entry> entries;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string ptr = "/instances/" + std::to_string(i);
    const auto id = as_string(member(instances[i], "id", ptr), ptr + "/id");
    const auto& labels = as_array(member(instances[i], "labels", ptr), ptr + "/labels");
    LabelSet set;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const std::string lptr = ptr + "/labels/" + std::to_string(j);
      auto c = as_category(labels[j], lptr);
      if (!t.contains(c)) {
        throw Error(ErrorKind::UnknownCategory, "no such category in the taxonomy", lptr);
      }
      set.insert(std::move(c));
    }
    entries.emplace_back(id, std::move(set));
  }
  return InstanceLabeling::validate(t, std::move(entries));
}

InputBundle parse_inputs(std::string_view taxonomy_text, std::string_view profiles_text) {
  auto taxonomy = parse_taxonomy(taxonomy_text);
  std::vector<std::string> notes;
  auto profiles = parse_profiles(profiles_text, taxonomy, &notes);
  return InputBundle{std::move(taxonomy), std::move(profiles), std::nullopt,
                     std::move(notes)};
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

namespace {

/// Rounds to 12 significant digits; the shortest round-trip form of the
/// result is what the JSON writer prints.
ordered_json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  double rounded = 0.0;
  const auto text = format_real(v);
  std::from_chars(text.data(), text.data() + text.size(), rounded);
  return rounded == 0.0 ? 0.0 : rounded;  // no "-0.0"
}

ordered_json real(const std::optional<double>& v) {
  return v ? real(*v) : ordered_json(nullptr);
}

ordered_json matrix(const Matrix2& m) {
  return ordered_json::array({ordered_json::array({real(m.v00), real(m.v01)}),
                              ordered_json::array({real(m.v10), real(m.v11)})});
}

ordered_json rates(const NormalizedConfusionMatrix& g) {
  ordered_json o;
  o["tn"] = real(g.tn());
  o["fp"] = real(g.fp());
  o["fn"] = real(g.fn());
  o["tp"] = real(g.tp());
  return o;
}

ordered_json flags(const MetricFlags& f) {
  ordered_json out = ordered_json::array();
  if (f.precision_undefined) out.push_back("PrecisionUndefined");
  if (f.recall_undefined) out.push_back("RecallUndefined");
  if (f.f1_undefined) out.push_back("F1Undefined");
  if (f.f1_zero_component) out.push_back("F1ZeroComponent");
  return out;
}

ordered_json metrics(const MetricReport& r) {
  ordered_json o;
  o["tP"] = real(r.precision);
  o["tR"] = real(r.recall);
  o["tF1"] = real(r.f1);
  o["tA"] = real(r.accuracy);
  o["flags"] = flags(r.flags);
  return o;
}

std::string verdict_text(const DepthStep& s) {
  if (s.k == 0) return "-";
  if (s.bound_degenerate || !s.verdict) return "Degenerate";
  return std::string(to_string(*s.verdict));
}

}  // namespace

std::string serialize_taxonomy(const Taxonomy& t) {
  ordered_json doc;
  doc["root"] = t.root().str();
  ordered_json cats = ordered_json::array();
  for (const auto& c : t.categories()) cats.push_back(c.str());
  doc["categories"] = cats;
  ordered_json edges = ordered_json::array();
  for (const auto& e : t.edges()) {
    ordered_json edge;
    edge["child"] = e.child;
    edge["parent"] = e.parent;
    if (e.f) edge["f"] = *e.f;
    edges.push_back(edge);
  }
  doc["edges"] = edges;
  return doc.dump(2) + "\n";
}

std::string serialize_profiles(const ClassifierProfileSet& profiles) {
  ordered_json doc;
  ordered_json classifiers = ordered_json::object();
  auto exact = [](const NormalizedConfusionMatrix& g) {
    ordered_json o;
    o["tn"] = g.tn();
    o["fp"] = g.fp();
    o["fn"] = g.fn();
    o["tp"] = g.tp();
    return o;
  };
  for (const auto& [c, g] : profiles.classifiers()) classifiers[c.str()] = exact(g);
  doc["classifiers"] = classifiers;
  ordered_json overrides = ordered_json::array();
  for (const auto& [path, g] : profiles.overrides()) {
    ordered_json o;
    o["pipeline"] = path;
    o["category"] = split_path(path).back().str();
    const auto rates = exact(g);
    for (auto it = rates.begin(); it != rates.end(); ++it) o[it.key()] = it.value();
    overrides.push_back(o);
  }
  doc["overrides"] = overrides;
  return doc.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

PipelineReport analyze_pipeline(const Pipeline& p, const ClassifierProfileSet& profiles) {
  auto resolved = resolve(p, profiles);
  auto omega = omega_recursive(resolved);
  auto factorization = factorize(resolved);
  auto m = pipeline_metrics(omega);
  auto depth = depth_profile(resolved);
  return PipelineReport{p, std::move(resolved), omega, factorization, m, std::move(depth)};
}

Report build_report(const InputBundle& bundle, bool leaf_only,
                    const std::optional<std::string>& only_path) {
  const auto& t = bundle.taxonomy;
  Report r;
  r.root = t.root().str();
  r.category_count = t.size();
  r.edge_count = t.edge_count();
  for (std::size_t i = 0; i < t.size(); ++i) r.leaf_count += t.is_leaf(i) ? 1 : 0;
  r.renormalized = bundle.renormalized;

  std::vector<Pipeline> pipelines;
  if (only_path) {
    pipelines.push_back(make_pipeline(t, *only_path));
  } else {
    pipelines = enumerate_pipelines(t, leaf_only);
  }
  for (const auto& p : pipelines) r.pipelines.push_back(analyze_pipeline(p, bundle.profiles));
  return r;
}

std::string write_report(const Report& r, ReportFormat format) {
  if (format == ReportFormat::Tsv) {
    std::string out =
        "pipeline\tk\tf_k\tw00\tw01\tw10\tw11\ttP\ttR\ttF1\ttA\tprecision_verdict\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : "NA"; };
    for (const auto& pr : r.pipelines) {
      const auto path = pr.pipeline.path();
      for (const auto& s : pr.depth.steps) {
        const auto& w = s.omega.matrix();
        out += path + '\t' + std::to_string(s.k) + '\t' + format_real(s.f) + '\t' +
               format_real(w.v00) + '\t' + format_real(w.v01) + '\t' + format_real(w.v10) +
               '\t' + format_real(w.v11) + '\t' + opt(s.metrics.precision) + '\t' +
               opt(s.metrics.recall) + '\t' + opt(s.metrics.f1) + '\t' +
               format_real(s.metrics.accuracy) + '\t' + verdict_text(s) + '\n';
      }
    }
    return out;
  }

  ordered_json doc;
  ordered_json summary;
  summary["root"] = r.root;
  summary["categories"] = r.category_count;
  summary["edges"] = r.edge_count;
  summary["leaves"] = r.leaf_count;
  doc["taxonomy"] = summary;
  doc["pipeline_count"] = r.pipelines.size();
  doc["renormalized"] = r.renormalized;

  ordered_json list = ordered_json::array();
  for (const auto& pr : r.pipelines) {
    ordered_json p;
    p["pipeline"] = pr.pipeline.path();
    p["length"] = pr.pipeline.length();
    ordered_json fs = ordered_json::array();
    for (double f : pr.resolved.fs()) fs.push_back(real(f));
    p["conditional_probabilities"] = fs;
    p["omega"] = matrix(pr.omega.matrix());
    ordered_json prior;
    prior["negative"] = real(pr.factorization.prior_negative);
    prior["positive"] = real(pr.factorization.prior_positive);
    p["prior"] = prior;
    p["phi"] = rates(pr.factorization.phi);
    p["psi"] = rates(pr.factorization.psi);
    p["eta"] = pr.factorization.eta_status == EtaStatus::Finite
                   ? real(pr.factorization.eta)
                   : ordered_json(nullptr);
    p["eta_status"] = std::string(to_string(pr.factorization.eta_status));
    p["metrics"] = metrics(pr.metrics);

    ordered_json steps = ordered_json::array();
    for (const auto& s : pr.depth.steps) {
      ordered_json step;
      step["k"] = s.k;
      step["f"] = real(s.f);
      step["omega"] = matrix(s.omega.matrix());
      step["metrics"] = metrics(s.metrics);
      step["precision_verdict"] = verdict_text(s);
      step["precision_bound"] = real(s.bound);
      steps.push_back(step);
    }
    p["depth_profile"] = steps;
    p["recall_non_increasing"] = pr.depth.recall_non_increasing;
    list.push_back(p);
  }
  doc["pipelines"] = list;
  return doc.dump(2) + "\n";
}

}  // namespace pfcalc::io
