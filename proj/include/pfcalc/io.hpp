#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfcalc/metrics.hpp"
#include "pfcalc/pipeline_model.hpp"
#include "pfcalc/simulator.hpp"
#include "pfcalc/taxonomy.hpp"

namespace pfcalc::io {

/// Row sums accepted on input; rows are rescaled to sum exactly to 1.
inline constexpr double kInputRowTolerance = 1e-9;

struct InputBundle {
  Taxonomy taxonomy;
  ClassifierProfileSet profiles;
  std::optional<InstanceLabeling> labeling;
  /// One note per classifier row that had to be rescaled.
  std::vector<std::string> renormalized;
};

/// {"root": "A", "categories": [...], "edges": [{"child", "parent", "f"?}]}
Taxonomy parse_taxonomy(std::string_view text);

/// {"classifiers": {"B": {"tn","fp","fn","tp"}}, "overrides": [{"pipeline",
/// "category", "tn","fp","fn","tp"}]}. Rescaled rows are appended to
/// `renormalized` when given.
ClassifierProfileSet parse_profiles(std::string_view text, const Taxonomy& t,
                                    std::vector<std::string>* renormalized = nullptr);

/// {"instances": [{"id": "d1", "labels": ["D"]}]}
InstanceLabeling parse_labeling(std::string_view text, const Taxonomy& t);

/// Errors carry the JSON pointer of the offending field, or line:column for
/// syntax errors.
InputBundle parse_inputs(std::string_view taxonomy_text, std::string_view profiles_text);

std::string serialize_taxonomy(const Taxonomy& t);
std::string serialize_profiles(const ClassifierProfileSet& profiles);

/// Reads a whole file; throws InvalidArgument if it cannot be opened.
std::string read_file(const std::string& path);

/// Real number with 12 significant digits, independent of locale.
std::string format_real(double v);

struct PipelineReport {
  Pipeline pipeline;
  ResolvedPipeline resolved;
  JointMatrix omega;
  Factorization factorization;
  MetricReport metrics;
  DepthProfile depth;
};

struct Report {
  std::string root;
  std::size_t category_count = 0;
  std::size_t edge_count = 0;
  std::size_t leaf_count = 0;
  std::vector<std::string> renormalized;
  /// Sorted lexicographically by node sequence.
  std::vector<PipelineReport> pipelines;
};

PipelineReport analyze_pipeline(const Pipeline& p, const ClassifierProfileSet& profiles);

/// Every pipeline (or only leaf-terminated ones, or only `only_path`).
Report build_report(const InputBundle& bundle, bool leaf_only = false,
                    const std::optional<std::string>& only_path = std::nullopt);

enum class ReportFormat { Json, Tsv };

/// Byte-identical output for identical reports.
std::string write_report(const Report& r, ReportFormat format);

}  // namespace pfcalc::io
