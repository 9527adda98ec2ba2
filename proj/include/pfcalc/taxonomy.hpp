#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pfcalc {

/// Case-sensitive category name. Empty and whitespace-only names are
/// rejected with InvalidName.
class CategoryId {
public:
  explicit CategoryId(std::string name);

  const std::string& str() const noexcept { return name_; }

  friend auto operator<=>(const CategoryId&, const CategoryId&) = default;
  friend bool operator==(const CategoryId&, const CategoryId&) = default;

private:
  std::string name_;
};

using LabelSet = std::set<CategoryId>;

/// Convenience for building id sequences in code and tests.
std::vector<CategoryId> ids(std::initializer_list<std::string_view> names);

/// Covering edge `child` < `parent` as read from input, before validation.
struct RawEdge {
  std::string child;
  std::string parent;
  std::optional<double> f;
};

struct RawTaxonomy {
  /// When present it must name the unique parentless category.
  std::optional<std::string> root;
  std::vector<std::string> categories;
  std::vector<RawEdge> edges;
};

/// Crisp queries answer 0/1 structural membership; probabilistic queries
/// read the per-edge conditional probability and fail if it is absent.
enum class CoveringMode { Crisp, Probabilistic };

/// Rooted DAG of categories. Immutable once validated. Categories are kept
/// in a deterministic topological order (root first, ties broken by name).
class Taxonomy {
public:
  static Taxonomy validate(const RawTaxonomy& raw);

  const CategoryId& root() const noexcept { return categories_.front(); }
  std::span<const CategoryId> categories() const noexcept { return categories_; }
  std::size_t size() const noexcept { return categories_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  std::optional<std::size_t> find(const CategoryId& c) const;
  /// Throws UnknownCategory.
  std::size_t index_of(const CategoryId& c) const;
  bool contains(const CategoryId& c) const { return find(c).has_value(); }

  /// Parent and child indices; children are sorted by name.
  std::span<const std::size_t> parents(std::size_t i) const { return parents_[i]; }
  std::span<const std::size_t> children(std::size_t i) const { return children_[i]; }
  bool is_leaf(std::size_t i) const { return children_[i].empty(); }

  bool has_edge(std::size_t child, std::size_t parent) const;
  /// nullopt if there is no edge; an inner nullopt if the edge has no f.
  std::optional<std::optional<double>> edge_probability(std::size_t child,
                                                        std::size_t parent) const;

  /// All edges ordered by (child, parent) name.
  std::vector<RawEdge> edges() const;

private:
  Taxonomy() = default;

  std::vector<CategoryId> categories_;
  std::map<CategoryId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::map<std::pair<std::size_t, std::size_t>, std::optional<double>> edges_;
  std::size_t edge_count_ = 0;
};

/// A rooted well-formed string c_0 ... c_L together with the conditional
/// probabilities f_0 = 1, f_1 ... f_L read from its covering edges.
class Pipeline {
public:
  /// `fs` must have one entry per node with fs[0] == 1.
  Pipeline(std::vector<CategoryId> nodes, std::vector<std::optional<double>> fs);

  std::size_t length() const noexcept { return nodes_.size() - 1; }
  std::span<const CategoryId> nodes() const noexcept { return nodes_; }
  std::span<const std::optional<double>> edge_probabilities() const noexcept {
    return fs_;
  }
  /// f_0 ... f_L; throws MissingEdgeProbability naming the first gap.
  std::vector<double> conditional_profile() const;

  /// Slash-joined names, e.g. "A/B/D".
  std::string path() const;
  /// c_0 ... c_k.
  Pipeline prefix(std::size_t k) const;

  friend bool operator==(const Pipeline&, const Pipeline&) = default;

private:
  std::vector<CategoryId> nodes_;
  std::vector<std::optional<double>> fs_;
};

std::string join_path(std::span<const CategoryId> nodes);
std::vector<CategoryId> split_path(std::string_view path);

struct RelativeSets {
  std::set<CategoryId> ancestors;
  std::set<CategoryId> offspring;
  std::set<CategoryId> children;
};

RelativeSets relative_sets(const Taxonomy& t, const CategoryId& r);

/// Characteristic function of the covering relation `b` covered-by `a`.
double covering_char(const Taxonomy& t, const CategoryId& b, const CategoryId& a,
                     CoveringMode mode = CoveringMode::Crisp);

/// Characteristic function of well-formed strings: 1 for the empty string
/// and single categories, otherwise the product of covering values of
/// consecutive pairs (0 as soon as a pair is not a covering edge).
double wfs_char(const Taxonomy& t, std::span<const CategoryId> s,
                CoveringMode mode = CoveringMode::Crisp);

/// Every pipeline of the taxonomy, prefixes included, in lexicographic order
/// of the name sequences. With `leaf_only` only leaf-terminated ones.
std::vector<Pipeline> enumerate_pipelines(const Taxonomy& t, bool leaf_only = false);

/// Builds the pipeline for a rooted path; throws InvalidArgument if the path
/// does not start at the root or crosses a non-edge.
Pipeline make_pipeline(const Taxonomy& t, std::span<const CategoryId> nodes);
Pipeline make_pipeline(const Taxonomy& t, std::string_view path);

/// p1 <= p2 iff p2 extends p1 by a (possibly empty) continuation.
bool pipeline_leq(const Pipeline& p1, const Pipeline& p2);

struct ConsistencyReport {
  bool consistent = true;
  /// Ancestors of some label that are missing from the set.
  std::set<CategoryId> missing;
};

/// Throws UnknownCategory for labels outside the taxonomy.
ConsistencyReport check_label_consistency(const Taxonomy& t, const LabelSet& labels);

/// Instance ids with their deepest true categories.
class InstanceLabeling {
public:
  using Entry = std::pair<std::string, LabelSet>;

  /// Throws UnknownCategory for labels not in `t`, InvalidArgument for a
  /// repeated instance id.
  static InstanceLabeling validate(const Taxonomy& t, std::vector<Entry> entries);

  std::span<const Entry> instances() const noexcept { return entries_; }
  const LabelSet* find(std::string_view id) const;

private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Instances of `a` or of any of its offspring.
std::set<std::string> domain_of(const Taxonomy& t, const InstanceLabeling& labeling,
                                const CategoryId& a);

/// True iff `b` <= `a` and instance `i` lies in dom(a).
bool relevance(const Taxonomy& t, const InstanceLabeling& labeling,
               std::string_view instance, const CategoryId& b, const CategoryId& a);

}  // namespace pfcalc
