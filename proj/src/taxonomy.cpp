#include "pfcalc/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <queue>

#include "pfcalc/error.hpp"

namespace pfcalc {

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char ch) { return std::isspace(ch) != 0; });
}

std::string edge_location(std::size_t i) {
  return "edges[" + std::to_string(i) + "]";
}

}  // namespace

CategoryId::CategoryId(std::string name) : name_(std::move(name)) {
  if (blank(name_)) {
    throw Error(ErrorKind::InvalidName, "category names must not be blank",
                "'" + name_ + "'");
  }
}

std::vector<CategoryId> ids(std::initializer_list<std::string_view> names) {
  std::vector<CategoryId> out;
  out.reserve(names.size());
  for (auto n : names) out.emplace_back(std::string(n));
  return out;
}

// ---------------------------------------------------------------------------
// Taxonomy
// ---------------------------------------------------------------------------

Taxonomy Taxonomy::validate(const RawTaxonomy& raw) {
  if (raw.categories.empty()) {
    throw Error(ErrorKind::InvalidArgument, "taxonomy has no categories");
  }

  // Input-order indexing first; the final order is topological.
  std::vector<CategoryId> names;
  std::map<CategoryId, std::size_t> input_index;
  for (std::size_t i = 0; i < raw.categories.size(); ++i) {
    CategoryId id(raw.categories[i]);
    if (!input_index.emplace(id, i).second) {
      throw Error(ErrorKind::DuplicateCategory, "category listed twice",
                  raw.categories[i]);
    }
    names.push_back(std::move(id));
  }
  const std::size_t n = names.size();

  auto lookup = [&](const std::string& name, std::size_t edge) {
    auto it = input_index.find(CategoryId(name));
    if (it == input_index.end()) {
      throw Error(ErrorKind::UnknownCategory, "edge names unknown category '" + name + "'",
                  edge_location(edge));
    }
    return it->second;
  };

  std::vector<std::vector<std::size_t>> parents(n), children(n);
  std::map<std::pair<std::size_t, std::size_t>, std::optional<double>> edges;
  for (std::size_t e = 0; e < raw.edges.size(); ++e) {
    const auto& edge = raw.edges[e];
    const std::size_t c = lookup(edge.child, e);
    const std::size_t p = lookup(edge.parent, e);
    if (c == p) {
      throw Error(ErrorKind::CycleDetected, "self-loop on '" + edge.child + "'",
                  edge_location(e));
    }
    if (edge.f && !(*edge.f >= 0.0 && *edge.f <= 1.0)) {
      throw Error(ErrorKind::OutOfRangeProbability,
                  "edge probability " + std::to_string(*edge.f) + " outside [0,1]",
                  edge_location(e));
    }
    if (!edges.emplace(std::pair{c, p}, edge.f).second) {
      throw Error(ErrorKind::DuplicateEdge,
                  "edge " + edge.child + " -> " + edge.parent + " listed twice",
                  edge_location(e));
    }
    parents[c].push_back(p);
    children[p].push_back(c);
  }

  std::vector<std::size_t> parentless;
  for (std::size_t i = 0; i < n; ++i) {
    if (parents[i].empty()) parentless.push_back(i);
  }
  if (parentless.empty()) {
    throw Error(ErrorKind::CycleDetected, "every category has a parent");
  }
  if (parentless.size() > 1) {
    std::string list;
    for (auto i : parentless) list += (list.empty() ? "" : ", ") + names[i].str();
    throw Error(ErrorKind::MultipleRoots, "categories without parents: " + list);
  }
  const std::size_t root = parentless.front();
  if (raw.root && *raw.root != names[root].str()) {
    throw Error(ErrorKind::MultipleRoots,
                "declared root '" + *raw.root + "' differs from parentless category '" +
                    names[root].str() + "'",
                "root");
  }

  std::vector<bool> seen(n, false);
  std::deque<std::size_t> frontier{root};
  seen[root] = true;
  while (!frontier.empty()) {
    const auto cur = frontier.front();
    frontier.pop_front();
    for (auto c : children[cur]) {
      if (!seen[c]) {
        seen[c] = true;
        frontier.push_back(c);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw Error(ErrorKind::Unreachable, "category not reachable from the root",
                  names[i].str());
    }
  }

  // Kahn's algorithm; the min-heap on names makes the order deterministic.
  std::vector<std::size_t> indegree(n);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = parents[i].size();
  auto by_name = [&](std::size_t a, std::size_t b) { return names[b] < names[a]; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(by_name)> ready(
      by_name);
  ready.push(root);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const auto cur = ready.top();
    ready.pop();
    order.push_back(cur);
    for (auto c : children[cur]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (indegree[i] > 0) {
        throw Error(ErrorKind::CycleDetected, "category lies on a cycle",
                    names[i].str());
      }
    }
  }

  std::vector<std::size_t> position(n);
  for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;

  Taxonomy t;
  t.parents_.resize(n);
  t.children_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    t.categories_.push_back(names[order[k]]);
    t.index_.emplace(names[order[k]], k);
  }
  for (const auto& [key, f] : edges) {
    const auto c = position[key.first];
    const auto p = position[key.second];
    t.parents_[c].push_back(p);
    t.children_[p].push_back(c);
    t.edges_.emplace(std::pair{c, p}, f);
  }
  auto name_order = [&t](std::size_t a, std::size_t b) {
    return t.categories_[a] < t.categories_[b];
  };
  for (std::size_t k = 0; k < n; ++k) {
    std::sort(t.parents_[k].begin(), t.parents_[k].end(), name_order);
    std::sort(t.children_[k].begin(), t.children_[k].end(), name_order);
  }
  t.edge_count_ = edges.size();
  return t;
}

std::optional<std::size_t> Taxonomy::find(const CategoryId& c) const {
  auto it = index_.find(c);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Taxonomy::index_of(const CategoryId& c) const {
  if (auto i = find(c)) return *i;
  throw Error(ErrorKind::UnknownCategory, "category not in taxonomy", c.str());
}

bool Taxonomy::has_edge(std::size_t child, std::size_t parent) const {
  return edges_.contains({child, parent});
}

std::optional<std::optional<double>> Taxonomy::edge_probability(
    std::size_t child, std::size_t parent) const {
  auto it = edges_.find({child, parent});
  if (it == edges_.end()) return std::nullopt;
  return it->second;
}

std::vector<RawEdge> Taxonomy::edges() const {
  std::vector<RawEdge> out;
  out.reserve(edges_.size());
  for (const auto& [key, f] : edges_) {
    out.push_back({categories_[key.first].str(), categories_[key.second].str(), f});
  }
  std::sort(out.begin(), out.end(), [](const RawEdge& a, const RawEdge& b) {
    return std::tie(a.child, a.parent) < std::tie(b.child, b.parent);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(std::vector<CategoryId> nodes, std::vector<std::optional<double>> fs)
    : nodes_(std::move(nodes)), fs_(std::move(fs)) {
  if (nodes_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "a pipeline has at least the root");
  }
  if (fs_.size() != nodes_.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "expected one conditional probability per pipeline node");
  }
  if (!fs_[0] || *fs_[0] != 1.0) {
    throw Error(ErrorKind::OutOfRangeProbability, "f_0 must be exactly 1",
                nodes_[0].str());
  }
  for (std::size_t k = 1; k < fs_.size(); ++k) {
    if (fs_[k] && !(*fs_[k] >= 0.0 && *fs_[k] <= 1.0)) {
      throw Error(ErrorKind::OutOfRangeProbability,
                  "f_" + std::to_string(k) + " outside [0,1]", nodes_[k].str());
    }
  }
}

std::vector<double> Pipeline::conditional_profile() const {
  std::vector<double> out;
  out.reserve(fs_.size());
  for (std::size_t k = 0; k < fs_.size(); ++k) {
    if (!fs_[k]) {
      throw Error(ErrorKind::MissingEdgeProbability,
                  "no conditional probability on edge " + nodes_[k].str() + " -> " +
                      nodes_[k - 1].str(),
                  join_path(std::span(nodes_).first(k + 1)));
    }
    out.push_back(*fs_[k]);
  }
  return out;
}

std::string Pipeline::path() const { return join_path(nodes_); }

Pipeline Pipeline::prefix(std::size_t k) const {
  if (k > length()) {
    throw Error(ErrorKind::InvalidArgument, "prefix longer than pipeline", path());
  }
  return Pipeline({nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(k + 1)},
                  {fs_.begin(), fs_.begin() + static_cast<std::ptrdiff_t>(k + 1)});
}

std::string join_path(std::span<const CategoryId> nodes) {
  std::string out;
  for (const auto& c : nodes) {
    if (!out.empty()) out += '/';
    out += c.str();
  }
  return out;
}

std::vector<CategoryId> split_path(std::string_view path) {
  std::vector<CategoryId> out;
  std::size_t start = 0;
  while (true) {
    const auto slash = path.find('/', start);
    out.emplace_back(std::string(path.substr(start, slash - start)));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structure queries
// ---------------------------------------------------------------------------

namespace {

std::vector<bool> closure(const Taxonomy& t, std::size_t start, bool upward) {
  std::vector<bool> seen(t.size(), false);
  std::deque<std::size_t> frontier{start};
  while (!frontier.empty()) {
    const auto cur = frontier.front();
    frontier.pop_front();
    for (auto next : upward ? t.parents(cur) : t.children(cur)) {
      if (!seen[next]) {
        seen[next] = true;
        frontier.push_back(next);
      }
    }
  }
  return seen;
}

bool below_or_equal(const Taxonomy& t, std::size_t b, std::size_t a) {
  return b == a || closure(t, b, /*upward=*/true)[a];
}

}  // namespace

RelativeSets relative_sets(const Taxonomy& t, const CategoryId& r) {
  const auto i = t.index_of(r);
  RelativeSets out;
  const auto up = closure(t, i, true);
  const auto down = closure(t, i, false);
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (up[k]) out.ancestors.insert(t.categories()[k]);
    if (down[k]) out.offspring.insert(t.categories()[k]);
  }
  for (auto c : t.children(i)) out.children.insert(t.categories()[c]);
  return out;
}

double covering_char(const Taxonomy& t, const CategoryId& b, const CategoryId& a,
                     CoveringMode mode) {
  const auto bi = t.index_of(b);
  const auto ai = t.index_of(a);
  const auto edge = t.edge_probability(bi, ai);
  if (!edge) return 0.0;
  if (mode == CoveringMode::Crisp) return 1.0;
  if (!*edge) {
    throw Error(ErrorKind::MissingEdgeProbability,
                "edge " + b.str() + " -> " + a.str() + " has no probability");
  }
  return **edge;
}

double wfs_char(const Taxonomy& t, std::span<const CategoryId> s, CoveringMode mode) {
  double value = 1.0;
  for (std::size_t k = 1; k < s.size(); ++k) {
    value *= covering_char(t, s[k], s[k - 1], mode);
    if (value == 0.0 && mode == CoveringMode::Crisp) return 0.0;
  }
  return value;
}

std::vector<Pipeline> enumerate_pipelines(const Taxonomy& t, bool leaf_only) {
  std::vector<Pipeline> out;
  std::vector<CategoryId> nodes{t.root()};
  std::vector<std::optional<double>> fs{1.0};

  std::function<void(std::size_t)> visit = [&](std::size_t cur) {
    if (!leaf_only || t.is_leaf(cur)) out.emplace_back(nodes, fs);
    for (auto c : t.children(cur)) {
      nodes.push_back(t.categories()[c]);
      fs.push_back(*t.edge_probability(c, cur));
      visit(c);
      nodes.pop_back();
      fs.pop_back();
    }
  };
  visit(0);
  return out;
}

Pipeline make_pipeline(const Taxonomy& t, std::span<const CategoryId> nodes) {
  if (nodes.empty() || nodes.front() != t.root()) {
    throw Error(ErrorKind::InvalidArgument, "pipeline must start at the root",
                join_path(nodes));
  }
  std::vector<std::optional<double>> fs{1.0};
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    auto edge = t.edge_probability(t.index_of(nodes[k]), t.index_of(nodes[k - 1]));
    if (!edge) {
      throw Error(ErrorKind::InvalidArgument,
                  nodes[k].str() + " is not a child of " + nodes[k - 1].str(),
                  join_path(nodes));
    }
    fs.push_back(*edge);
  }
  return Pipeline({nodes.begin(), nodes.end()}, std::move(fs));
}

Pipeline make_pipeline(const Taxonomy& t, std::string_view path) {
  const auto nodes = split_path(path);
  return make_pipeline(t, nodes);
}

bool pipeline_leq(const Pipeline& p1, const Pipeline& p2) {
  const auto a = p1.nodes();
  const auto b = p2.nodes();
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

ConsistencyReport check_label_consistency(const Taxonomy& t, const LabelSet& labels) {
  ConsistencyReport report;
  for (const auto& c : labels) {
    const auto up = closure(t, t.index_of(c), true);
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (up[k] && !labels.contains(t.categories()[k])) {
        report.missing.insert(t.categories()[k]);
      }
    }
  }
  report.consistent = report.missing.empty();
  return report;
}

// ---------------------------------------------------------------------------
// Labeling and relevance
// ---------------------------------------------------------------------------

InstanceLabeling InstanceLabeling::validate(const Taxonomy& t, std::vector<Entry> entries) {
  InstanceLabeling out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (const auto& c : entries[i].second) {
      if (!t.contains(c)) {
        throw Error(ErrorKind::UnknownCategory, "label not in taxonomy",
                    entries[i].first + ":" + c.str());
      }
    }
    if (!out.index_.emplace(entries[i].first, i).second) {
      throw Error(ErrorKind::InvalidArgument, "instance listed twice", entries[i].first);
    }
  }
  out.entries_ = std::move(entries);
  return out;
}

const LabelSet* InstanceLabeling::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

std::set<std::string> domain_of(const Taxonomy& t, const InstanceLabeling& labeling,
                                const CategoryId& a) {
  const auto ai = t.index_of(a);
  auto down = closure(t, ai, false);
  down[ai] = true;
  std::set<std::string> out;
  for (const auto& [id, labels] : labeling.instances()) {
    for (const auto& c : labels) {
      if (down[t.index_of(c)]) {
        out.insert(id);
        break;
      }
    }
  }
  return out;
}

bool relevance(const Taxonomy& t, const InstanceLabeling& labeling,
               std::string_view instance, const CategoryId& b, const CategoryId& a) {
  const auto* labels = labeling.find(instance);
  if (labels == nullptr) {
    throw Error(ErrorKind::UnknownInstance, "instance not in labeling",
                std::string(instance));
  }
  const auto bi = t.index_of(b);
  const auto ai = t.index_of(a);
  if (!below_or_equal(t, bi, ai)) return false;
  auto down = closure(t, ai, false);
  down[ai] = true;
  return std::any_of(labels->begin(), labels->end(),
                     [&](const CategoryId& c) { return down[t.index_of(c)]; });
}

}  // namespace pfcalc
