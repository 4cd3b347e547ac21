#include "tailtree/tree.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tailtree {

NodeSet::NodeSet(std::initializer_list<int> ids) : ids_(ids) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

NodeSet::NodeSet(std::vector<int> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool NodeSet::contains(int v) const {
  return std::binary_search(ids_.begin(), ids_.end(), v);
}

NodeSet NodeSet::all(int d) {
  std::vector<int> ids(static_cast<std::size_t>(d));
  for (int v = 1; v <= d; ++v) ids[static_cast<std::size_t>(v - 1)] = v;
  return NodeSet(std::move(ids));
}

NodeSet NodeSet::complement(int d) const {
  std::vector<int> out;
  for (int v = 1; v <= d; ++v)
    if (!contains(v)) out.push_back(v);
  return NodeSet(std::move(out));
}

Tree::Tree(int node_count, std::span<const NodePair> edges) : d_(node_count) {
  if (d_ < 2) throw CycleOrDisconnected("tree needs at least 2 nodes");
  if (static_cast<int>(edges.size()) != d_ - 1)
    throw CycleOrDisconnected("a tree on " + std::to_string(d_) +
                              " nodes needs exactly " + std::to_string(d_ - 1) +
                              " edges, got " + std::to_string(edges.size()));
  adj_.assign(static_cast<std::size_t>(d_) + 1, {});
  std::set<NodePair> seen;
  for (const auto& [a, b] : edges) {
    if (a < 1 || a > d_ || b < 1 || b > d_)
      throw NodeOutOfRange("edge (" + std::to_string(a) + "," +
                           std::to_string(b) + ") out of range 1.." +
                           std::to_string(d_));
    if (a == b) throw SelfLoop("self-loop at node " + std::to_string(a));
    const NodePair key{std::min(a, b), std::max(a, b)};
    if (!seen.insert(key).second)
      throw DuplicateEdge("duplicate edge (" + std::to_string(a) + "," +
                          std::to_string(b) + ")");
    edges_.emplace_back(a, b);
    adj_[static_cast<std::size_t>(a)].push_back(b);
    adj_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());

  // BFS from node 1 both verifies connectivity and fills the path tables.
  parent_.assign(static_cast<std::size_t>(d_) + 1, 0);
  parent_edge_.assign(static_cast<std::size_t>(d_) + 1, -1);
  depth_.assign(static_cast<std::size_t>(d_) + 1, -1);
  std::deque<int> queue{1};
  depth_[1] = 0;
  int visited = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    ++visited;
    for (int w : adj_[static_cast<std::size_t>(v)]) {
      if (depth_[static_cast<std::size_t>(w)] >= 0) continue;
      depth_[static_cast<std::size_t>(w)] = depth_[static_cast<std::size_t>(v)] + 1;
      parent_[static_cast<std::size_t>(w)] = v;
      queue.push_back(w);
    }
  }
  if (visited != d_) throw CycleOrDisconnected("graph is not connected");
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const auto& [a, b] = edges_[static_cast<std::size_t>(e)];
    const int child = parent_[static_cast<std::size_t>(a)] == b ? a : b;
    parent_edge_[static_cast<std::size_t>(child)] = e;
  }
}

void Tree::require_node(int v) const {
  if (v < 1 || v > d_)
    throw NodeOutOfRange("node " + std::to_string(v) + " out of range 1.." +
                         std::to_string(d_));
}

const std::vector<int>& Tree::neighbors(int v) const {
  require_node(v);
  return adj_[static_cast<std::size_t>(v)];
}

bool Tree::adjacent(int a, int b) const {
  const auto& nb = neighbors(a);
  require_node(b);
  return std::binary_search(nb.begin(), nb.end(), b);
}

int Tree::edge_index(int a, int b) const {
  require_node(a);
  require_node(b);
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const auto& [x, y] = edges_[static_cast<std::size_t>(e)];
    if ((x == a && y == b) || (x == b && y == a)) return e;
  }
  throw NodeOutOfRange("nodes " + std::to_string(a) + " and " +
                       std::to_string(b) + " are not adjacent");
}

std::vector<int> Tree::path_edge_indices(int u, int v) const {
  require_node(u);
  require_node(v);
  // climb both endpoints to their meeting point
  std::vector<int> up, down;
  int a = u, b = v;
  while (depth_[static_cast<std::size_t>(a)] > depth_[static_cast<std::size_t>(b)]) {
    up.push_back(parent_edge_[static_cast<std::size_t>(a)]);
    a = parent_[static_cast<std::size_t>(a)];
  }
  while (depth_[static_cast<std::size_t>(b)] > depth_[static_cast<std::size_t>(a)]) {
    down.push_back(parent_edge_[static_cast<std::size_t>(b)]);
    b = parent_[static_cast<std::size_t>(b)];
  }
  while (a != b) {
    up.push_back(parent_edge_[static_cast<std::size_t>(a)]);
    a = parent_[static_cast<std::size_t>(a)];
    down.push_back(parent_edge_[static_cast<std::size_t>(b)]);
    b = parent_[static_cast<std::size_t>(b)];
  }
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

std::vector<NodePair> Tree::path(int u, int v) const {
  std::vector<NodePair> out;
  int at = u;
  for (int e : path_edge_indices(u, v)) {
    const auto& [a, b] = edges_[static_cast<std::size_t>(e)];
    const int next = (a == at) ? b : a;
    out.emplace_back(at, next);
    at = next;
  }
  return out;
}

int Tree::distance(int u, int v) const {
  if (u == v) {
    require_node(u);
    return 0;
  }
  return static_cast<int>(path_edge_indices(u, v).size());
}

PathSumCoefficients path_sum_matrix(const Tree& tree,
                                    std::span<const NodePair> pairs) {
  PathSumCoefficients out;
  out.pairs.assign(pairs.begin(), pairs.end());
  for (const auto& [a, b] : pairs) {
    std::vector<int> row(static_cast<std::size_t>(tree.edge_count()), 0);
    for (int e : tree.path_edge_indices(a, b)) row[static_cast<std::size_t>(e)] = 1;
    out.matrix.push_back(std::move(row));
  }
  return out;
}

int exact_integer_rank(std::vector<std::vector<long long>> m) {
  if (m.empty()) return 0;
  const int rows = static_cast<int>(m.size());
  const int cols = static_cast<int>(m[0].size());
  int rank = 0;
  long long prev = 1;
  for (int c = 0; c < cols && rank < rows; ++c) {
    int pivot = -1;
    for (int r = rank; r < rows; ++r) {
      if (m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] != 0) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    std::swap(m[static_cast<std::size_t>(pivot)], m[static_cast<std::size_t>(rank)]);
    const long long piv = m[static_cast<std::size_t>(rank)][static_cast<std::size_t>(c)];
    for (int r = rank + 1; r < rows; ++r) {
      for (int j = c + 1; j < cols; ++j) {
        // Bareiss update keeps every intermediate value an exact integer
        m[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] =
            (m[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] * piv -
             m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] *
                 m[static_cast<std::size_t>(rank)][static_cast<std::size_t>(j)]) /
            prev;
      }
      m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = 0;
    }
    prev = piv;
    ++rank;
  }
  return rank;
}

DegreeCheck check_identifiability_degree(const Tree& tree,
                                         const NodeSet& observed) {
  if (observed.empty()) throw NodeOutOfRange("observed set must be non-empty");
  for (int v : observed.ids()) tree.require_node(v);
  DegreeCheck out;
  out.identifiable = true;
  for (int v = 1; v <= tree.node_count(); ++v) {
    if (observed.contains(v)) continue;
    const int deg = tree.degree(v);
    if (deg < 3) {
      out.identifiable = false;
      out.violations.emplace_back(v, deg);
    }
  }
  return out;
}

namespace {

std::vector<NodePair> all_pairs(const NodeSet& nodes) {
  std::vector<NodePair> pairs;
  const auto& ids = nodes.ids();
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      pairs.emplace_back(ids[i], ids[j]);
  return pairs;
}

}  // namespace

bool check_identifiability_rank(const Tree& tree, const NodeSet& observed) {
  if (observed.empty()) throw NodeOutOfRange("observed set must be non-empty");
  const auto pairs = all_pairs(observed);
  if (pairs.empty()) return tree.edge_count() == 0;
  const auto coeff = path_sum_matrix(tree, pairs);
  std::vector<std::vector<long long>> m;
  m.reserve(coeff.matrix.size());
  for (const auto& row : coeff.matrix) m.emplace_back(row.begin(), row.end());
  return exact_integer_rank(std::move(m)) == tree.edge_count();
}

namespace {

/// Observable nodes reachable from `start` without crossing `banned`, cutting
/// each branch at the first observable node met. Returns the smallest id.
int nearest_observable(const Tree& tree, const NodeSet& observed, int start,
                       int banned) {
  int best = -1;
  std::vector<std::pair<int, int>> stack{{start, banned}};
  while (!stack.empty()) {
    const auto [v, from] = stack.back();
    stack.pop_back();
    if (observed.contains(v)) {
      if (best < 0 || v < best) best = v;
      continue;
    }
    for (int w : tree.neighbors(v))
      if (w != from) stack.emplace_back(w, v);
  }
  if (best < 0)
    throw NotIdentifiable("no observable node beyond " + std::to_string(start));
  return best;
}

void add_term(std::map<NodePair, double>& terms, int a, int b, double coeff) {
  terms[{std::min(a, b), std::max(a, b)}] += coeff;
}

/// Expresses p(u, target_hat) through three observable path sums, where u is
/// latent and target_hat is the first observable met walking from u through
/// `toward`. Uses the two smallest observable representatives of u's other
/// branches.
void add_latent_resolution(const Tree& tree, const NodeSet& observed, int u,
                           int toward, int target_hat, double sign,
                           std::map<NodePair, double>& terms) {
  std::vector<int> reps;
  for (int w : tree.neighbors(u)) {
    if (w == toward) continue;
    reps.push_back(nearest_observable(tree, observed, w, u));
  }
  std::sort(reps.begin(), reps.end());
  if (reps.size() < 2)
    throw NotIdentifiable("latent node " + std::to_string(u) +
                          " has degree " + std::to_string(tree.degree(u)));
  const int w_hat = reps[0], x_hat = reps[1];
  add_term(terms, target_hat, w_hat, sign * 0.5);
  add_term(terms, target_hat, x_hat, sign * 0.5);
  add_term(terms, w_hat, x_hat, -sign * 0.5);
}

}  // namespace

ExtractionPlan extraction_plan(const Tree& tree, const NodeSet& observed) {
  const auto degree = check_identifiability_degree(tree, observed);
  if (!degree.identifiable) {
    std::string msg = "latent nodes of degree < 3:";
    for (const auto& [v, deg] : degree.violations)
      msg += " " + std::to_string(v) + "(deg " + std::to_string(deg) + ")";
    throw NotIdentifiable(msg);
  }

  ExtractionPlan plan;
  plan.per_edge.resize(static_cast<std::size_t>(tree.edge_count()));
  for (int e = 0; e < tree.edge_count(); ++e) {
    auto [a, b] = tree.edge(e);
    const bool a_obs = observed.contains(a);
    const bool b_obs = observed.contains(b);
    std::map<NodePair, double> terms;
    if (a_obs && b_obs) {
      add_term(terms, a, b, 1.0);
    } else {
      // put the latent endpoint in u; v may itself be latent
      int u = a, v = b;
      if (a_obs) std::swap(u, v);
      const int v_hat =
          observed.contains(v) ? v : nearest_observable(tree, observed, v, u);
      add_latent_resolution(tree, observed, u, v, v_hat, +1.0, terms);
      if (!observed.contains(v)) {
        // theta_e^2 = p(u, v_hat) - p(v, v_hat)
        const int toward_vhat =
            tree.path(v, v_hat).front().second;  // v's neighbor on that path
        add_latent_resolution(tree, observed, v, toward_vhat, v_hat, -1.0,
                              terms);
      }
    }
    auto& out = plan.per_edge[static_cast<std::size_t>(e)];
    for (const auto& [pair, coeff] : terms)
      if (coeff != 0.0) out.push_back({pair, coeff});
  }
  return plan;
}

double ExtractionPlan::evaluate_edge(
    int e, const std::function<double(int, int)>& path_sum) const {
  double acc = 0.0;
  for (const auto& term : per_edge.at(static_cast<std::size_t>(e)))
    acc += term.coeff * path_sum(term.pair.first, term.pair.second);
  return acc;
}

TreeFile read_tree_file(std::istream& in) {
  std::string line;
  auto next_content_line = [&](std::string& out) -> bool {
    while (std::getline(in, line)) {
      std::size_t i = line.find_first_not_of(" \t\r");
      if (i == std::string::npos) continue;
      out = line;
      return true;
    }
    return false;
  };

  std::string content;
  if (!next_content_line(content)) throw ParseError("empty tree file");
  int d = 0;
  {
    std::istringstream ss(content);
    if (!(ss >> d) || d < 2) throw ParseError("invalid node count line: " + content);
  }
  std::vector<NodePair> edges;
  std::vector<int> latent;
  for (int i = 0; i < d - 1; ++i) {
    if (!next_content_line(content))
      throw ParseError("expected " + std::to_string(d - 1) + " edge lines");
    std::istringstream ss(content);
    int a = 0, b = 0;
    if (!(ss >> a >> b)) throw ParseError("invalid edge line: " + content);
    edges.emplace_back(a, b);
  }
  while (next_content_line(content)) {
    std::size_t i = content.find_first_not_of(" \t\r");
    if (content[i] == '#') {
      const auto pos = content.find("latent:");
      if (pos != std::string::npos) {
        std::istringstream ss(content.substr(pos + 7));
        int v;
        while (ss >> v) latent.push_back(v);
      }
      continue;
    }
    if (content.rfind("theta:", i) == i) break;  // model files append theta
    throw ParseError("unexpected line in tree file: " + content);
  }
  Tree tree(d, edges);
  for (int v : latent) tree.require_node(v);
  return TreeFile{std::move(tree), NodeSet(std::move(latent))};
}

TreeFile read_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open tree file: " + path);
  return read_tree_file(in);
}

std::string format_tree_file(const Tree& tree, const NodeSet& latent) {
  std::ostringstream out;
  out << tree.node_count() << "\n";
  for (const auto& [a, b] : tree.edges()) out << a << " " << b << "\n";
  if (!latent.empty()) {
    out << "# latent:";
    for (int v : latent.ids()) out << " " << v;
    out << "\n";
  }
  return out.str();
}

void write_tree_file(const std::string& path, const Tree& tree,
                     const NodeSet& latent) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write tree file: " + path);
  out << format_tree_file(tree, latent);
}

}  // namespace tailtree
