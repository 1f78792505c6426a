#include "nbp/tree.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <functional>
#include <iterator>
#include <tuple>

#include "nbp/error.hpp"

namespace nbp {
namespace {

std::string format_length(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string newick_label(const std::string& label) {
  if (label.find_first_of(" \t\r\n()[]':;,") == std::string::npos) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

bool is_dot_identifier(const std::string& s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  static const std::set<std::string> keywords = {"node", "edge", "graph", "digraph", "subgraph",
                                                 "strict"};
  std::string lower;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return !keywords.contains(lower);
}

std::string dot_quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string dot_id(const std::string& s) { return is_dot_identifier(s) ? s : dot_quoted(s); }

// Smallest leaf label under every node.
std::vector<std::string> min_labels(const PhyloTree& tree) {
  std::vector<std::string> out(tree.nodes().size());
  std::function<const std::string&(int)> visit = [&](int v) -> const std::string& {
    const auto& node = tree.node(v);
    auto& slot = out[static_cast<std::size_t>(v)];
    if (node.children.empty()) {
      slot = node.label;
    } else {
      bool first = true;
      for (int c : node.children) {
        const auto& m = visit(c);
        if (first || m < slot) slot = m;
        first = false;
      }
    }
    return slot;
  };
  if (tree.root() >= 0) visit(tree.root());
  return out;
}

}  // namespace

int PhyloTree::add_node(TreeNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size() - 1);
}

void PhyloTree::attach(int parent, int child) {
  node(parent).children.push_back(child);
  node(child).parent = parent;
}

std::size_t PhyloTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.children.empty(); }));
}

std::vector<std::string> PhyloTree::leaf_labels() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_)
    if (n.children.empty()) out.push_back(n.label);
  return out;
}

PhyloTree neighbor_joining(const DistanceMatrix& d, const NjOptions& options) {
  const std::size_t n = d.size();
  if (n < 3) throw DataError("neighbor joining needs at least 3 taxa, got " + std::to_string(n));
  if (d.d.rows() != static_cast<Eigen::Index>(n) || d.d.cols() != static_cast<Eigen::Index>(n))
    throw DataError("distance matrix does not match its taxa list");

  PhyloTree tree;
  std::vector<int> active;
  for (const auto& label : d.taxa) active.push_back(tree.add_node({label, -1, {}, std::nullopt}));
  Eigen::MatrixXd dist = d.d;

  auto join = [&](std::size_t a, std::size_t b, double la, double lb) {
    if (options.clamp_negative) {
      if (la < 0.0) {
        lb += la;
        la = 0.0;
      } else if (lb < 0.0) {
        la += lb;
        lb = 0.0;
      }
    }
    const int u = tree.add_node({});
    tree.node(active[a]).length = la;
    tree.node(active[b]).length = lb;
    tree.attach(u, active[a]);
    tree.attach(u, active[b]);
    return u;
  };

  while (active.size() > 3) {
    const auto k = static_cast<Eigen::Index>(active.size());
    const Eigen::VectorXd r = dist.topLeftCorner(k, k).rowwise().sum();
    Eigen::Index bi = 0, bj = 1;
    double best = 0.0;
    bool have = false;
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = i + 1; j < k; ++j) {
        const double crit = static_cast<double>(k - 2) * dist(i, j) - r(i) - r(j);
        if (!have || crit < best) {
          best = crit;
          bi = i;
          bj = j;
          have = true;
        }
      }
    }
    const double dij = dist(bi, bj);
    const double li = dij / 2.0 + (r(bi) - r(bj)) / (2.0 * static_cast<double>(k - 2));
    const double lj = dij - li;
    const int u = join(static_cast<std::size_t>(bi), static_cast<std::size_t>(bj), li, lj);

    // The new node takes slot bi; slot bj is removed by moving the last slot in.
    Eigen::VectorXd du(k);
    for (Eigen::Index m = 0; m < k; ++m) du(m) = (dist(bi, m) + dist(bj, m) - dij) / 2.0;
    du(bi) = 0.0;
    dist.row(bi).head(k) = du.transpose();
    dist.col(bi).head(k) = du;
    active[static_cast<std::size_t>(bi)] = u;
    const Eigen::Index last = k - 1;
    if (bj != last) {
      dist.row(bj).head(k) = dist.row(last).head(k);
      dist.col(bj).head(k) = dist.col(last).head(k);
      dist(bj, bj) = 0.0;
      active[static_cast<std::size_t>(bj)] = active[static_cast<std::size_t>(last)];
    }
    active.pop_back();
  }

  std::array<double, 3> len{
      (dist(0, 1) + dist(0, 2) - dist(1, 2)) / 2.0,
      (dist(0, 1) + dist(1, 2) - dist(0, 2)) / 2.0,
      (dist(0, 2) + dist(1, 2) - dist(0, 1)) / 2.0,
  };
  if (options.clamp_negative) {
    for (std::size_t i = 0; i < 3; ++i) {
      if (len[i] >= 0.0) continue;
      const std::size_t a = (i + 1) % 3, b = (i + 2) % 3;
      len[len[a] >= len[b] ? a : b] += len[i];
      len[i] = 0.0;
    }
  }
  const int root = tree.add_node({});
  for (std::size_t i = 0; i < 3; ++i) {
    tree.node(active[i]).length = len[i];
    tree.attach(root, active[i]);
  }
  tree.set_root(root);
  return tree;
}

std::string write_newick(const PhyloTree& tree) {
  if (tree.root() < 0) throw DataError("cannot write an empty tree");
  const auto mins = min_labels(tree);
  std::string out;
  std::function<void(int)> emit = [&](int v) {
    const auto& node = tree.node(v);
    if (!node.children.empty()) {
      auto kids = node.children;
      std::sort(kids.begin(), kids.end(), [&](int a, int b) {
        return mins[static_cast<std::size_t>(a)] < mins[static_cast<std::size_t>(b)];
      });
      out += '(';
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i > 0) out += ',';
        emit(kids[i]);
      }
      out += ')';
    }
    out += newick_label(node.label);
    if (node.length) {
      out += ':';
      out += format_length(*node.length);
    }
  };
  emit(tree.root());
  out += ';';
  return out;
}

std::set<Split> tree_splits(const PhyloTree& tree) {
  const auto labels = tree.leaf_labels();
  if (labels.empty()) return {};
  const std::string smallest = *std::min_element(labels.begin(), labels.end());
  const std::set<std::string> all(labels.begin(), labels.end());

  std::set<Split> out;
  std::function<std::set<std::string>(int)> visit = [&](int v) {
    const auto& node = tree.node(v);
    std::set<std::string> below;
    if (node.children.empty()) below.insert(node.label);
    for (int c : node.children) {
      auto sub = visit(c);
      below.insert(sub.begin(), sub.end());
    }
    if (below.size() >= 2 && below.size() + 2 <= all.size()) {
      if (below.contains(smallest)) {
        Split other;
        std::set_difference(all.begin(), all.end(), below.begin(), below.end(),
                            std::inserter(other, other.begin()));
        out.insert(std::move(other));
      } else {
        out.insert(below);
      }
    }
    return below;
  };
  visit(tree.root());
  return out;
}

std::size_t robinson_foulds(const PhyloTree& a, const PhyloTree& b) {
  const auto sa = tree_splits(a);
  const auto sb = tree_splits(b);
  std::size_t diff = 0;
  for (const auto& s : sa) diff += sb.contains(s) ? 0 : 1;
  for (const auto& s : sb) diff += sa.contains(s) ? 0 : 1;
  return diff;
}

NetworkGraph site_network(const SiteColumn& col, const RateMatrix& q,
                          const std::vector<std::string>& taxa) {
  const std::size_t n = col.size();
  if (q.size() != n || taxa.size() != n)
    throw DataError("site network: column, rate matrix and taxa sizes differ");
  NetworkGraph g;
  g.name = "site_" + std::to_string(col.site_index);
  g.nodes = taxa;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      NetworkEdge e;
      e.source = i;
      e.target = j;
      e.path_label = col.alphabet->token(col.values[i]) + col.alphabet->token(col.values[j]);
      e.rate = i == j ? -q(i, i) : q(i, j);
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

std::string write_dot(const NetworkGraph& g) {
  std::string out = "digraph " + dot_id(g.name.empty() ? "site" : g.name) + " {\n";
  for (const auto& node : g.nodes) out += "  " + dot_id(node) + ";\n";
  auto edges = g.edges;
  std::stable_sort(edges.begin(), edges.end(), [](const NetworkEdge& a, const NetworkEdge& b) {
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
  for (const auto& e : edges) {
    char weight[32];
    std::snprintf(weight, sizeof weight, "%.6g", e.rate);
    out += "  " + dot_id(g.nodes.at(e.source)) + " -> " + dot_id(g.nodes.at(e.target)) +
           " [label=" + dot_quoted(e.path_label) + ", weight=" + weight + "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace nbp
