#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nbp/genome_combine.hpp"

namespace nbp {

struct TreeNode {
  std::string label;  // empty for internal nodes
  int parent = -1;
  std::vector<int> children;
  std::optional<double> length;  // branch to the parent; absent on an unrooted root
};

// Node-array tree. Unrooted trees are stored hanging from an internal node of
// degree 3; rooted trees (from the simulator) carry the origin-to-first-split
// span as the root's length.
class PhyloTree {
 public:
  int add_node(TreeNode node);
  void attach(int parent, int child);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  TreeNode& node(int i) { return nodes_.at(static_cast<std::size_t>(i)); }
  int root() const { return root_; }
  void set_root(int r) { root_ = r; }

  std::size_t leaf_count() const;
  std::vector<std::string> leaf_labels() const;

 private:
  std::vector<TreeNode> nodes_;
  int root_ = -1;
};

struct NjOptions {
  // Negative branch lengths are set to 0 and the deficit moved to the sibling.
  bool clamp_negative = true;
};

// Saitou-Nei neighbor joining. On equal criterion values the lowest (i, j)
// index pair wins.
PhyloTree neighbor_joining(const DistanceMatrix& d, const NjOptions& options = {});

// Newick with branch lengths in shortest round-trip decimal form. Children are
// ordered by their smallest descendant label.
std::string write_newick(const PhyloTree& tree);

// Nontrivial bipartitions, each given by the side that excludes the smallest
// leaf label.
using Split = std::set<std::string>;
std::set<Split> tree_splits(const PhyloTree& tree);
std::size_t robinson_foulds(const PhyloTree& a, const PhyloTree& b);

struct NetworkEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string path_label;
  double rate = 0.0;
};

// Saturated species network of one site: a complete digraph with self-loops.
struct NetworkGraph {
  std::string name;
  std::vector<std::string> nodes;
  std::vector<NetworkEdge> edges;
};

NetworkGraph site_network(const SiteColumn& col, const RateMatrix& q,
                          const std::vector<std::string>& taxa);

std::string write_dot(const NetworkGraph& g);

}  // namespace nbp
