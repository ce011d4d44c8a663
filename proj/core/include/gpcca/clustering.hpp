#pragma once

#include "gpcca/dataset.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gpcca {

/// Weighted undirected graph in CSR form. Neighbour lists are sorted by
/// index; each edge is stored in both directions; no self-loops.
class NeighborGraph {
 public:
  struct Edge {
    Index a = 0;
    Index b = 0;
    double weight = 0.0;
  };

  NeighborGraph() = default;
  /// Builds from an undirected edge list. Rejects self-loops, non-positive
  /// weights, out-of-range endpoints and duplicate edges.
  NeighborGraph(Index nodes, std::span<const Edge> edges);

  Index nodes() const noexcept { return nodes_; }
  Index degree(Index i) const { return offsets_[i + 1] - offsets_[i]; }
  std::span<const Index> neighbors(Index i) const;
  std::span<const double> weights(Index i) const;
  /// Sum of all edge weights, each undirected edge counted once.
  double total_weight() const noexcept { return total_weight_; }
  /// Weight of edge (i, j), 0 if absent.
  double weight(Index i, Index j) const;

  /// Relabels nodes: node i of this graph becomes node perm[i].
  NeighborGraph permuted(std::span<const Index> perm) const;

 private:
  Index nodes_ = 0;
  std::vector<Index> offsets_{0};
  std::vector<Index> neighbors_;
  std::vector<double> weights_;
  double total_weight_ = 0.0;
};

/// Cluster assignment with labels 0..clusters-1, every label used.
struct Partition {
  std::vector<Index> labels;
  Index clusters = 0;

  Index size() const noexcept { return static_cast<Index>(labels.size()); }

  /// Renumbers arbitrary integer labels by order of first appearance.
  static Partition from_labels(std::span<const std::int64_t> raw);
};

/// Symmetrized (union) k-nearest-neighbour graph over the columns of
/// `embeddings`, Euclidean distance, weight 1 / (1 + distance). Ties in
/// distance go to the smaller index.
NeighborGraph knn_graph(const Matrix& embeddings, Index k, int threads = 1);

struct LouvainOptions {
  double resolution = 0.8;
  std::uint64_t seed = 0;
  /// Explicit node visiting order (a permutation of 0..n-1). When empty the
  /// order is a shuffle seeded by `seed`.
  std::vector<Index> order;
};

/// Multi-level Louvain on Q = sum_c [in_c / 2W - gamma (tot_c / 2W)^2].
/// Communities are numbered by first appearance along the visiting order.
Partition louvain(const NeighborGraph& graph, const LouvainOptions& options = {});

/// Resolution-scaled Newman modularity of `partition` on `graph`.
double modularity(const NeighborGraph& graph, const Partition& partition, double resolution);

double adjusted_rand_index(const Partition& a, const Partition& b);

struct ClusterOptions {
  Index neighbors = 20;
  double resolution = 0.8;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// knn_graph (k clamped to n - 1) followed by louvain on the columns of `embeddings`.
Partition cluster_embedding(const Matrix& embeddings, const ClusterOptions& options = {});

}  // namespace gpcca
