#include "gpcca/clustering.hpp"

#include "gpcca/error.hpp"
#include "gpcca/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

namespace gpcca {

NeighborGraph::NeighborGraph(Index nodes, std::span<const Edge> edges) : nodes_(nodes) {
  if (nodes < 0) throw InputError("node count must be non-negative");
  std::vector<Index> count(static_cast<std::size_t>(nodes) + 1, 0);
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= nodes || e.b >= nodes) throw InputError("edge endpoint out of range");
    if (e.a == e.b) throw InputError("self-loops are not allowed");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) throw InputError("edge weights must be positive and finite");
    ++count[static_cast<std::size_t>(e.a) + 1];
    ++count[static_cast<std::size_t>(e.b) + 1];
    total_weight_ += e.weight;
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  offsets_ = count;
  std::vector<std::pair<Index, double>> slots(static_cast<std::size_t>(offsets_.back()));
  std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges) {
    slots[static_cast<std::size_t>(fill[e.a]++)] = {e.b, e.weight};
    slots[static_cast<std::size_t>(fill[e.b]++)] = {e.a, e.weight};
  }
  neighbors_.resize(slots.size());
  weights_.resize(slots.size());
  for (Index i = 0; i < nodes; ++i) {
    auto first = slots.begin() + offsets_[i];
    auto last = slots.begin() + offsets_[i + 1];
    std::sort(first, last, [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto it = first; it != last; ++it) {
      if (it != first && (it - 1)->first == it->first) {
        throw InputError("duplicate edge " + std::to_string(i) + " - " + std::to_string(it->first));
      }
      const auto pos = static_cast<std::size_t>(it - slots.begin());
      neighbors_[pos] = it->first;
      weights_[pos] = it->second;
    }
  }
}

std::span<const Index> NeighborGraph::neighbors(Index i) const {
  return {neighbors_.data() + offsets_[i], static_cast<std::size_t>(degree(i))};
}

std::span<const double> NeighborGraph::weights(Index i) const {
  return {weights_.data() + offsets_[i], static_cast<std::size_t>(degree(i))};
}

double NeighborGraph::weight(Index i, Index j) const {
  const auto nb = neighbors(i);
  const auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return 0.0;
  return weights(i)[static_cast<std::size_t>(it - nb.begin())];
}

NeighborGraph NeighborGraph::permuted(std::span<const Index> perm) const {
  if (static_cast<Index>(perm.size()) != nodes_) throw InputError("permutation length mismatch");
  std::vector<Edge> edges;
  for (Index i = 0; i < nodes_; ++i) {
    const auto nb = neighbors(i);
    const auto w = weights(i);
    for (std::size_t t = 0; t < nb.size(); ++t) {
      if (nb[t] > i) edges.push_back({perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(nb[t])], w[t]});
    }
  }
  return NeighborGraph(nodes_, edges);
}

Partition Partition::from_labels(std::span<const std::int64_t> raw) {
  Partition p;
  p.labels.reserve(raw.size());
  std::unordered_map<std::int64_t, Index> ids;
  for (auto v : raw) {
    auto [it, inserted] = ids.try_emplace(v, static_cast<Index>(ids.size()));
    p.labels.push_back(it->second);
  }
  p.clusters = static_cast<Index>(ids.size());
  return p;
}

NeighborGraph knn_graph(const Matrix& embeddings, Index k, int threads) {
  const Index n = embeddings.cols();
  if (n < 1) throw InputError("embedding has no samples");
  if (k < 1 || k >= n) {
    throw InputError("neighbour count must satisfy 1 <= k < n (k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
  }
  if (!embeddings.allFinite()) throw InputError("embedding contains non-finite values");

  std::vector<std::vector<Index>> nearest(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t qi) {
    const auto i = static_cast<Index>(qi);
    std::vector<std::pair<double, Index>> cand;
    cand.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
      if (j != i) cand.emplace_back((embeddings.col(i) - embeddings.col(j)).squaredNorm(), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    auto& out = nearest[qi];
    out.reserve(static_cast<std::size_t>(k));
    for (Index t = 0; t < k; ++t) out.push_back(cand[static_cast<std::size_t>(t)].second);
  });

  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * k));
  for (Index i = 0; i < n; ++i) {
    for (Index j : nearest[static_cast<std::size_t>(i)]) pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<NeighborGraph::Edge> edges;
  edges.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    const double dist = std::sqrt((embeddings.col(a) - embeddings.col(b)).squaredNorm());
    edges.push_back({a, b, 1.0 / (1.0 + dist)});
  }
  return NeighborGraph(n, edges);
}

namespace {

// Adjacency with explicit self weight A_ii; strength k_i = A_ii + sum_j A_ij.
struct LevelGraph {
  std::vector<std::vector<std::pair<Index, double>>> adj;
  std::vector<double> self;
  std::vector<double> strength;

  Index size() const { return static_cast<Index>(adj.size()); }
};

// One round of local moves; returns the community of every node, numbered by
// first appearance, and whether any node moved.
bool local_moves(const LevelGraph& g, double resolution, double two_w, std::vector<Index>& comm) {
  const Index n = g.size();
  comm.resize(static_cast<std::size_t>(n));
  std::iota(comm.begin(), comm.end(), Index{0});
  std::vector<double> tot(g.strength);
  std::vector<double> link(static_cast<std::size_t>(n), 0.0);
  std::vector<Index> touched;
  bool any = false;
  constexpr int kMaxPasses = 1000;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool moved = false;
    for (Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const Index own = comm[ui];
      const double ki = g.strength[ui];
      touched.clear();
      for (auto [j, w] : g.adj[ui]) {
        const auto c = static_cast<std::size_t>(comm[static_cast<std::size_t>(j)]);
        if (link[c] == 0.0) touched.push_back(static_cast<Index>(c));
        link[c] += w;
      }
      tot[static_cast<std::size_t>(own)] -= ki;
      const double scale = resolution * ki / two_w;
      Index best = own;
      double best_gain = link[static_cast<std::size_t>(own)] - scale * tot[static_cast<std::size_t>(own)];
      const double eps = 1e-13 * std::max(1.0, ki);
      std::sort(touched.begin(), touched.end());
      for (Index c : touched) {
        const auto uc = static_cast<std::size_t>(c);
        const double gain = link[uc] - scale * tot[uc];
        if (gain > best_gain + eps) {
          best = c;
          best_gain = gain;
        }
      }
      for (Index c : touched) link[static_cast<std::size_t>(c)] = 0.0;
      tot[static_cast<std::size_t>(best)] += ki;
      if (best != own) {
        comm[ui] = best;
        moved = true;
        any = true;
      }
    }
    if (!moved) break;
  }
  std::vector<Index> renumber(static_cast<std::size_t>(n), -1);
  Index next = 0;
  for (auto& c : comm) {
    auto& r = renumber[static_cast<std::size_t>(c)];
    if (r < 0) r = next++;
    c = r;
  }
  return any;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<Index>& comm, Index communities) {
  LevelGraph out;
  const auto nc = static_cast<std::size_t>(communities);
  out.adj.resize(nc);
  out.self.assign(nc, 0.0);
  out.strength.assign(nc, 0.0);
  std::vector<std::vector<Index>> members(nc);
  for (Index i = 0; i < g.size(); ++i) members[static_cast<std::size_t>(comm[static_cast<std::size_t>(i)])].push_back(i);
  std::vector<double> acc(nc, 0.0);
  std::vector<Index> touched;
  for (std::size_t c = 0; c < nc; ++c) {
    touched.clear();
    for (Index i : members[c]) {
      const auto ui = static_cast<std::size_t>(i);
      out.self[c] += g.self[ui];
      out.strength[c] += g.strength[ui];
      for (auto [j, w] : g.adj[ui]) {
        const auto d = static_cast<std::size_t>(comm[static_cast<std::size_t>(j)]);
        if (d == c) {
          out.self[c] += w;
        } else {
          if (acc[d] == 0.0) touched.push_back(static_cast<Index>(d));
          acc[d] += w;
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index d : touched) {
      out.adj[c].emplace_back(d, acc[static_cast<std::size_t>(d)]);
      acc[static_cast<std::size_t>(d)] = 0.0;
    }
  }
  return out;
}

}  // namespace

Partition louvain(const NeighborGraph& graph, const LouvainOptions& options) {
  const Index n = graph.nodes();
  if (n < 1) throw InputError("louvain: empty graph");
  if (!(options.resolution > 0.0)) throw InputError("resolution must be > 0");

  std::vector<Index> order = options.order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);
  } else {
    if (static_cast<Index>(order.size()) != n) throw InputError("visiting order length mismatch");
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (Index v : order) {
      if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) throw InputError("visiting order is not a permutation");
      seen[static_cast<std::size_t>(v)] = 1;
    }
  }
  std::vector<Index> rank(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p;

  // Internal node p is original node order[p].
  LevelGraph level;
  level.adj.resize(static_cast<std::size_t>(n));
  level.self.assign(static_cast<std::size_t>(n), 0.0);
  level.strength.assign(static_cast<std::size_t>(n), 0.0);
  for (Index p = 0; p < n; ++p) {
    const Index v = order[static_cast<std::size_t>(p)];
    auto& row = level.adj[static_cast<std::size_t>(p)];
    const auto nb = graph.neighbors(v);
    const auto w = graph.weights(v);
    for (std::size_t t = 0; t < nb.size(); ++t) {
      row.emplace_back(rank[static_cast<std::size_t>(nb[t])], w[t]);
      level.strength[static_cast<std::size_t>(p)] += w[t];
    }
    std::sort(row.begin(), row.end());
  }

  std::vector<Index> membership(static_cast<std::size_t>(n));
  std::iota(membership.begin(), membership.end(), Index{0});
  const double two_w = 2.0 * graph.total_weight();
  if (two_w > 0.0) {
    std::vector<Index> comm;
    while (true) {
      const bool moved = local_moves(level, options.resolution, two_w, comm);
      if (!moved) break;
      for (auto& m : membership) m = comm[static_cast<std::size_t>(m)];
      const Index communities = *std::max_element(comm.begin(), comm.end()) + 1;
      level = aggregate(level, comm, communities);
    }
  }

  std::vector<std::int64_t> raw(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) raw[static_cast<std::size_t>(p)] = membership[static_cast<std::size_t>(p)];
  const Partition internal = Partition::from_labels(raw);
  Partition out;
  out.clusters = internal.clusters;
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) {
    out.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = internal.labels[static_cast<std::size_t>(p)];
  }
  return out;
}

double modularity(const NeighborGraph& graph, const Partition& partition, double resolution) {
  if (partition.size() != graph.nodes()) throw InputError("partition size does not match graph");
  const double two_w = 2.0 * graph.total_weight();
  if (two_w == 0.0) return 0.0;
  std::vector<double> in(static_cast<std::size_t>(partition.clusters), 0.0);
  std::vector<double> tot(static_cast<std::size_t>(partition.clusters), 0.0);
  for (Index i = 0; i < graph.nodes(); ++i) {
    const auto ci = static_cast<std::size_t>(partition.labels[static_cast<std::size_t>(i)]);
    const auto nb = graph.neighbors(i);
    const auto w = graph.weights(i);
    for (std::size_t t = 0; t < nb.size(); ++t) {
      tot[ci] += w[t];
      if (static_cast<std::size_t>(partition.labels[static_cast<std::size_t>(nb[t])]) == ci) in[ci] += w[t];
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < in.size(); ++c) {
    const double f = tot[c] / two_w;
    q += in[c] / two_w - resolution * f * f;
  }
  return q;
}

double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) {
    throw InputError("partition length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const auto comb2 = [](double x) { return 0.5 * x * (x - 1.0); };
  const auto ka = static_cast<std::size_t>(a.clusters);
  const auto kb = static_cast<std::size_t>(b.clusters);
  std::vector<double> table(ka * kb, 0.0);
  std::vector<double> rows(ka, 0.0);
  std::vector<double> cols(kb, 0.0);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const auto x = static_cast<std::size_t>(a.labels[i]);
    const auto y = static_cast<std::size_t>(b.labels[i]);
    table[x * kb + y] += 1.0;
    rows[x] += 1.0;
    cols[y] += 1.0;
  }
  double index = 0.0;
  for (double v : table) index += comb2(v);
  double sa = 0.0;
  double sb = 0.0;
  for (double v : rows) sa += comb2(v);
  for (double v : cols) sb += comb2(v);
  const double total = comb2(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

Partition cluster_embedding(const Matrix& embeddings, const ClusterOptions& options) {
  const Index n = embeddings.cols();
  if (n == 1) return Partition{{0}, 1};
  const Index k = std::min(options.neighbors, n - 1);
  return louvain(knn_graph(embeddings, k, options.threads), {options.resolution, options.seed, {}});
}

}  // namespace gpcca
