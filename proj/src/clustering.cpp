#include "wlprof/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

namespace wlprof {

namespace {

// lambda for zero-length merges (duplicate points).
constexpr double kMaxLambda = 1e300;

double lambda_of(double d) {
  if (!(d > 0.0)) return kMaxLambda;
  return std::min(1.0 / d, kMaxLambda);
}

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

}  // namespace

std::string_view to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::kEuclidean: return "euclidean";
    case DistanceKind::kManhattan: return "manhattan";
    case DistanceKind::kCosine: return "cosine";
  }
  return "euclidean";
}

DistanceKind distance_kind_from_string(std::string_view text) {
  for (auto k : {DistanceKind::kEuclidean, DistanceKind::kManhattan, DistanceKind::kCosine})
    if (to_string(k) == text) return k;
  throw Error(ErrorCode::kInvalidArgument, "unknown distance '" + std::string(text) + "'");
}

double distance(std::span<const double> a, std::span<const double> b, DistanceKind kind) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "distance between vectors of different dimension");
  switch (kind) {
    case DistanceKind::kEuclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    }
    case DistanceKind::kManhattan: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      return s;
    }
    case DistanceKind::kCosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 || nb == 0.0) return 1.0;
      const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
      return 1.0 - cosine;
    }
  }
  return 0.0;
}

double similarity(std::span<const double> a, std::span<const double> b, DistanceKind kind, double max_distance) {
  if (max_distance == 0.0) return 1.0;
  const double d = distance(a, b, kind);
  if (d > max_distance) throw Error(ErrorCode::kInvalidArgument, "distance exceeds the declared maximum");
  return 1.0 - d / max_distance;
}

std::vector<std::size_t> lexicographic_order(const Matrix& points) {
  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = points.row(a), rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

std::vector<int> dbscan(const Matrix& points, double eps, std::size_t min_points, DistanceKind kind,
                        std::optional<std::span<const std::size_t>> scan_order) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "DBSCAN eps must be positive");
  if (min_points < 2) throw Error(ErrorCode::kInvalidArgument, "DBSCAN min_points must be at least 2");
  const std::size_t n = points.rows();
  if (n < min_points) throw Error(ErrorCode::kInvalidArgument, "DBSCAN needs at least min_points points");

  std::vector<std::size_t> order;
  if (scan_order) {
    order.assign(scan_order->begin(), scan_order->end());
    if (order.size() != n) throw Error(ErrorCode::kInvalidArgument, "scan order does not cover every point");
  } else {
    order = lexicographic_order(points);
  }

  auto region = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q)
      if (distance(points.row(p), points.row(q), kind) <= eps) out.push_back(q);
    return out;
  };

  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  int next_cluster = 0;
  for (std::size_t p : order) {
    if (labels[p] != kUnvisited) continue;
    auto neighbours = region(p);
    if (neighbours.size() < min_points) {
      labels[p] = kOutlierLabel;
      continue;
    }
    const int cluster = next_cluster++;
    labels[p] = cluster;
    std::deque<std::size_t> frontier(neighbours.begin(), neighbours.end());
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (labels[q] == kOutlierLabel) labels[q] = cluster;
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      auto next = region(q);
      if (next.size() >= min_points) frontier.insert(frontier.end(), next.begin(), next.end());
    }
  }
  return labels;
}

std::vector<double> core_distances(const Matrix& points, std::size_t k, DistanceKind kind) {
  const std::size_t n = points.rows();
  if (k < 1 || k > n) throw Error(ErrorCode::kInvalidArgument, "core distance neighbour count out of range");
  std::vector<double> core(n);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[j] = i == j ? 0.0 : distance(points.row(i), points.row(j), kind);
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    core[i] = dist[k - 1];
  }
  return core;
}

std::vector<LinkageStep> mutual_reachability_linkage(const Matrix& points, std::size_t k, DistanceKind kind) {
  const std::size_t n = points.rows();
  const auto core = core_distances(points, k, kind);

  struct Edge {
    std::size_t a, b;
    double w;
  };
  std::vector<Edge> edges;
  edges.reserve(n > 0 ? n - 1 : 0);
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  for (std::size_t added = 1; added < n; ++added) {
    in_tree[current] = true;
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double mr = std::max({core[current], core[j], distance(points.row(current), points.row(j), kind)});
      if (mr < best[j]) {
        best[j] = mr;
        from[j] = current;
      }
      if (next == n || best[j] < best[next]) next = j;
    }
    edges.push_back({from[next], next, best[next]});
    current = next;
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

  DisjointSet sets(n);
  std::vector<std::size_t> node_of(n);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<std::size_t> size_of(n, 1);
  std::vector<LinkageStep> linkage;
  linkage.reserve(edges.size());
  for (const auto& e : edges) {
    const std::size_t ra = sets.find(e.a), rb = sets.find(e.b);
    const std::size_t merged = sets.unite(ra, rb);
    LinkageStep step{node_of[ra], node_of[rb], e.w, size_of[ra] + size_of[rb]};
    node_of[merged] = n + linkage.size();
    size_of[merged] = step.size;
    linkage.push_back(step);
  }
  return linkage;
}

std::vector<CondensedCluster> condense_tree(const std::vector<LinkageStep>& linkage, std::size_t n,
                                            std::size_t min_cluster_size) {
  auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : linkage[node - n].size; };
  auto leaves = [&](std::size_t node) {
    std::vector<std::size_t> out, stack{node};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (v < n) {
        out.push_back(v);
      } else {
        stack.push_back(linkage[v - n].right);
        stack.push_back(linkage[v - n].left);
      }
    }
    return out;
  };

  std::vector<CondensedCluster> tree(1);
  tree[0].parent = 0;
  tree[0].size = n;
  if (n < 2) {
    if (n == 1) tree[0].points.push_back(0);
    return tree;
  }

  auto fall_out = [&](std::size_t cluster, std::size_t node, double lambda) {
    for (std::size_t p : leaves(node)) {
      tree[cluster].points.push_back(p);
      tree[cluster].stability += lambda - tree[cluster].birth_lambda;
    }
  };

  // Merges at the same height form one split: expand children whose height
  // equals the parent's, so the result does not depend on tie order.
  auto split_parts = [&](std::size_t node) {
    const double height = linkage[node - n].distance;
    std::vector<std::size_t> parts, stack{node};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (v >= n && (v == node || linkage[v - n].distance == height)) {
        stack.push_back(linkage[v - n].right);
        stack.push_back(linkage[v - n].left);
      } else {
        parts.push_back(v);
      }
    }
    return parts;
  };

  std::vector<std::pair<std::size_t, std::size_t>> stack{{2 * n - 2, 0}};
  while (!stack.empty()) {
    auto [node, cluster] = stack.back();
    stack.pop_back();
    if (node < n) {
      tree[cluster].points.push_back(node);
      continue;
    }
    const double lambda = lambda_of(linkage[node - n].distance);
    const auto parts = split_parts(node);
    std::vector<std::size_t> big;
    for (std::size_t part : parts) {
      if (node_size(part) >= min_cluster_size)
        big.push_back(part);
      else
        fall_out(cluster, part, lambda);
    }
    if (big.size() == 1) {
      stack.emplace_back(big.front(), cluster);
    } else if (big.size() > 1) {
      for (std::size_t child : big) {
        CondensedCluster c;
        c.parent = cluster;
        c.birth_lambda = lambda;
        c.size = node_size(child);
        tree[cluster].stability += static_cast<double>(c.size) * (lambda - tree[cluster].birth_lambda);
        tree[cluster].children.push_back(tree.size());
        stack.emplace_back(child, tree.size());
        tree.push_back(std::move(c));
      }
    }
  }
  return tree;
}

std::vector<std::size_t> select_clusters(const std::vector<CondensedCluster>& tree) {
  if (tree.size() <= 1) return {0};
  std::vector<bool> selected(tree.size(), false);
  std::vector<double> effective(tree.size(), 0.0);
  for (std::size_t c = tree.size() - 1; c >= 1; --c) {
    double subtree = 0.0;
    for (std::size_t child : tree[c].children) subtree += effective[child];
    if (!tree[c].children.empty() && subtree > tree[c].stability) {
      effective[c] = subtree;
    } else {
      effective[c] = tree[c].stability;
      selected[c] = true;
      std::vector<std::size_t> stack(tree[c].children.begin(), tree[c].children.end());
      while (!stack.empty()) {
        const std::size_t d = stack.back();
        stack.pop_back();
        selected[d] = false;
        stack.insert(stack.end(), tree[d].children.begin(), tree[d].children.end());
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 1; c < tree.size(); ++c)
    if (selected[c]) out.push_back(c);
  return out;
}

std::vector<int> canonical_labels(std::span<const int> labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size(), kOutlierLabel);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

std::vector<int> hdbscan(const Matrix& points, std::size_t min_cluster_size, DistanceKind kind) {
  if (min_cluster_size < 2) throw Error(ErrorCode::kInvalidArgument, "HDBSCAN min_cluster_size must be at least 2");
  const std::size_t n = points.rows();
  if (n < min_cluster_size) throw Error(ErrorCode::kInvalidArgument, "HDBSCAN needs at least min_cluster_size points");

  const auto linkage = mutual_reachability_linkage(points, min_cluster_size, kind);
  const auto tree = condense_tree(linkage, n, min_cluster_size);
  const auto chosen = select_clusters(tree);

  std::vector<int> labels(n, kOutlierLabel);
  int next = 0;
  for (std::size_t c : chosen) {
    const int label = next++;
    std::vector<std::size_t> stack{c};
    while (!stack.empty()) {
      const std::size_t d = stack.back();
      stack.pop_back();
      for (std::size_t p : tree[d].points) labels[p] = label;
      stack.insert(stack.end(), tree[d].children.begin(), tree[d].children.end());
    }
  }
  return canonical_labels(labels);
}

}  // namespace wlprof
