#pragma once

#include <algorithm>
#include <deque>
#include <vector>

#include "shaftdock/cloud.hpp"
#include "shaftdock/kdtree.hpp"
#include "shaftdock/pca.hpp"

namespace shaftdock {

struct DbscanParams {
  double eps = 0.0;  // <= 0 selects the k-distance heuristic
  int min_pts = 4;
};

constexpr int kNoise = -1;

struct ClusterLabeling {
  std::vector<int> labels;  // kNoise or cluster id in [0, cluster_count)
  int cluster_count = 0;
  int seed_cluster_id = kNoise;
  double eps = 0.0;

  Eigen::Index noise_count() const { return std::count(labels.begin(), labels.end(), kNoise); }
};

/// Index of the projected point farthest from the origin; lowest index wins ties.
template <typename Scalar>
Eigen::Index pick_seed(const Projection2D<Scalar>& proj) {
  if (proj.size() == 0) throw processing_error("pick_seed: empty projection");
  Eigen::Index best = 0;
  Scalar best_norm = proj.points.col(0).squaredNorm();
  for (Eigen::Index i = 1; i < proj.size(); ++i) {
    const Scalar n = proj.points.col(i).squaredNorm();
    if (n > best_norm) {
      best_norm = n;
      best = i;
    }
  }
  return best;
}

/// Twice the median distance from each point to its k-th nearest other point.
/// Coincident points are skipped so repeated samples cannot collapse eps to zero.
template <typename Scalar>
double kdist_eps(const Projection2D<Scalar>& proj, int k = 4) {
  if (proj.size() <= k) throw processing_error("dbscan: too few points for the eps heuristic");
  const KdTree<Scalar, 2> tree(proj.points);
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(proj.size()));
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    const auto nn = tree.knn(proj.points.col(i), k + 1);
    dist.push_back(std::sqrt(static_cast<double>(nn.back().first)));
  }
  std::vector<double> positive;
  std::copy_if(dist.begin(), dist.end(), std::back_inserter(positive), [](double d) { return d > 0.0; });
  if (positive.empty()) throw processing_error("dbscan: all projected points coincide");
  auto mid = positive.begin() + static_cast<std::ptrdiff_t>(positive.size() / 2);
  std::nth_element(positive.begin(), mid, positive.end());
  return 2.0 * *mid;
}

namespace detail {

template <typename Scalar>
void expand_cluster(const KdTree<Scalar, 2>& tree, const Eigen::Matrix<Scalar, 2, Eigen::Dynamic>& pts,
                    Eigen::Index start, std::vector<Eigen::Index> neighbors, int id, Scalar eps,
                    int min_pts, std::vector<int>& labels, std::vector<char>& visited) {
  labels[static_cast<std::size_t>(start)] = id;
  std::deque<Eigen::Index> queue(neighbors.begin(), neighbors.end());
  while (!queue.empty()) {
    const Eigen::Index j = queue.front();
    queue.pop_front();
    const auto uj = static_cast<std::size_t>(j);
    if (labels[uj] == kNoise) labels[uj] = id;
    if (visited[uj]) continue;
    visited[uj] = 1;
    labels[uj] = id;
    neighbors = tree.radius(pts.col(j), eps);
    if (static_cast<int>(neighbors.size()) >= min_pts) queue.insert(queue.end(), neighbors.begin(), neighbors.end());
  }
}

}  // namespace detail

/// Density-based clustering. The eps-neighbourhood includes the point itself;
/// points are visited in index order and expansion is FIFO, so the labelling
/// is fully determined by the point order.
template <typename Scalar>
ClusterLabeling dbscan(const Projection2D<Scalar>& proj, DbscanParams params) {
  if (params.min_pts < 1) throw config_error("dbscan: min_pts must be >= 1");
  if (params.eps <= 0.0) params.eps = kdist_eps(proj, params.min_pts);

  ClusterLabeling out;
  out.eps = params.eps;
  const auto n = static_cast<std::size_t>(proj.size());
  out.labels.assign(n, kNoise);
  if (n == 0) return out;
  const KdTree<Scalar, 2> tree(proj.points);
  const auto eps = static_cast<Scalar>(params.eps);
  std::vector<char> visited(n, 0);
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (visited[ui]) continue;
    visited[ui] = 1;
    auto neighbors = tree.radius(proj.points.col(i), eps);
    if (static_cast<int>(neighbors.size()) < params.min_pts) continue;
    detail::expand_cluster(tree, proj.points, i, std::move(neighbors), out.cluster_count++, eps, params.min_pts,
                           out.labels, visited);
  }
  return out;
}

/// Grows only the cluster that contains `seed`; every other point stays noise.
template <typename Scalar>
ClusterLabeling expand_from_seed(const Projection2D<Scalar>& proj, DbscanParams params, Eigen::Index seed) {
  if (params.min_pts < 1) throw config_error("dbscan: min_pts must be >= 1");
  if (params.eps <= 0.0) params.eps = kdist_eps(proj, params.min_pts);
  ClusterLabeling out;
  out.eps = params.eps;
  const auto n = static_cast<std::size_t>(proj.size());
  out.labels.assign(n, kNoise);
  if (seed < 0 || seed >= proj.size()) throw processing_error("dbscan: seed index out of range");
  const KdTree<Scalar, 2> tree(proj.points);
  const auto eps = static_cast<Scalar>(params.eps);
  auto neighbors = tree.radius(proj.points.col(seed), eps);
  if (static_cast<int>(neighbors.size()) < params.min_pts) {
    // A border seed joins the cluster of its first core neighbour.
    const auto core = std::find_if(neighbors.begin(), neighbors.end(), [&](Eigen::Index j) {
      return static_cast<int>(tree.radius(proj.points.col(j), eps).size()) >= params.min_pts;
    });
    if (core == neighbors.end()) return out;
    seed = *core;
    neighbors = tree.radius(proj.points.col(seed), eps);
  }
  std::vector<char> visited(n, 0);
  visited[static_cast<std::size_t>(seed)] = 1;
  detail::expand_cluster(tree, proj.points, seed, std::move(neighbors), 0, eps, params.min_pts, out.labels, visited);
  out.cluster_count = 1;
  out.seed_cluster_id = 0;
  return out;
}

template <typename Scalar>
struct ThreadCluster {
  PointCloud<Scalar> cloud;
  std::vector<Eigen::Index> indices;
};

/// 3D points whose projections share the seed's cluster label.
template <typename Scalar>
ThreadCluster<Scalar> extract_thread_cluster(const PointCloud<Scalar>& cloud, ClusterLabeling& labeling,
                                             Eigen::Index seed) {
  if (static_cast<Eigen::Index>(labeling.labels.size()) != cloud.size())
    throw processing_error("extract_thread_cluster: labeling does not match cloud size");
  if (seed < 0 || seed >= cloud.size()) throw processing_error("extract_thread_cluster: seed index out of range");
  const int id = labeling.labels[static_cast<std::size_t>(seed)];
  if (id == kNoise)
    throw processing_error("extract_thread_cluster: seed point is noise; increase dbscan eps or lower min_pts");
  labeling.seed_cluster_id = id;
  ThreadCluster<Scalar> out;
  for (std::size_t i = 0; i < labeling.labels.size(); ++i)
    if (labeling.labels[i] == id) out.indices.push_back(static_cast<Eigen::Index>(i));
  out.cloud = cloud.select(out.indices);
  return out;
}

}  // namespace shaftdock
