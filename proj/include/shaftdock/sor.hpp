#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "shaftdock/cloud.hpp"
#include "shaftdock/kdtree.hpp"

namespace shaftdock {

/// Which per-point statistic is tested against mu +/- n_sigma * sigma.
/// Mean divides the summed neighbour distance by k so both sides are distances;
/// Sum is the literal summed distance.
enum class SorStatistic { Mean, Sum };

struct SorParams {
  int k = 20;
  double n_sigma = 3.0;
  SorStatistic statistic = SorStatistic::Mean;

  void validate() const {
    if (k < 1) throw config_error("sor: k must be >= 1");
    if (!(n_sigma > 0.0)) throw config_error("sor: n_sigma must be > 0");
  }
};

struct SorStats {
  double mu = 0.0;
  double sigma = 0.0;
  Eigen::Index removed_count = 0;
};

template <typename Scalar>
struct SorResult {
  PointCloud<Scalar> cloud;
  SorStats stats;
  std::vector<Eigen::Index> kept;  // indices into the input, ascending
};

/// k-nearest-neighbour distances of every point, excluding the point itself.
/// Row i holds the distances of point i sorted ascending.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> knn_distances(const PointCloud<Scalar>& cloud, int k) {
  const KdTree<Scalar, 3> tree(cloud.points());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d(cloud.size(), k);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    auto nn = tree.knn(cloud.point(i), k + 1);
    auto self = std::find_if(nn.begin(), nn.end(), [i](const auto& n) { return n.second == i; });
    nn.erase(self != nn.end() ? self : nn.end() - 1);
    for (int j = 0; j < k; ++j) d(i, j) = std::sqrt(nn[static_cast<std::size_t>(j)].first);
  }
  return d;
}

/// Single-pass statistical outlier removal. mu and sigma are taken over all
/// m*k neighbour distances of the input cloud; a point is dropped when its
/// statistic falls outside mu +/- n_sigma * sigma.
template <typename Scalar>
SorResult<Scalar> sor_filter(const PointCloud<Scalar>& cloud, const SorParams& params) {
  params.validate();
  if (cloud.size() <= params.k) throw processing_error("sor: cloud size must exceed k");

  const auto d = knn_distances(cloud, params.k);
  const double count = static_cast<double>(d.size());
  const double mu = static_cast<double>(d.sum()) / count;
  const double sigma = std::sqrt(static_cast<double>((d.array() - Scalar(mu)).square().sum()) / count);
  const double lo = mu - params.n_sigma * sigma;
  const double hi = mu + params.n_sigma * sigma;

  SorResult<Scalar> out;
  out.kept.reserve(static_cast<std::size_t>(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    double stat = static_cast<double>(d.row(i).sum());
    if (params.statistic == SorStatistic::Mean) stat /= params.k;
    if (!(stat > hi || stat < lo)) out.kept.push_back(i);
  }
  out.cloud = cloud.select(out.kept);
  out.stats = {mu, sigma, cloud.size() - static_cast<Eigen::Index>(out.kept.size())};
  return out;
}

}  // namespace shaftdock
