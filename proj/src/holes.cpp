#include "shaftdock/holes.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "shaftdock/cylinder.hpp"
#include "shaftdock/kdtree.hpp"
#include "shaftdock/rng.hpp"

namespace shaftdock {

PlaneFrame::PlaneFrame(const PlaneModeld& plane) : origin(plane.point), n(plane.normal.normalized()) {
  u = any_orthogonal<double>(n);
  v = n.cross(u);
}

Eigen::Matrix2Xd PlaneFrame::to_2d(const PointCloudd& cloud) const {
  Eigen::Matrix<double, 2, 3> rows;
  rows.row(0) = u.transpose();
  rows.row(1) = v.transpose();
  return rows * (cloud.points().colwise() - origin);
}

std::vector<Point2d> convex_hull(std::vector<Point2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2d& a, const Point2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2d& o, const Point2d& a, const Point2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Point2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool inside_convex(const std::vector<Point2d>& polygon, const Point2d& q) {
  if (polygon.size() < 3) return false;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point2d& a = polygon[i];
    const Point2d& b = polygon[(i + 1) % polygon.size()];
    if ((b.x() - a.x()) * (q.y() - a.y()) - (b.y() - a.y()) * (q.x() - a.x()) < 0) return false;
  }
  return true;
}

std::vector<Eigen::Index> crop_to_polygon(const PointCloudd& cloud, const PlaneFrame& frame,
                                          const std::vector<Point2d>& polygon) {
  const Eigen::Matrix2Xd q = frame.to_2d(cloud);
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < q.cols(); ++i)
    if (inside_convex(polygon, q.col(i))) out.push_back(i);
  return out;
}

namespace {

struct Grid {
  int width = 0, height = 0;
  double cell = 1.0;
  Point2d min;

  int index(int x, int y) const { return y * width + x; }
  std::pair<int, int> cell_of(const Point2d& q) const {
    return {static_cast<int>(std::floor((q.x() - min.x()) / cell)), static_cast<int>(std::floor((q.y() - min.y()) / cell))};
  }
  Point2d center(int x, int y) const { return min + Point2d((x + 0.5) * cell, (y + 0.5) * cell); }
};

double median_nn_distance(const Eigen::Matrix2Xd& q) {
  const KdTree<double, 2> tree(q);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(q.cols()));
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    const auto nn = tree.knn(q.col(i), 2);
    if (nn.size() == 2 && nn[1].first > 0.0) d.push_back(std::sqrt(nn[1].first));
  }
  if (d.empty()) throw processing_error("presearch_holes: plane points coincide");
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace

std::vector<HoleCandidate> presearch_holes(const PointCloudd& plane_inliers, const PlaneModeld& plane,
                                           int expected_holes, const PresearchOptions& options) {
  if (expected_holes < 0) throw config_error("presearch_holes: expected_holes must be >= 0");
  if (expected_holes == 0) return {};
  if (plane_inliers.size() < 500) throw processing_error("presearch_holes: need at least 500 plane points");

  const PlaneFrame frame(plane);
  const Eigen::Matrix2Xd q = frame.to_2d(plane_inliers);
  Grid grid;
  grid.cell = options.cell_scale * median_nn_distance(q);
  grid.min = q.rowwise().minCoeff() - Point2d::Constant(grid.cell);
  const Point2d span = q.rowwise().maxCoeff() + Point2d::Constant(grid.cell) - grid.min;
  grid.width = static_cast<int>(std::ceil(span.x() / grid.cell)) + 1;
  grid.height = static_cast<int>(std::ceil(span.y() / grid.cell)) + 1;
  if (static_cast<long>(grid.width) * grid.height > 50'000'000L)
    throw processing_error("presearch_holes: occupancy grid too large; check plane inliers");

  const auto cells = static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height);
  std::vector<int> occupancy(cells, 0);
  std::vector<int> point_cell(static_cast<std::size_t>(q.cols()));
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    const auto [x, y] = grid.cell_of(q.col(i));
    point_cell[static_cast<std::size_t>(i)] = grid.index(x, y);
    ++occupancy[static_cast<std::size_t>(grid.index(x, y))];
  }

  // empty-cell components, 4-connected; those reaching the border are exterior
  std::vector<int> component(cells, -1);
  struct Component {
    std::vector<int> cells;
    bool exterior = false;
  };
  std::vector<Component> comps;
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x) {
      const int start = grid.index(x, y);
      if (occupancy[static_cast<std::size_t>(start)] || component[static_cast<std::size_t>(start)] >= 0) continue;
      Component c;
      const int id = static_cast<int>(comps.size());
      std::deque<int> queue{start};
      component[static_cast<std::size_t>(start)] = id;
      while (!queue.empty()) {
        const int at = queue.front();
        queue.pop_front();
        c.cells.push_back(at);
        const int cx = at % grid.width, cy = at / grid.width;
        if (cx == 0 || cy == 0 || cx == grid.width - 1 || cy == grid.height - 1) c.exterior = true;
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= grid.width || ny[k] >= grid.height) continue;
          const int nb = grid.index(nx[k], ny[k]);
          if (occupancy[static_cast<std::size_t>(nb)] || component[static_cast<std::size_t>(nb)] >= 0) continue;
          component[static_cast<std::size_t>(nb)] = id;
          queue.push_back(nb);
        }
      }
      comps.push_back(std::move(c));
    }

  std::vector<int> found;
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (!comps[i].exterior && static_cast<int>(comps[i].cells.size()) >= options.min_cells)
      found.push_back(static_cast<int>(i));
  if (static_cast<int>(found.size()) < expected_holes)
    throw processing_error("presearch_holes: expected " + std::to_string(expected_holes) + " holes, found " +
                           std::to_string(found.size()));

  if (static_cast<int>(found.size()) > expected_holes) {
    // a bolt pattern has equal holes: keep the run of `expected` sizes with the smallest spread
    std::vector<int> by_size = found;
    std::stable_sort(by_size.begin(), by_size.end(), [&](int a, int b) { return comps[static_cast<std::size_t>(a)].cells.size() < comps[static_cast<std::size_t>(b)].cells.size(); });
    std::size_t best_start = 0;
    double best_ratio = 1e300;
    for (std::size_t s = 0; s + static_cast<std::size_t>(expected_holes) <= by_size.size(); ++s) {
      const double lo = static_cast<double>(comps[static_cast<std::size_t>(by_size[s])].cells.size());
      const double hi = static_cast<double>(comps[static_cast<std::size_t>(by_size[s + static_cast<std::size_t>(expected_holes) - 1])].cells.size());
      if (hi / lo < best_ratio) {
        best_ratio = hi / lo;
        best_start = s;
      }
    }
    found.assign(by_size.begin() + static_cast<std::ptrdiff_t>(best_start),
                 by_size.begin() + static_cast<std::ptrdiff_t>(best_start) + expected_holes);
    std::sort(found.begin(), found.end());
  }

  std::vector<HoleCandidate> out;
  std::vector<char> grown(cells, 0);
  for (int id : found) {
    const auto& comp = comps[static_cast<std::size_t>(id)];
    HoleCandidate cand;
    cand.cells = static_cast<int>(comp.cells.size());
    Point2d sum = Point2d::Zero();
    std::fill(grown.begin(), grown.end(), 0);
    for (int at : comp.cells) {
      const int cx = at % grid.width, cy = at / grid.width;
      sum += grid.center(cx, cy);
      for (int dy = -options.grow_cells; dy <= options.grow_cells; ++dy)
        for (int dx = -options.grow_cells; dx <= options.grow_cells; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (x >= 0 && y >= 0 && x < grid.width && y < grid.height) grown[static_cast<std::size_t>(grid.index(x, y))] = 1;
        }
    }
    cand.center = sum / static_cast<double>(comp.cells.size());
    cand.center3d = frame.to_3d(cand.center);
    std::vector<Point2d> ring;
    for (Eigen::Index i = 0; i < q.cols(); ++i)
      if (grown[static_cast<std::size_t>(point_cell[static_cast<std::size_t>(i)])]) ring.push_back(q.col(i));
    cand.polygon = convex_hull(std::move(ring));
    out.push_back(std::move(cand));
  }

  const Point2d mid = q.rowwise().mean();
  std::stable_sort(out.begin(), out.end(), [&](const HoleCandidate& a, const HoleCandidate& b) {
    return std::atan2(a.center.y() - mid.y(), a.center.x() - mid.x()) <
           std::atan2(b.center.y() - mid.y(), b.center.x() - mid.x());
  });
  return out;
}

std::vector<Eigen::Index> hole_inliers(const PointCloudd& region, const HoleAxis& axis, double threshold) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < region.size(); ++i)
    if (std::abs(distance_to_line(region.point(i), axis.point, axis.direction) - axis.radius) < threshold)
      out.push_back(i);
  return out;
}

HoleAxis fit_hole_axis(const PointCloudd& region, const PlaneModeld& plane, int iterations, double threshold,
                       std::uint64_t seed, const HoleFitOptions& options) {
  if (iterations < 1 || !(threshold > 0.0)) throw config_error("fit_hole_axis: invalid iterations or threshold");
  if (region.size() < options.min_inliers)
    throw processing_error("fit_hole_axis: region has only " + std::to_string(region.size()) + " points");
  const PlaneFrame frame(plane);
  const Eigen::Matrix2Xd q = frame.to_2d(region);
  const auto n = static_cast<std::uint64_t>(q.cols());
  CounterRng rng(seed, 0x686f6c65ULL);

  Eigen::Index best_count = 0;
  Point2d best_center = Point2d::Zero();
  double best_radius = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const auto i0 = static_cast<Eigen::Index>(rng.below(n));
    const auto i1 = static_cast<Eigen::Index>(rng.below(n));
    const auto i2 = static_cast<Eigen::Index>(rng.below(n));
    if (i0 == i1 || i0 == i2 || i1 == i2) continue;
    const Point2d a = q.col(i0), b = q.col(i1), c = q.col(i2);
    const double det = 2.0 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
    if (std::abs(det) < 1e-12) continue;
    const double b2 = (b - a).squaredNorm(), c2 = (c - a).squaredNorm();
    const Point2d center = a + Point2d((c.y() - a.y()) * b2 - (b.y() - a.y()) * c2,
                                       (b.x() - a.x()) * c2 - (c.x() - a.x()) * b2) / det;
    const double radius = (a - center).norm();
    if (radius < options.min_radius || radius > options.max_radius) continue;
    const Eigen::Index count = (((q.colwise() - center).colwise().norm().array() - radius).abs() < threshold).count();
    if (count > best_count) {
      best_count = count;
      best_center = center;
      best_radius = radius;
    }
  }
  if (best_count < options.min_inliers)
    throw processing_error("fit_hole_axis: no cylindrical consensus (best " + std::to_string(best_count) + " points)");

  std::vector<Eigen::Index> inl;
  for (Eigen::Index i = 0; i < q.cols(); ++i)
    if (std::abs((q.col(i) - best_center).norm() - best_radius) < threshold) inl.push_back(i);

  CylinderFitOptions fit_opts;
  fit_opts.max_tilt = deg2rad(options.max_tilt_deg);
  Cylinder cyl{frame.to_3d(best_center), frame.n, best_radius};
  HoleAxis axis;
  for (int pass = 0; pass < 2; ++pass) {
    const PointCloudd subset = region.select(inl);
    const auto fit = fit_cylinder_lsq(subset.points(), {cyl.point, frame.n, cyl.radius}, fit_opts);
    cyl = fit.cylinder;
    Point3d dir = cyl.direction.dot(frame.n) < 0.0 ? Point3d(-cyl.direction) : cyl.direction;
    const double s = -frame.n.dot(cyl.point - frame.origin) / frame.n.dot(dir);
    axis.point = cyl.point + s * dir;
    axis.direction = dir;
    axis.radius = cyl.radius;
    cyl.point = axis.point;
    inl = hole_inliers(region, axis, threshold);
    if (static_cast<int>(inl.size()) < options.min_inliers)
      throw processing_error("fit_hole_axis: consensus fell below " + std::to_string(options.min_inliers) + " points");
  }
  axis.inliers = inl.size();
  return axis;
}

}  // namespace shaftdock
