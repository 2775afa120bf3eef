#include "shaftdock/helix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shaftdock/cylinder.hpp"

namespace shaftdock {
namespace {

constexpr double kTwoPi = 2.0 * kPi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

double azimuth(const Point3d& p) { return wrap_2pi(std::atan2(p.y(), p.x())); }

/// Unwrapped curve parameter of the turn nearest to `p` along the axis.
double unwrapped_parameter(const Point3d& p, const HelixParams& h) {
  const double theta = azimuth(p);
  const double turns = std::round((kTwoPi * p.z() / h.pitch + h.phase - theta) / kTwoPi);
  return theta + kTwoPi * turns;
}

std::vector<Eigen::Index> support_band(const PointCloudd::Matrix& local, const HelixParams& h, double gate) {
  std::vector<Eigen::Index> out;
  const double band = gate * h.pitch;
  for (Eigen::Index i = 0; i < local.cols(); ++i) {
    const Point3d p = local.col(i);
    if (std::abs(std::hypot(p.x(), p.y()) - h.radius) <= band && std::abs(helix_axial_residual(p, h)) <= band)
      out.push_back(i);
  }
  return out;
}

double rms_distance(const PointCloudd::Matrix& local, const std::vector<Eigen::Index>& idx, const HelixParams& h) {
  if (idx.empty()) return 0.0;
  double sum = 0.0;
  for (auto i : idx) {
    const double d = helix_distance(local.col(i), h);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(idx.size()));
}

/// z = a * t + b regression over unwrapped curve parameters, plus mean radius.
std::optional<HelixParams> refit(const PointCloudd::Matrix& local, const std::vector<Eigen::Index>& idx,
                                 const HelixParams& h) {
  if (idx.size() < 3) return std::nullopt;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(idx.size()), 2);
  Eigen::VectorXd z(static_cast<Eigen::Index>(idx.size()));
  double radius = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Point3d p = local.col(idx[k]);
    const auto row = static_cast<Eigen::Index>(k);
    a(row, 0) = unwrapped_parameter(p, h);
    a(row, 1) = 1.0;
    z(row) = p.z();
    radius += std::hypot(p.x(), p.y());
  }
  const Eigen::Vector2d ab = a.colPivHouseholderQr().solve(z);
  if (!(ab(0) > 0.0)) return std::nullopt;
  HelixParams out;
  out.radius = radius / static_cast<double>(idx.size());
  out.pitch = kTwoPi * ab(0);
  out.phase = wrap_2pi(-ab(1) / ab(0));
  return out;
}

}  // namespace

AxisFrame AxisFrame::along(const Point3d& origin, const Point3d& axis) {
  AxisFrame f;
  f.origin = origin;
  const Point3d z = axis.normalized();
  const Point3d x = any_orthogonal<double>(z);
  f.axes.col(0) = x;
  f.axes.col(1) = z.cross(x);
  f.axes.col(2) = z;
  return f;
}

AxisFrame AxisFrame::from_basis(const PcaBasisd& basis, int axis_index) {
  if (axis_index < 0 || axis_index > 2) throw config_error("axis index must be 0, 1 or 2");
  AxisFrame f;
  f.origin = basis.mean;
  const Point3d z = basis.axis(axis_index).normalized();
  Point3d x = basis.axis((axis_index + 1) % 3);
  x = (x - x.dot(z) * z).normalized();
  f.axes.col(0) = x;
  f.axes.col(1) = z.cross(x);
  f.axes.col(2) = z;
  return f;
}

std::optional<PointHelixParams> point_to_params(const Point3d& local, int turn_hint) {
  const double radius = std::hypot(local.x(), local.y());
  if (radius < 1e-9) return std::nullopt;
  const double theta_total = azimuth(local) + kTwoPi * turn_hint;
  if (theta_total == 0.0) return std::nullopt;
  return PointHelixParams{radius, kTwoPi * local.z() / theta_total, theta_total};
}

void HoughConfig::validate() const {
  if (!(r_res > 0.0 && d_res > 0.0 && phi_res > 0.0)) throw config_error("hough: resolution must be > 0");
  if (!(r_min > 0.0 && r_max > r_min)) throw config_error("hough: need 0 < r_min < r_max");
  if (!(d_min > 0.0 && d_max > d_min)) throw config_error("hough: need 0 < d_min < d_max");
  if (refine_iterations < 0) throw config_error("hough: refine_iterations must be >= 0");
  if (!(support_gate > 0.0 && support_gate <= 0.5)) throw config_error("hough: support_gate must be in (0, 0.5]");
}

HoughAccumulator::HoughAccumulator(HoughConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  r_bins_ = static_cast<int>(std::lround((cfg_.r_max - cfg_.r_min) / cfg_.r_res)) + 1;
  d_bins_ = static_cast<int>(std::lround((cfg_.d_max - cfg_.d_min) / cfg_.d_res)) + 1;
  phi_bins_ = static_cast<int>(std::ceil(kTwoPi / cfg_.phi_res - 1e-9));
}

void HoughAccumulator::accumulate(const PointCloudd::Matrix& local) {
  best_ = {};
  total_ = 0;
  kept_.clear();

  // Azimuth unwrapped along the axis: neighbours in z are neighbours on the
  // curve, so one offset (phase and turn) is shared by every point.
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < local.cols(); ++i)
    if (std::hypot(local(0, i), local(1, i)) >= 1e-9) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (int k : {2, 0, 1})
      if (local(k, a) != local(k, b)) return local(k, a) < local(k, b);
    return a < b;
  });
  std::vector<double> unwrapped(static_cast<std::size_t>(local.cols()), 0.0);
  double prev = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double theta = azimuth(local.col(order[k]));
    if (k == 0) {
      acc = theta;
    } else {
      double step = theta - prev;
      step -= kTwoPi * std::round(step / kTwoPi);
      acc += step;
    }
    prev = theta;
    unwrapped[static_cast<std::size_t>(order[k])] = acc;
  }

  std::map<int, std::vector<Eigen::Index>> by_radius;
  for (auto i : order) {
    const long bin = std::lround((std::hypot(local(0, i), local(1, i)) - cfg_.r_min) / cfg_.r_res);
    if (bin < 0 || bin >= r_bins_) continue;
    by_radius[static_cast<int>(bin)].push_back(i);
  }

  const double d_lo = cfg_.d_min - 0.5 * cfg_.d_res;
  const double d_hi = cfg_.d_max + 0.5 * cfg_.d_res;
  const auto phi_n = static_cast<std::size_t>(phi_bins_);
  std::vector<std::uint64_t> keys;
  for (const auto& [rbin, members] : by_radius) {
    if (members.size() < cfg_.min_votes) continue;
    // turn offsets n for which some member gets a pitch inside [d_lo, d_hi]
    double c_lo = std::numeric_limits<double>::infinity(), c_hi = -c_lo;
    for (auto i : members) {
      const double z = local(2, i);
      if (std::abs(z) < 1e-12) continue;
      const double t_a = kTwoPi * z / d_hi, t_b = kTwoPi * z / d_lo;
      const double u = unwrapped[static_cast<std::size_t>(i)];
      c_lo = std::min(c_lo, std::min(t_a, t_b) - u);
      c_hi = std::max(c_hi, std::max(t_a, t_b) - u);
    }
    if (!(c_lo <= c_hi)) continue;
    // offset c = 2 pi n - phi with phi in [0, 2 pi)
    const long n_lo = static_cast<long>(std::floor(c_lo / kTwoPi));
    const long n_hi = static_cast<long>(std::ceil(c_hi / kTwoPi)) + 1;
    std::vector<std::uint32_t> kept;
    if (cfg_.keep_votes) kept.assign(static_cast<std::size_t>(d_bins_) * phi_n, 0);
    for (long n = n_lo; n <= n_hi; ++n) {
      keys.clear();
      for (auto i : members) {
        const double z = local(2, i);
        const double u = unwrapped[static_cast<std::size_t>(i)] + kTwoPi * static_cast<double>(n);
        for (int j = 0; j < phi_bins_; ++j) {
          const double theta_total = u - phi_center(j);
          if (theta_total == 0.0) continue;
          const long dbin = std::lround((kTwoPi * z / theta_total - cfg_.d_min) / cfg_.d_res);
          if (dbin < 0 || dbin >= d_bins_) continue;
          keys.push_back(static_cast<std::uint64_t>(dbin) * phi_n + static_cast<std::uint64_t>(j));
        }
      }
      total_ += keys.size();
      std::sort(keys.begin(), keys.end());
      for (std::size_t a = 0; a < keys.size();) {
        std::size_t b = a;
        while (b < keys.size() && keys[b] == keys[a]) ++b;
        const auto v = static_cast<std::uint32_t>(b - a);
        const int d = static_cast<int>(keys[a] / phi_n), j = static_cast<int>(keys[a] % phi_n);
        if (v > best_.votes) best_ = {rbin, d, j, v, static_cast<int>(n)};
        if (cfg_.keep_votes) kept[keys[a]] = std::max(kept[keys[a]], v);
        a = b;
      }
    }
    if (cfg_.keep_votes) kept_[rbin] = std::move(kept);
  }
}

std::uint32_t HoughAccumulator::votes(int r, int d, int phi) const {
  if (!cfg_.keep_votes) throw processing_error("hough: votes are only stored with keep_votes");
  const auto it = kept_.find(r);
  if (it == kept_.end() || d < 0 || d >= d_bins_ || phi < 0 || phi >= phi_bins_) return 0;
  return it->second[static_cast<std::size_t>(d) * static_cast<std::size_t>(phi_bins_) + static_cast<std::size_t>(phi)];
}

std::vector<int> HoughAccumulator::stored_radius_bins() const {
  std::vector<int> out;
  for (const auto& kv : kept_) out.push_back(kv.first);
  return out;
}

double helix_axial_residual(const Point3d& local, const HelixParams& h) {
  const double predicted = h.pitch * (azimuth(local) - h.phase) / kTwoPi;
  double r = std::fmod(local.z() - predicted, h.pitch);
  if (r < -0.5 * h.pitch) r += h.pitch;
  if (r >= 0.5 * h.pitch) r -= h.pitch;
  return r;
}

double helix_distance(const Point3d& local, const HelixParams& h) {
  const double c = h.pitch / kTwoPi;
  double t = unwrapped_parameter(local, h);
  for (int it = 0; it < 20; ++it) {
    const Point3d diff = local - helix_point(h, t);
    const Point3d d1(-h.radius * std::sin(t), h.radius * std::cos(t), c);
    const Point3d d2(-h.radius * std::cos(t), -h.radius * std::sin(t), 0.0);
    const double g = -diff.dot(d1);
    const double hess = d1.squaredNorm() - diff.dot(d2);
    const double step = hess > 1e-12 ? g / hess : g / d1.squaredNorm();
    t -= step;
    if (std::abs(step) < 1e-14) break;
  }
  return (local - helix_point(h, t)).norm();
}

HoughFit hough_fit(const PointCloudd& thread, const AxisFrame& frame, const HoughConfig& cfg) {
  if (thread.size() < 50) throw processing_error("hough_fit: thread cloud needs at least 50 points");
  HoughAccumulator acc(cfg);
  const PointCloudd::Matrix local = frame.axes.transpose() * (thread.points().colwise() - frame.origin);
  acc.accumulate(local);
  const auto best = acc.best();
  if (best.votes < cfg.min_votes)
    throw processing_error("hough_fit: no parameter cell reached " + std::to_string(cfg.min_votes) + " votes");

  HoughFit fit;
  fit.bin_model.frame = frame;
  fit.bin_model.votes = best.votes;
  fit.bin_model.params = {acc.r_center(best.r), acc.d_center(best.d), acc.phi_center(best.phi)};
  const auto cell_support = support_band(local, fit.bin_model.params, cfg.support_gate);
  fit.bin_model.support = cell_support.size();
  fit.bin_model.residual_rms = rms_distance(local, cell_support, fit.bin_model.params);

  HelixParams current = fit.bin_model.params;
  auto support = cell_support;
  for (int it = 0; it < cfg.refine_iterations; ++it) {
    const auto next = refit(local, support, current);
    if (!next) break;
    const bool settled = std::abs(next->pitch - current.pitch) < 1e-12 && std::abs(next->radius - current.radius) < 1e-12;
    current = *next;
    support = support_band(local, current, cfg.support_gate);
    if (settled) break;
  }

  fit.model = fit.bin_model;
  const double refined_on_cell = rms_distance(local, cell_support, current);
  if (refined_on_cell <= fit.bin_model.residual_rms && current.radius > 0.0 && current.pitch > 0.0) {
    fit.model.params = current;
    fit.model.support = cell_support.size();
    fit.model.residual_rms = refined_on_cell;
  } else {
    fit.refined_kept = false;
  }
  return fit;
}

AxisFrame refine_axis(const PointCloudd& thread, const AxisFrame& init) {
  const PointCloudd::Matrix local = init.axes.transpose() * (thread.points().colwise() - init.origin);
  const double radius = local.topRows<2>().colwise().norm().mean();
  const auto fit = fit_cylinder_lsq(thread.points(), {init.origin, init.axis(), radius});
  Point3d dir = fit.cylinder.direction;
  if (dir.dot(init.axis()) < 0.0) dir = -dir;
  const Point3d origin = fit.cylinder.point + (init.origin - fit.cylinder.point).dot(dir) * dir;
  AxisFrame out = AxisFrame::along(origin, dir);
  return out;
}

}  // namespace shaftdock
