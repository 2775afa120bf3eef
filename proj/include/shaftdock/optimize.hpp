#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace shaftdock {

template <typename Scalar, int N>
struct MinimizeResult {
  Eigen::Matrix<Scalar, N, 1> x;
  Scalar value;
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead simplex. The starting point is a vertex of the initial simplex,
/// so the result is never worse than f(x0).
template <typename Scalar, int N, typename F>
MinimizeResult<Scalar, N> nelder_mead(F&& f, const Eigen::Matrix<Scalar, N, 1>& x0, Scalar step, int max_evaluations,
                                      Scalar x_tol, Scalar f_tol) {
  using Vec = Eigen::Matrix<Scalar, N, 1>;
  std::vector<Vec> simplex(N + 1, x0);
  std::vector<Scalar> values(N + 1);
  for (int i = 0; i < N; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += step;
  int evals = 0;
  auto eval = [&](const Vec& x) {
    ++evals;
    return f(x);
  };
  for (std::size_t i = 0; i <= N; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(N + 1);
  bool converged = false;
  while (evals < max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[N - 1];
    Scalar size = 0;
    for (std::size_t i = 0; i <= N; ++i) size = std::max(size, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
    if (size < x_tol || std::abs(values[worst] - values[best]) <= f_tol) {
      converged = true;
      break;
    }
    Vec centroid = Vec::Zero();
    for (std::size_t i = 0; i <= N; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= Scalar(N);

    const Vec reflected = centroid + (centroid - simplex[worst]);
    const Scalar fr = eval(reflected);
    if (fr < values[best]) {
      const Vec expanded = centroid + Scalar(2) * (centroid - simplex[worst]);
      const Scalar fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Vec contracted = outside ? Vec(centroid + Scalar(0.5) * (reflected - centroid))
                                   : Vec(centroid + Scalar(0.5) * (simplex[worst] - centroid));
    const Scalar fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + Scalar(0.5) * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  return {simplex[best], values[best], evals, converged};
}

/// Golden-section minimisation on [a, b] down to bracket width `tol`.
template <typename Scalar, typename F>
Scalar golden_section(F&& f, Scalar a, Scalar b, Scalar tol) {
  const Scalar inv_phi = Scalar(0.6180339887498949);
  Scalar c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  Scalar fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace shaftdock
