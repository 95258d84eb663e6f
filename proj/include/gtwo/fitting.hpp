#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "gtwo/errors.hpp"

namespace gtwo::fit {

template <std::size_t P> using Params = std::array<double, P>;

template <std::size_t P> struct Result {
  Params<P> params{};
  Params<P> sigmas{};
  std::array<std::array<double, P>, P> covariance{};
  double residual_norm = 0; // sqrt(sum r^2)
  int iterations = 0;
};

struct Options {
  int max_iterations = 200;
  double relative_step_tol = 1e-9;
  // Also stop when an accepted step lowers the RSS by less than this
  // fraction; guards against creeping along flat valleys.
  double relative_rss_tol = 1e-14;
  // Optional per-point weights (1 / variance); empty means all equal.
  std::span<const double> weights;
  // Take the weights as exact inverse variances instead of rescaling the
  // covariance by the reduced chi-square.
  bool absolute_sigma = false;
};

namespace detail {

/// Solve A x = b for a small dense system; false when singular.
template <std::size_t P>
bool solve(std::array<std::array<double, P>, P> a, Params<P> b, Params<P> &x) {
  for (std::size_t col = 0; col < P; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < P; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col]))
        piv = r;
    if (a[piv][col] == 0 || !std::isfinite(a[piv][col]))
      return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < P; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < P; ++k)
        a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = P; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < P; ++k)
      s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return true;
}

template <std::size_t P>
bool invert(const std::array<std::array<double, P>, P> &a,
            std::array<std::array<double, P>, P> &inv) {
  for (std::size_t j = 0; j < P; ++j) {
    Params<P> e{}, col{};
    e[j] = 1;
    if (!solve<P>(a, e, col))
      return false;
    for (std::size_t i = 0; i < P; ++i)
      inv[i][j] = col[i];
  }
  return true;
}

} // namespace detail

/// Damped Gauss-Newton (Levenberg-Marquardt diagonal damping) least squares.
///
/// `model(x, p, grad)` returns the model value at x and fills d/dp.
/// `scale[i]` is the magnitude below which parameter i is compared
/// absolutely rather than relatively for the convergence test.
template <std::size_t P, class Model>
Result<P> least_squares(std::span<const double> xs, std::span<const double> ys,
                        Params<P> p, Model &&model, const Params<P> &scale,
                        const Options &opt = {}) {
  if (xs.size() != ys.size())
    throw DomainError("fit: x/y length mismatch");
  if (xs.size() < P)
    throw DomainError("fit: fewer points than parameters");
  if (!opt.weights.empty() && opt.weights.size() != xs.size())
    throw DomainError("fit: weight count does not match the data");
  auto weight = [&](std::size_t n) {
    return opt.weights.empty() ? 1.0 : opt.weights[n];
  };

  using Mat = std::array<std::array<double, P>, P>;
  auto normal = [&](const Params<P> &q, Mat &jtj, Params<P> &jtr) {
    jtj = {};
    jtr = {};
    double rss = 0;
    Params<P> g{};
    for (std::size_t n = 0; n < xs.size(); ++n) {
      const double r = ys[n] - model(xs[n], q, g);
      const double w = weight(n);
      rss += w * r * r;
      for (std::size_t i = 0; i < P; ++i) {
        jtr[i] += w * g[i] * r;
        for (std::size_t k = 0; k <= i; ++k)
          jtj[i][k] += w * g[i] * g[k];
      }
    }
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t k = i + 1; k < P; ++k)
        jtj[i][k] = jtj[k][i];
    return rss;
  };
  auto rss_at = [&](const Params<P> &q) {
    double rss = 0;
    Params<P> g{};
    for (std::size_t n = 0; n < xs.size(); ++n) {
      const double r = ys[n] - model(xs[n], q, g);
      rss += weight(n) * r * r;
    }
    return rss;
  };

  Result<P> res;
  Mat jtj;
  Params<P> jtr;
  double rss = normal(p, jtj, jtr);
  double lambda = 1e-3;
  bool converged = false;
  int it = 0;
  for (; it < opt.max_iterations && !converged; ++it) {
    if (rss == 0) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted) {
      Mat damped = jtj;
      for (std::size_t i = 0; i < P; ++i)
        damped[i][i] += lambda * (jtj[i][i] > 0 ? jtj[i][i] : 1.0);
      Params<P> step{};
      if (!detail::solve<P>(damped, jtr, step)) {
        lambda *= 10;
      } else {
        Params<P> trial = p;
        for (std::size_t i = 0; i < P; ++i)
          trial[i] += step[i];
        const double trial_rss = rss_at(trial);
        if (std::isfinite(trial_rss) && trial_rss <= rss) {
          double rel = 0;
          for (std::size_t i = 0; i < P; ++i)
            rel = std::max(rel, std::fabs(step[i]) /
                                    std::max(std::fabs(trial[i]), scale[i]));
          const double drop = rss - trial_rss;
          p = trial;
          rss = normal(p, jtj, jtr);
          lambda = std::max(lambda * 0.1, 1e-12);
          accepted = true;
          converged = rel < opt.relative_step_tol ||
                      drop <= opt.relative_rss_tol * rss;
        } else {
          lambda *= 10;
        }
      }
      if (!accepted && lambda > 1e20) {
        // No descent direction left: already at the numerical minimum.
        converged = true;
        break;
      }
    }
  }
  if (!converged)
    throw ConvergenceError("least-squares fit did not converge in " +
                           std::to_string(opt.max_iterations) + " iterations");

  res.params = p;
  res.iterations = it;
  res.residual_norm = std::sqrt(rss);
  const double dof = static_cast<double>(xs.size()) - static_cast<double>(P);
  const double s2 = opt.absolute_sigma ? 1.0 : dof > 0 ? rss / dof : 0;
  Mat inv{};
  if (detail::invert<P>(jtj, inv)) {
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t k = 0; k < P; ++k)
        res.covariance[i][k] = inv[i][k] * s2;
    for (std::size_t i = 0; i < P; ++i)
      res.sigmas[i] = std::sqrt(std::max(0.0, res.covariance[i][i]));
  } else {
    for (auto &s : res.sigmas)
      s = std::numeric_limits<double>::infinity();
  }
  return res;
}

// Peak models, parameters {amplitude, center, width, baseline}.

/// A / (1 + ((x - x0) / (fwhm/2))^2) + b
struct Lorentzian {
  double operator()(double x, const Params<4> &p, Params<4> &g) const {
    const double hw = 0.5 * p[2];
    const double u = (x - p[1]) / hw;
    const double d = 1.0 / (1.0 + u * u);
    g[0] = d;
    g[1] = p[0] * d * d * 2.0 * u / hw;
    g[2] = p[0] * d * d * u * u / p[2] * 2.0;
    g[3] = 1.0;
    return p[0] * d + p[3];
  }
};

/// A exp(-(x - x0)^2 / (2 s^2)) + b
struct Gaussian {
  double operator()(double x, const Params<4> &p, Params<4> &g) const {
    const double u = (x - p[1]) / p[2];
    const double e = std::exp(-0.5 * u * u);
    g[0] = e;
    g[1] = p[0] * e * u / p[2];
    g[2] = p[0] * e * u * u / p[2];
    g[3] = 1.0;
    return p[0] * e + p[3];
  }
};

/// Moment-based starting point for a single positive peak: baseline from the
/// minimum, centre from the maximum refined by a centroid over the half-max
/// region, width from the half-max crossings.
inline Params<4> peak_initial_guess(std::span<const double> xs,
                                    std::span<const double> ys) {
  const auto n = xs.size();
  auto imax = static_cast<std::size_t>(
      std::max_element(ys.begin(), ys.end()) - ys.begin());
  const double ymin = *std::min_element(ys.begin(), ys.end());
  const double amp = ys[imax] - ymin;
  const double half = ymin + 0.5 * amp;
  std::size_t lo = imax, hi = imax;
  while (lo > 0 && ys[lo - 1] > half)
    --lo;
  while (hi + 1 < n && ys[hi + 1] > half)
    ++hi;
  double wsum = 0, xsum = 0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double w = ys[i] - ymin;
    wsum += w;
    xsum += w * xs[i];
  }
  const double center = wsum > 0 ? xsum / wsum : xs[imax];
  auto cross = [&](std::size_t inner, std::size_t outer) {
    const double y0 = ys[inner], y1 = ys[outer];
    if (y0 == y1)
      return xs[inner];
    return xs[inner] + (half - y0) * (xs[outer] - xs[inner]) / (y1 - y0);
  };
  const double xl = lo > 0 ? cross(lo, lo - 1) : xs[lo];
  const double xr = hi + 1 < n ? cross(hi, hi + 1) : xs[hi];
  double width = xr - xl;
  const double spacing = n > 1 ? std::fabs(xs[1] - xs[0]) : 1.0;
  if (!(width > spacing))
    width = spacing;
  return {amp, center, width, ymin};
}

} // namespace gtwo::fit
