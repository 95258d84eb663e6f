#pragma once

#include <cmath>

#include "gtwo/errors.hpp"

namespace gtwo {

enum class BesselKind { J, Jprime };

inline double bessel_j(int m, double x) {
  if (m < 0)
    return (m % 2 == 0 ? 1.0 : -1.0) * std::cyl_bessel_j(-m, x);
  return std::cyl_bessel_j(static_cast<double>(m), x);
}

/// d/dx J_m(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2
inline double bessel_j_prime(int m, double x) {
  return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x));
}

/// J_m''(x) from Bessel's equation.
inline double bessel_j_second(int m, double x) {
  const double mm = static_cast<double>(m) * m;
  return -bessel_j_prime(m, x) / x - (1.0 - mm / (x * x)) * bessel_j(m, x);
}

/// n-th positive zero of J_m (kind J) or J_m' (kind Jprime). The trivial
/// zero of J_0' at x = 0 is not counted. Roots are bracketed by a scan,
/// bisected, then polished with safeguarded Newton to 1e-13 absolute.
inline double bessel_zero(BesselKind kind, int m, int n) {
  if (m < 0 || n < 1)
    throw DomainError("bessel_zero needs m >= 0 and n >= 1");
  auto f = [&](double x) {
    return kind == BesselKind::J ? bessel_j(m, x) : bessel_j_prime(m, x);
  };
  auto df = [&](double x) {
    return kind == BesselKind::J ? bessel_j_prime(m, x)
                                 : bessel_j_second(m, x);
  };

  // Zeros of J_m and J_m' all lie beyond x = m (x = 0 excluded), and are
  // separated by more than 2 there; a 0.25 scan cannot skip one.
  constexpr double kStep = 0.25;
  double a = m > 0 ? static_cast<double>(m) : kStep;
  double fa = f(a);
  int found = 0;
  for (int guard = 0; guard < 1000000; ++guard) {
    double b = a + kStep;
    double fb = f(b);
    if (fa == 0) {
      if (++found == n)
        return a;
    } else if ((fa < 0) != (fb < 0) && fb != 0) {
      if (++found == n) {
        double lo = a, hi = b, flo = fa;
        for (int i = 0; i < 60 && hi - lo > 1e-6; ++i) {
          const double mid = 0.5 * (lo + hi);
          const double fm = f(mid);
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        double x = 0.5 * (lo + hi);
        for (int i = 0; i < 50; ++i) {
          const double d = df(x);
          if (d == 0)
            break;
          double nx = x - f(x) / d;
          if (!(nx > lo && nx < hi))
            nx = 0.5 * (lo + hi);
          const double fx = f(nx);
          if ((fx < 0) == (flo < 0))
            lo = nx;
          else
            hi = nx;
          const bool done = std::fabs(nx - x) < 1e-14 * std::max(1.0, nx);
          x = nx;
          if (done)
            break;
        }
        return x;
      }
    }
    a = b;
    fa = fb;
  }
  throw ConvergenceError("bessel_zero scan did not bracket the requested root");
}

} // namespace gtwo
