#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "projuq/errors.hpp"

namespace projuq {

using Vec = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

inline Vec scaled(const Vec& x, double a) {
  Vec y = x;
  scale(a, y);
  return y;
}

inline Vec add(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DimensionError("add: length mismatch");
  Vec z = x;
  for (std::size_t i = 0; i < y.size(); ++i) z[i] += y[i];
  return z;
}

inline Vec sub(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DimensionError("sub: length mismatch");
  Vec z = x;
  for (std::size_t i = 0; i < y.size(); ++i) z[i] -= y[i];
  return z;
}

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

inline Vec unit(std::size_t n, std::size_t i) {
  Vec e(n, 0.0);
  e.at(i) = 1.0;
  return e;
}

inline double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace projuq
