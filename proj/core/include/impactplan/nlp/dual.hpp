#pragma once

// Forward-mode dual numbers with a small fixed-capacity gradient.
//
// A Dual carries a value and up to kDualWidth partial derivatives. The number
// of live partials is tracked at runtime so that constants (width 0) cost no
// more than a double in mixed expressions. Wider gradients are obtained by
// chunking: the caller seeds kDualWidth inputs at a time and re-evaluates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>

namespace impactplan::nlp {

inline constexpr int kDualWidth = 16;

struct Dual {
  double v = 0.0;
  std::array<double, kDualWidth> d{};
  int n = 0;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  static Dual variable(double value, int slot, int width) {
    Dual x(value);
    x.n = width;
    x.d[slot] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    n = std::max(n, o.n);
    for (int i = 0; i < o.n; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    n = std::max(n, o.n);
    for (int i = 0; i < o.n; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    const int m = std::max(n, o.n);
    for (int i = 0; i < m; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    n = m;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    const double q = v * inv;
    const int m = std::max(n, o.n);
    for (int i = 0; i < m; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    v = q;
    n = m;
    return *this;
  }
};

// Chain rule helper: result = g(a) with g'(a) = slope.
inline Dual chain(const Dual& a, double value, double slope) {
  Dual r(value);
  r.n = a.n;
  for (int i = 0; i < a.n; ++i) r.d[i] = slope * a.d[i];
  return r;
}

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator+(Dual a, double b) { a.v += b; return a; }
inline Dual operator+(double a, Dual b) { b.v += a; return b; }
inline Dual operator-(Dual a, double b) { a.v -= b; return a; }
inline Dual operator-(double a, const Dual& b) { return chain(b, a - b.v, -1.0); }
inline Dual operator*(const Dual& a, double b) { return chain(a, a.v * b, b); }
inline Dual operator*(double a, const Dual& b) { return chain(b, a * b.v, a); }
inline Dual operator/(const Dual& a, double b) { return chain(a, a.v / b, 1.0 / b); }
inline Dual operator/(double a, const Dual& b) {
  const double q = a / b.v;
  return chain(b, q, -q / b.v);
}
inline Dual operator-(const Dual& a) { return chain(a, -a.v, -1.0); }
inline Dual operator+(const Dual& a) { return a; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
inline Dual log(const Dual& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
inline Dual sin(const Dual& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
inline Dual cos(const Dual& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }
inline Dual pow(const Dual& a, double p) {
  const double r = std::pow(a.v, p);
  return chain(a, r, p * std::pow(a.v, p - 1.0));
}

inline std::ostream& operator<<(std::ostream& os, const Dual& a) {
  os << a.v << " + [";
  for (int i = 0; i < a.n; ++i) os << (i ? ", " : "") << a.d[i];
  return os << "]e";
}

// Scalar-generic helpers so domain code is written once for double and Dual.
inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

template <typename T>
T square(const T& x) {
  return x * x;
}

// Smooth minimum: -eps * log(exp(-a/eps) + exp(-b/eps)), evaluated stably.
template <typename T>
T smooth_min(const T& a, const T& b, double eps) {
  using std::exp;
  using std::log;
  const T lo = value_of(a) < value_of(b) ? a : b;
  const T hi = value_of(a) < value_of(b) ? b : a;
  return lo - eps * log(1.0 + exp((lo - hi) / eps));
}

}  // namespace impactplan::nlp
