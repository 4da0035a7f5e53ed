#pragma once

#include <cmath>
#include <utility>

namespace olab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

/// Row-major 2x2 matrix.
struct Mat2 {
  double xx = 0.0;
  double xy = 0.0;
  double yx = 0.0;
  double yy = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
  return {m.xx * v.x + m.xy * v.y, m.yx * v.x + m.yy * v.y};
}

inline double frobenius_norm(const Mat2& m) {
  return std::sqrt(m.xx * m.xx + m.xy * m.xy + m.yx * m.yx + m.yy * m.yy);
}

/// Eigenvalues of the symmetric part, ascending.
inline std::pair<double, double> symmetric_eigenvalues(const Mat2& m) {
  const double a = m.xx;
  const double d = m.yy;
  const double b = 0.5 * (m.xy + m.yx);
  const double mean = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  return {mean - rad, mean + rad};
}

struct Ball {
  Vec2 center;
  double radius = 0.0;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace olab
