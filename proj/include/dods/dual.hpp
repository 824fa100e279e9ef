#pragma once

#include <cmath>
#include <type_traits>

namespace dods {

/// Forward-mode dual number carrying one directional derivative.
///
/// Nesting is allowed: Dual<Dual<double>> yields second derivatives, which is
/// how the linear module obtains g''(x).
template <typename T>
struct Dual {
  T value{};
  T partial{};

  constexpr Dual() = default;
  constexpr Dual(T v) : value(v), partial(T{}) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T v, T d) : value(v), partial(d) {}
  template <typename U, std::enable_if_t<std::is_arithmetic_v<U> && !std::is_same_v<U, T>, int> = 0>
  constexpr Dual(U v) : value(T(v)), partial(T{}) {}  // NOLINT

  Dual& operator+=(const Dual& o) { value += o.value; partial += o.partial; return *this; }
  Dual& operator-=(const Dual& o) { value -= o.value; partial -= o.partial; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.partial + b.partial}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.partial - b.partial}; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.value, -a.partial}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.value * b.partial + a.partial * b.value};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    const T q = a.value / b.value;
    return {q, (a.partial - q * b.partial) / b.value};
  }
};

template <typename T> struct is_dual : std::false_type {};
template <typename T> struct is_dual<Dual<T>> : std::true_type {};
template <typename T> inline constexpr bool is_dual_v = is_dual<T>::value;

/// Innermost real value of a (possibly nested) scalar.
inline double real_part(double v) { return v; }
template <typename T>
double real_part(const Dual<T>& d) { return real_part(d.value); }

/// Seed a variable: value v, derivative one along the chosen direction.
template <typename T>
Dual<T> seed(T v) { return Dual<T>{v, T(1)}; }

// Elementary functions. Each returns the value with the chain rule applied to
// the partial; the derivative expressions reuse the same overload set so that
// nested duals differentiate correctly.
template <typename T> Dual<T> exp(const Dual<T>& a) { using std::exp; T e = exp(a.value); return {e, e * a.partial}; }
template <typename T> Dual<T> log(const Dual<T>& a) { using std::log; return {log(a.value), a.partial / a.value}; }
template <typename T> Dual<T> sin(const Dual<T>& a) { using std::sin; using std::cos; return {sin(a.value), cos(a.value) * a.partial}; }
template <typename T> Dual<T> cos(const Dual<T>& a) { using std::sin; using std::cos; return {cos(a.value), -sin(a.value) * a.partial}; }
template <typename T> Dual<T> tan(const Dual<T>& a) {
  using std::tan;
  T t = tan(a.value);
  return {t, (T(1) + t * t) * a.partial};
}
template <typename T> Dual<T> atan(const Dual<T>& a) {
  using std::atan;
  return {atan(a.value), a.partial / (T(1) + a.value * a.value)};
}
template <typename T> Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  T r2 = x.value * x.value + y.value * y.value;
  return {atan2(y.value, x.value), (x.value * y.partial - y.value * x.partial) / r2};
}
template <typename T> Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.value);
  return {s, a.partial / (T(2) * s)};
}
template <typename T> Dual<T> abs(const Dual<T>& a) {
  return real_part(a.value) < 0 ? -a : a;
}
// sign is locally constant; its derivative is zero away from the origin.
template <typename T> Dual<T> sign(const Dual<T>& a) {
  double v = real_part(a.value);
  return Dual<T>{T(v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0)), T{}};
}
inline double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

/// Power with a constant real exponent.
template <typename T> Dual<T> pow(const Dual<T>& a, double e) {
  using std::pow;
  if (e == 0.0) return Dual<T>{T(1), T{}};
  return {pow(a.value, e), T(e) * pow(a.value, e - 1.0) * a.partial};
}
/// Power with a varying exponent: a^b = exp(b log a) for a > 0.
template <typename T> Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
  using std::log;
  using std::pow;
  T p = pow(a.value, b.value);
  return {p, b.value * pow(a.value, b.value - T(1)) * a.partial + p * log(a.value) * b.partial};
}

}  // namespace dods
