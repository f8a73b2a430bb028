#pragma once

// Truncated power series in time (differential transform images) and the
// handful of operations the recursive coefficient generators need.
//
// A Series of order K stores X(0..K), the coefficients of t^0..t^K about the
// window anchor: x(t) ~ sum_k X(k) t^k, with X(k) = x^(k)(0) / k!.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dtmsas {

class Series {
 public:
  Series() : coeffs_(1, 0.0) {}
  explicit Series(std::size_t order) : coeffs_(order + 1, 0.0) {}
  Series(std::initializer_list<double> coeffs) : coeffs_(coeffs) {
    if (coeffs_.empty()) throw std::invalid_argument("Series needs at least one coefficient");
  }
  explicit Series(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("Series needs at least one coefficient");
  }

  std::size_t order() const noexcept { return coeffs_.size() - 1; }

  double operator[](std::size_t k) const noexcept { return coeffs_[k]; }
  double& operator[](std::size_t k) noexcept { return coeffs_[k]; }
  double at(std::size_t k) const { return coeffs_.at(k); }

  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::span<double> coeffs() noexcept { return coeffs_; }

  friend bool operator==(const Series&, const Series&) = default;

 private:
  std::vector<double> coeffs_;
};

/// sin/cos of an angle series, carried together because each one's
/// recursion needs the other.
struct TrigPair {
  Series sin_series;
  Series cos_series;
};

/// DT image of a constant: c at k = 0, zero elsewhere.
inline Series const_series(double c, std::size_t order) {
  Series s(order);
  s[0] = c;
  return s;
}

/// Partial Cauchy product sum_{m=lo}^{hi-1} X(m) Y(k-m). Unchecked; callers
/// guarantee lo <= hi <= k+1 and k within both orders.
inline double conv_range(std::span<const double> x, std::span<const double> y, std::size_t k,
                         std::size_t lo, std::size_t hi) noexcept {
  double acc = 0.0;
  for (std::size_t m = lo; m < hi; ++m) acc += x[m] * y[k - m];
  return acc;
}

/// k-th coefficient of the product x(t) y(t).
inline double conv(const Series& x, const Series& y, std::size_t k) {
  if (k > std::min(x.order(), y.order()))
    throw std::out_of_range("conv: index exceeds series order");
  return conv_range(x.coeffs(), y.coeffs(), k, 0, k + 1);
}

inline Series axpy(double a, const Series& x, double b, const Series& y) {
  if (x.order() != y.order()) throw std::invalid_argument("axpy: order mismatch");
  Series out(x.order());
  for (std::size_t k = 0; k <= x.order(); ++k) out[k] = a * x[k] + b * y[k];
  return out;
}

/// Seed of the sin/cos pair at k = 0; higher slots are zero until extended.
inline TrigPair trig_seed(double angle0, std::size_t order) {
  return {const_series(std::sin(angle0), order), const_series(std::cos(angle0), order)};
}

/// Raw-span form of trig_extend used by the window builders.
inline std::pair<double, double> trig_extend_raw(std::span<const double> delta,
                                                 std::span<const double> s,
                                                 std::span<const double> c,
                                                 std::size_t k) noexcept {
  double sk = 0.0;
  double ck = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    const double w = static_cast<double>(k - m) * delta[k - m];
    sk += c[m] * w;
    ck += s[m] * w;
  }
  const double inv_k = 1.0 / static_cast<double>(k);
  return {sk * inv_k, -ck * inv_k};
}

/// Order-k coefficients (S(k), C(k)) of sin(delta(t)) and cos(delta(t)), from
/// d/dt sin = cos * delta' and d/dt cos = -sin * delta'. `partial` must hold
/// S(0..k-1), C(0..k-1); `delta` must hold Delta(0..k).
inline std::pair<double, double> trig_extend(const Series& delta, const TrigPair& partial,
                                             std::size_t k) {
  if (k == 0) throw std::invalid_argument("trig_extend: k = 0 is the seed, not an extension");
  if (delta.order() < k) throw std::out_of_range("trig_extend: delta shorter than k");
  if (partial.sin_series.order() + 1 < k || partial.cos_series.order() + 1 < k)
    throw std::out_of_range("trig_extend: partial pair shorter than k-1");
  return trig_extend_raw(delta.coeffs(), partial.sin_series.coeffs(),
                         partial.cos_series.coeffs(), k);
}

/// Horner evaluation of sum_k X(k) t^k.
inline double idt_eval(std::span<const double> x, double t) noexcept {
  double acc = x.back();
  for (std::size_t k = x.size() - 1; k-- > 0;) acc = acc * t + x[k];
  return acc;
}

inline double idt_eval(const Series& x, double t) noexcept { return idt_eval(x.coeffs(), t); }

/// DT image of x'(t): D(k) = (k+1) X(k+1), order K-1 (order 0 for a constant).
inline Series differentiate(const Series& x) {
  if (x.order() == 0) return Series(0);
  Series d(x.order() - 1);
  for (std::size_t k = 0; k < x.order(); ++k) d[k] = static_cast<double>(k + 1) * x[k + 1];
  return d;
}

}  // namespace dtmsas
