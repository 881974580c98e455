#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "icens/errors.hpp"
#include "icens/models.hpp"

namespace icens {

struct QuadratureSpec {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int max_subdivisions = 4000;
  // Kernel probability mass that may be discarded in each unbounded tail.
  double tail_mass = 1e-14;

  void validate() const;
};

// Integrands return the value followed by up to kMaxParameters derivatives.
using QuadVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxParameters + 1, 1>;

struct QuadratureResult {
  QuadVector value;
  QuadVector error;
  QuadVector l1;  // integral of |f|, per component
  int subdivisions = 0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod rule with embedded 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525413562, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights for the odd-indexed Kronrod nodes (kXgk[1], kXgk[3], ...).
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Interval {
  double a;
  double b;
  QuadVector value;
  QuadVector error;
  QuadVector l1;
  double priority;
};

struct ByPriority {
  bool operator()(const Interval& x, const Interval& y) const { return x.priority < y.priority; }
};

template <class F>
Interval kronrod21(F& f, double a, double b, int dim) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  QuadVector kronrod = QuadVector::Zero(dim);
  QuadVector gauss = QuadVector::Zero(dim);
  QuadVector l1 = QuadVector::Zero(dim);
  {
    const QuadVector fc = f(center);
    kronrod += kWgk[10] * fc;
    l1 += kWgk[10] * fc.cwiseAbs();
  }
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[static_cast<std::size_t>(j)];
    const QuadVector f1 = f(center - dx);
    const QuadVector f2 = f(center + dx);
    const double wk = kWgk[static_cast<std::size_t>(j)];
    kronrod += wk * (f1 + f2);
    l1 += wk * (f1.cwiseAbs() + f2.cwiseAbs());
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * (f1 + f2);
  }
  Interval out{a, b, kronrod * half, ((kronrod - gauss) * half).cwiseAbs(), l1 * std::abs(half),
               0.0};
  return out;
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of a vector-valued integrand over the
// union of [breaks[i], breaks[i+1]]. The interval with the largest error is
// bisected until every component satisfies
//   error <= max(abs_tol, rel_tol * l1)
// or the subdivision budget runs out (converged == false).
template <class F>
QuadratureResult integrate_pieces(F&& f, std::span<const double> breaks, int dim,
                                  const QuadratureSpec& spec) {
  QuadratureResult result;
  result.value = QuadVector::Zero(dim);
  result.error = QuadVector::Zero(dim);
  result.l1 = QuadVector::Zero(dim);

  std::priority_queue<detail::Interval, std::vector<detail::Interval>, detail::ByPriority> heap;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    heap.push(detail::kronrod21(f, breaks[i], breaks[i + 1], dim));
    result.evaluations += 21;
  }
  if (heap.empty()) {
    result.converged = true;
    return result;
  }

  auto totals = [&](QuadVector& value, QuadVector& error, QuadVector& l1) {
    value.setZero(dim);
    error.setZero(dim);
    l1.setZero(dim);
    auto copy = heap;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      l1 += copy.top().l1;
      copy.pop();
    }
  };
  auto set_priority = [&](detail::Interval& iv, const QuadVector& l1) {
    double p = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double scale = std::max(spec.abs_tol, spec.rel_tol * l1[i]);
      p = std::max(p, iv.error[i] / scale);
    }
    iv.priority = p;
  };
  auto done = [&](const QuadVector& error, const QuadVector& l1) {
    for (int i = 0; i < dim; ++i) {
      if (!(error[i] <= std::max(spec.abs_tol, spec.rel_tol * l1[i]))) return false;
    }
    return true;
  };

  QuadVector value, error, l1;
  totals(value, error, l1);
  {
    std::vector<detail::Interval> items;
    while (!heap.empty()) {
      items.push_back(heap.top());
      heap.pop();
    }
    for (auto& iv : items) {
      set_priority(iv, l1);
      heap.push(iv);
    }
  }

  while (!done(error, l1) && result.subdivisions < spec.max_subdivisions) {
    detail::Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval cannot be split further in double precision.
      worst.priority = 0.0;
      heap.push(worst);
      break;
    }
    detail::Interval left = detail::kronrod21(f, worst.a, mid, dim);
    detail::Interval right = detail::kronrod21(f, mid, worst.b, dim);
    result.evaluations += 42;
    ++result.subdivisions;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    set_priority(left, l1);
    set_priority(right, l1);
    heap.push(left);
    heap.push(right);
  }

  // Re-sum from the pieces to avoid drift from incremental updates.
  totals(result.value, result.error, result.l1);
  result.converged = done(result.error, result.l1);
  return result;
}

template <class F>
QuadratureResult integrate_interval(F&& f, double a, double b, int dim,
                                    const QuadratureSpec& spec) {
  const std::array<double, 2> breaks{a, b};
  return integrate_pieces(std::forward<F>(f), std::span<const double>(breaks), dim, spec);
}

}  // namespace icens
