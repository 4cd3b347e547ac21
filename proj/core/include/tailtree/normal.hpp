#pragma once

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

namespace tailtree {

namespace detail {
// double-precision evaluation without long-double promotion
using fast_policy =
    boost::math::policies::policy<boost::math::policies::promote_double<false>>;
}  // namespace detail

inline double norm_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Inverse of norm_cdf on (0,1).
inline double norm_quantile(double p) {
  return -std::numbers::sqrt2 *
         boost::math::erfc_inv(2.0 * p, detail::fast_policy());
}

}  // namespace tailtree
