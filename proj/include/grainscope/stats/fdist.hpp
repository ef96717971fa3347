#pragma once

#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>

namespace grainscope::stats {

/// Upper-tail probability P(F > f) of the F(df1, df2) distribution.
/// NaN for non-finite input or non-positive degrees of freedom.
inline double f_tail(double f, double df1, double df2) {
  if (!std::isfinite(f) || !(df1 > 0) || !(df2 > 0)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0) return 1.0;
  const boost::math::fisher_f_distribution<double> dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace grainscope::stats
