#include "obstacle/evalio/metrics.hpp"

#include <cmath>

namespace obstacle::evalio {

double relative_l2(const oracle::GridField& a, const oracle::GridField& b) {
  oracle::require_same_grid(a, b);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.values[k] - b.values[k];
    num += d * d;
    den += b.values[k] * b.values[k];
  }
  if (!(den > 0.0)) throw oracle::OracleError("relative L2 error undefined: reference field is zero");
  return std::sqrt(num / den);
}

}  // namespace obstacle::evalio
