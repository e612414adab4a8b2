#include "obstacle/oracle/grid.hpp"

#include <string>

namespace obstacle::oracle {

GridField::GridField(int n_, double fill) : n(n_) {
  if (n < 1) throw OracleError("grid resolution must be >= 1, got " + std::to_string(n));
  values.assign(side() * side(), fill);
}

double GridField::padded(int i, int j) const {
  if (i <= 0 || j <= 0 || i >= n || j >= n) return 0.0;
  return at(i, j);
}

GridField GridField::sample(int n, const std::function<double(std::span<const double>)>& f) {
  GridField g(n);
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      const double x[2] = {g.coord(i), g.coord(j)};
      g.at(i, j) = f(x);
    }
  return g;
}

void require_same_grid(const GridField& a, const GridField& b) {
  if (a.n != b.n || a.size() != b.size())
    throw OracleError("grid mismatch: N=" + std::to_string(a.n) + " vs N=" + std::to_string(b.n));
}

}  // namespace obstacle::oracle
