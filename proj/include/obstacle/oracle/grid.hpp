#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace obstacle::oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Values at the interior nodes (i/N, j/N), 1 <= i, j <= N-1, stored with
/// the x1 index slowest: k = (i-1)(N-1) + (j-1). Boundary values are zero.
/// N = 1 has no interior nodes and yields an empty field.
struct GridField {
  int n = 0;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(int n_, double fill = 0.0);

  std::size_t side() const { return n > 1 ? static_cast<std::size_t>(n - 1) : 0; }
  std::size_t size() const { return values.size(); }
  double h() const { return 1.0 / n; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i - 1) * side() + static_cast<std::size_t>(j - 1);
  }
  double& at(int i, int j) { return values[index(i, j)]; }
  double at(int i, int j) const { return values[index(i, j)]; }
  /// Interior value, or 0 for boundary indices.
  double padded(int i, int j) const;
  double coord(int i) const { return static_cast<double>(i) / n; }

  static GridField sample(int n, const std::function<double(std::span<const double>)>& f);
};

void require_same_grid(const GridField& a, const GridField& b);

}  // namespace obstacle::oracle
