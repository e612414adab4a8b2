#pragma once

#include "obstacle/oracle/grid.hpp"

namespace obstacle::evalio {

/// sqrt(sum (a - b)^2 / sum b^2) over interior nodes; throws if b = 0.
double relative_l2(const oracle::GridField& field_hat, const oracle::GridField& field_ref);

}  // namespace obstacle::evalio
