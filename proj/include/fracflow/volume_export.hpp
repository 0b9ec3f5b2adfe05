#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fracflow/grid.hpp"

namespace fracflow {

/// Writes named point-data fields as a legacy structured-points text file
/// (DATASET STRUCTURED_POINTS with SCALARS/VECTORS sections), readable by
/// the usual volume viewers. All fields must share one grid.
void write_structured_points(
    const std::string& path, const GridDims& dims,
    const std::vector<std::pair<std::string, const ScalarField*>>& scalars,
    const std::vector<std::pair<std::string, const VectorField3*>>& vectors);

}  // namespace fracflow
