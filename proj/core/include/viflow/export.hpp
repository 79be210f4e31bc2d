#pragma once

#include <cstdint>

#include "viflow/multipliers.hpp"

namespace viflow {

/// Legacy ASCII VTK unstructured grid: triangles plus boundary line cells,
/// point data velocity and pressure, cell data patch tags.
void write_vtk_fields(const std::string& path, const Mesh& mesh,
                      const std::vector<Vec2>& vel_vertex, const VectorXd& p_vertex,
                      std::uint64_t config_hash);

/// Boundary traces and recovered multipliers, one row per trace dof.
void write_multipliers_csv(const std::string& path, const Multipliers& m, const FemSpace& space,
                           std::uint64_t config_hash);

}  // namespace viflow
