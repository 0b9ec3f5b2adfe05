#pragma once

#include "fracflow/grid.hpp"

namespace fracflow {

// Discrete operators of the node-centered max-flow scheme, all matrix-free
// on periodic grids. Axes with a single voxel degenerate to the identity
// shift, which is the natural periodic limit (2D problems run as n3 = 1).

/// Backward divergence: (div- v)[i,j,k] = vx[i,j,k]-vx[i-1,j,k] + ... periodic.
ScalarField div_minus(const VectorField3& v);
void div_minus_into(const VectorField3& v, ScalarField& out);

/// Forward gradient: (grad+ phi)_x[i,j,k] = phi[i+1,j,k]-phi[i,j,k], periodic.
VectorField3 grad_plus(const ScalarField& phi);
void grad_plus_into(const ScalarField& phi, VectorField3& out);

/// Backward shift: component c moves one step back along axis c.
VectorField3 shift_back(const VectorField3& v);
void shift_back_into(const VectorField3& v, VectorField3& out);

/// Forward shift, the adjoint (and inverse) of shift_back.
VectorField3 shift_forward(const VectorField3& v);
void shift_forward_into(const VectorField3& v, VectorField3& out);

/// Isometric extension A v = [v; Sv] / sqrt(2), six components per voxel.
Field6 extend_A(const VectorField3& v);
void extend_A_into(const VectorField3& v, Field6& out);

/// Adjoint A* [w1; w2] = (w1 + S* w2) / sqrt(2). Left inverse of extend_A.
VectorField3 restrict_Astar(const Field6& w);
void restrict_Astar_into(const Field6& w, VectorField3& out);

/// Per-voxel max(0, |v|^2 + |Sv|^2 - 2 gamma^2), the flow-bound excess.
/// Throws ValueError on a negative gamma entry.
ScalarField constraint_violation(const VectorField3& v, const ScalarField& gamma);

}  // namespace fracflow
