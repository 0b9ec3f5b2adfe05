#pragma once

#include <memory>
#include <span>

#include "fracflow/grid.hpp"

namespace fracflow {

/// Transform backend. `real` runs batched real-to-complex transforms on the
/// half spectrum; `complex_reference` runs full complex transforms and
/// defines correctness for the real path.
enum class TransformPath { real, complex_reference };

/// Holds the per-frequency symbols of the forward-difference gradient and
/// the transform plans/workspaces for one grid shape.
///
/// The applied operator is the projector onto discrete gradient fields,
/// grad+ (div- grad+)^dagger div-. In Fourier space it acts per frequency n
/// as the rank-1 Hermitian projector k k^H / |k|^2 with
/// k_j(n) = exp(2 pi i n_j / N_j) - 1, and as 0 at the zero frequency.
/// Spacing factors cancel, so the symbols are h-free.
///
/// A plan owns mutable workspaces: one plan may not be used from several
/// threads at once. Concurrent solves should hold one plan each.
class SpectralPlan {
 public:
  explicit SpectralPlan(const GridDims& dims,
                        TransformPath path = TransformPath::real);
  ~SpectralPlan();

  SpectralPlan(SpectralPlan&&) noexcept;
  SpectralPlan& operator=(SpectralPlan&&) noexcept;
  SpectralPlan(const SpectralPlan&) = delete;
  SpectralPlan& operator=(const SpectralPlan&) = delete;

  const GridDims& dims() const;
  TransformPath path() const;

  /// Applies the gradient projector to a 3-component field given as three
  /// contiguous component planes of voxel_count() entries each. `in` and
  /// `out` may alias.
  void gamma_apply(std::span<const double> in3, std::span<double> out3);

  void gamma_apply_into(const VectorField3& in, VectorField3& out);
  VectorField3 gamma_apply(const VectorField3& in);

  /// Orthogonal projection onto the affine set of compatible normal fields:
  /// P(w) = A xibar + (Id - A A* + A Gamma A*) w. The 3-component part of
  /// A* P(w) equals xibar plus a discrete gradient.
  void project_compatible_into(const Field6& w, const Direction& xibar,
                               Field6& out);
  Field6 project_compatible(const Field6& w, const Direction& xibar);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fracflow
