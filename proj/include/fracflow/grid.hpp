#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracflow/errors.hpp"

namespace fracflow {

/// Shape of a periodic voxel grid. Voxels are cubic with edge length h;
/// h defaults to 1 and only enters exported geometry metadata, never the
/// homogenized value itself.
struct GridDims {
  int n1 = 1;
  int n2 = 1;
  int n3 = 1;
  double h = 1.0;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2) *
           static_cast<std::size_t>(n3);
  }

  bool same_shape(const GridDims& o) const {
    return n1 == o.n1 && n2 == o.n2 && n3 == o.n3;
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n1) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(n2) * static_cast<std::size_t>(k));
  }

  std::string to_string() const;
};

/// Throws ValueError unless the dims describe a usable grid.
void validate_dims(const GridDims& dims);

/// Throws DimensionMismatchError unless a and b have the same voxel shape.
void require_same_shape(const GridDims& a, const GridDims& b, const char* op);

/// Dense periodic voxel field with K real components per voxel.
///
/// Storage is component-planar with the i index fastest: component c of
/// voxel (i,j,k) lives at data()[c * voxel_count() + index(i,j,k)]. The
/// planar layout keeps every per-component slice contiguous and stride-1,
/// which is what the batched transforms want.
template <int K>
class Field {
 public:
  static constexpr int components = K;

  Field() : dims_{1, 1, 1, 1.0}, data_(K, 0.0) {}

  explicit Field(const GridDims& dims, double fill = 0.0)
      : dims_(dims), data_(K * checked_count(dims), fill) {}

  const GridDims& dims() const { return dims_; }
  std::size_t voxel_count() const { return dims_.voxel_count(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> component(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * voxel_count(),
            voxel_count()};
  }
  std::span<const double> component(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * voxel_count(),
            voxel_count()};
  }

  double& at(int c, std::size_t voxel) {
    return data_[static_cast<std::size_t>(c) * voxel_count() + voxel];
  }
  double at(int c, std::size_t voxel) const {
    return data_[static_cast<std::size_t>(c) * voxel_count() + voxel];
  }

  double& at(int c, int i, int j, int k) { return at(c, dims_.index(i, j, k)); }
  double at(int c, int i, int j, int k) const {
    return at(c, dims_.index(i, j, k));
  }

  void fill(double value) { data_.assign(data_.size(), value); }

 private:
  static std::size_t checked_count(const GridDims& dims) {
    validate_dims(dims);
    return dims.voxel_count();
  }

  GridDims dims_;
  std::vector<double> data_;
};

using ScalarField = Field<1>;
using VectorField3 = Field<3>;
using Field6 = Field<6>;

/// Unit vector on S^2, the prescribed mean crack normal.
class Direction {
 public:
  /// Requires the components to be unit length within 1e-12.
  Direction(double x, double y, double z);

  /// Scales an arbitrary nonzero vector to unit length.
  static Direction normalized(double x, double y, double z);

  double x() const { return v_[0]; }
  double y() const { return v_[1]; }
  double z() const { return v_[2]; }
  const std::array<double, 3>& as_array() const { return v_; }

 private:
  std::array<double, 3> v_;
};

/// Normalized inner product (1/N) sum over voxels and components.
/// Reductions are evaluated in a fixed blocked-pairwise order, so results
/// do not depend on the thread count.
template <int K>
double inner_product(const Field<K>& a, const Field<K>& b);

/// sqrt(<a, a>).
template <int K>
double norm_l2(const Field<K>& a);

/// Componentwise voxel average.
template <int K>
std::array<double, K> mean_field(const Field<K>& a);

/// Per-voxel Euclidean norm over the K components.
template <int K>
ScalarField pointwise_norm(const Field<K>& a);

/// True if every entry is finite.
template <int K>
bool all_finite(const Field<K>& a);

extern template double inner_product<1>(const ScalarField&, const ScalarField&);
extern template double inner_product<3>(const VectorField3&, const VectorField3&);
extern template double inner_product<6>(const Field6&, const Field6&);
extern template double norm_l2<1>(const ScalarField&);
extern template double norm_l2<3>(const VectorField3&);
extern template double norm_l2<6>(const Field6&);
extern template std::array<double, 1> mean_field<1>(const ScalarField&);
extern template std::array<double, 3> mean_field<3>(const VectorField3&);
extern template std::array<double, 6> mean_field<6>(const Field6&);
extern template ScalarField pointwise_norm<1>(const ScalarField&);
extern template ScalarField pointwise_norm<3>(const VectorField3&);
extern template ScalarField pointwise_norm<6>(const Field6&);
extern template bool all_finite<1>(const ScalarField&);
extern template bool all_finite<3>(const VectorField3&);
extern template bool all_finite<6>(const Field6&);

}  // namespace fracflow
