#include "fracflow/grid.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fracflow/detail/reduce.hpp"

namespace fracflow {

std::string GridDims::to_string() const {
  std::ostringstream os;
  os << n1 << "x" << n2 << "x" << n3;
  return os.str();
}

void validate_dims(const GridDims& dims) {
  if (dims.n1 < 1 || dims.n2 < 1 || dims.n3 < 1) {
    throw ValueError("grid dims must be positive, got " + dims.to_string());
  }
  if (!(dims.h > 0.0)) {
    throw ValueError("voxel spacing h must be positive");
  }
  const auto max_count = std::numeric_limits<std::size_t>::max() / (8 * 6);
  const std::size_t n12 = static_cast<std::size_t>(dims.n1) * dims.n2;
  if (n12 > max_count / static_cast<std::size_t>(dims.n3)) {
    throw ValueError("grid " + dims.to_string() + " exceeds addressable memory");
  }
}

void require_same_shape(const GridDims& a, const GridDims& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionMismatchError(std::string(op) + ": grid shapes differ, " +
                                 a.to_string() + " vs " + b.to_string());
  }
}

Direction::Direction(double x, double y, double z) : v_{x, y, z} {
  const double n = std::sqrt(x * x + y * y + z * z);
  if (std::abs(n - 1.0) > 1e-12) {
    throw ValueError("direction must be a unit vector (norm deviates by " +
                     std::to_string(std::abs(n - 1.0)) + ")");
  }
}

Direction Direction::normalized(double x, double y, double z) {
  const double n = std::sqrt(x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ValueError("cannot normalize a zero or non-finite direction");
  }
  return Direction(x / n, y / n, z / n);
}

template <int K>
double inner_product(const Field<K>& a, const Field<K>& b) {
  require_same_shape(a.dims(), b.dims(), "inner_product");
  const double* pa = a.data();
  const double* pb = b.data();
  const auto sum = detail::blocked_reduce<1>(
      a.size(), [&](std::size_t begin, std::size_t end, std::array<double, 1>& acc) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += pa[i] * pb[i];
        acc[0] = s;
      });
  return sum[0] / static_cast<double>(a.voxel_count());
}

template <int K>
double norm_l2(const Field<K>& a) {
  const double n2 = inner_product(a, a);
  return n2 > 0.0 ? std::sqrt(n2) : 0.0;
}

template <int K>
std::array<double, K> mean_field(const Field<K>& a) {
  const std::size_t n = a.voxel_count();
  std::array<double, K> out{};
  for (int c = 0; c < K; ++c) {
    const double* p = a.component(c).data();
    const auto sum = detail::blocked_reduce<1>(
        n, [&](std::size_t begin, std::size_t end, std::array<double, 1>& acc) {
          double s = 0.0;
          for (std::size_t i = begin; i < end; ++i) s += p[i];
          acc[0] = s;
        });
    out[c] = sum[0] / static_cast<double>(n);
  }
  return out;
}

template <int K>
ScalarField pointwise_norm(const Field<K>& a) {
  ScalarField out(a.dims());
  const std::size_t n = a.voxel_count();
  double* po = out.data();
  const double* pa = a.data();
#pragma omp parallel for schedule(static)
  for (long long v = 0; v < static_cast<long long>(n); ++v) {
    double s = 0.0;
    for (int c = 0; c < K; ++c) {
      const double x = pa[static_cast<std::size_t>(c) * n + v];
      s += x * x;
    }
    po[v] = std::sqrt(s);
  }
  return out;
}

template <int K>
bool all_finite(const Field<K>& a) {
  const double* p = a.data();
  const auto bad = detail::blocked_reduce<1>(
      a.size(), [&](std::size_t begin, std::size_t end, std::array<double, 1>& acc) {
        double flag = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
          if (!std::isfinite(p[i])) flag = 1.0;
        }
        acc[0] = flag;
      });
  return bad[0] == 0.0;
}

template double inner_product<1>(const ScalarField&, const ScalarField&);
template double inner_product<3>(const VectorField3&, const VectorField3&);
template double inner_product<6>(const Field6&, const Field6&);
template double norm_l2<1>(const ScalarField&);
template double norm_l2<3>(const VectorField3&);
template double norm_l2<6>(const Field6&);
template std::array<double, 1> mean_field<1>(const ScalarField&);
template std::array<double, 3> mean_field<3>(const VectorField3&);
template std::array<double, 6> mean_field<6>(const Field6&);
template ScalarField pointwise_norm<1>(const ScalarField&);
template ScalarField pointwise_norm<3>(const VectorField3&);
template ScalarField pointwise_norm<6>(const Field6&);
template bool all_finite<1>(const ScalarField&);
template bool all_finite<3>(const VectorField3&);
template bool all_finite<6>(const Field6&);

}  // namespace fracflow
