#pragma once

#include <cmath>

#include "fracflow/grid.hpp"
#include "fracflow/rng.hpp"

namespace testutil {

template <int K>
fracflow::Field<K> random_field(const fracflow::GridDims& dims,
                                fracflow::Xoshiro256pp& rng, double lo = -1.0,
                                double hi = 1.0) {
  fracflow::Field<K> f(dims);
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = rng.uniform(lo, hi);
  return f;
}

template <int K>
double max_abs_diff(const fracflow::Field<K>& a, const fracflow::Field<K>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

template <int K>
double max_abs(const fracflow::Field<K>& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

}  // namespace testutil
