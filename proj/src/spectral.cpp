#include "fracflow/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

namespace fracflow {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// FFTW plan creation and destruction are not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::complex<double>> axis_symbols(int n) {
  std::vector<std::complex<double>> s(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const double theta = 2.0 * M_PI * static_cast<double>(f) / static_cast<double>(n);
    s[static_cast<std::size_t>(f)] =
        std::complex<double>(std::cos(theta) - 1.0, std::sin(theta));
  }
  return s;
}

}  // namespace

struct SpectralPlan::Impl {
  GridDims dims;
  TransformPath path;
  std::size_t n = 0;    // voxels
  std::size_t nc = 0;   // stored spectral points per component (real path)
  int n1c = 0;          // n1/2 + 1

  double* rbuf = nullptr;        // 3 * n
  fftw_complex* cbuf = nullptr;  // 3 * nc
  fftw_complex* zbuf = nullptr;  // 3 * n (complex reference path)
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  std::vector<std::complex<double>> kx, ky, kz;
  std::vector<double> t3, g3;  // project_compatible scratch

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (rbuf) fftw_free(rbuf);
    if (cbuf) fftw_free(cbuf);
    if (zbuf) fftw_free(zbuf);
  }
};

SpectralPlan::SpectralPlan(const GridDims& dims, TransformPath path)
    : impl_(std::make_unique<Impl>()) {
  validate_dims(dims);
  auto& im = *impl_;
  im.dims = dims;
  im.path = path;
  im.n = dims.voxel_count();
  im.n1c = dims.n1 / 2 + 1;
  im.nc = static_cast<std::size_t>(im.n1c) * dims.n2 * dims.n3;
  im.kx = axis_symbols(dims.n1);
  im.ky = axis_symbols(dims.n2);
  im.kz = axis_symbols(dims.n3);

  // FFTW is row-major; our i index is fastest, so the logical dims are
  // {n3, n2, n1} and the r2c transform halves the i axis.
  int nd[3] = {dims.n3, dims.n2, dims.n1};

  std::lock_guard<std::mutex> lock(planner_mutex());
  if (path == TransformPath::real) {
    im.rbuf = fftw_alloc_real(3 * im.n);
    im.cbuf = fftw_alloc_complex(3 * im.nc);
    im.fwd = fftw_plan_many_dft_r2c(3, nd, 3, im.rbuf, nullptr, 1,
                                    static_cast<int>(im.n), im.cbuf, nullptr, 1,
                                    static_cast<int>(im.nc), FFTW_ESTIMATE);
    im.bwd = fftw_plan_many_dft_c2r(3, nd, 3, im.cbuf, nullptr, 1,
                                    static_cast<int>(im.nc), im.rbuf, nullptr, 1,
                                    static_cast<int>(im.n), FFTW_ESTIMATE);
  } else {
    im.zbuf = fftw_alloc_complex(3 * im.n);
    im.fwd = fftw_plan_many_dft(3, nd, 3, im.zbuf, nullptr, 1,
                                static_cast<int>(im.n), im.zbuf, nullptr, 1,
                                static_cast<int>(im.n), FFTW_FORWARD, FFTW_ESTIMATE);
    im.bwd = fftw_plan_many_dft(3, nd, 3, im.zbuf, nullptr, 1,
                                static_cast<int>(im.n), im.zbuf, nullptr, 1,
                                static_cast<int>(im.n), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (!im.fwd || !im.bwd) {
    throw Error("failed to create transform plans for grid " + dims.to_string());
  }
}

SpectralPlan::~SpectralPlan() = default;
SpectralPlan::SpectralPlan(SpectralPlan&&) noexcept = default;
SpectralPlan& SpectralPlan::operator=(SpectralPlan&&) noexcept = default;

const GridDims& SpectralPlan::dims() const { return impl_->dims; }
TransformPath SpectralPlan::path() const { return impl_->path; }

void SpectralPlan::gamma_apply(std::span<const double> in3, std::span<double> out3) {
  auto& im = *impl_;
  const std::size_t n = im.n;
  if (in3.size() != 3 * n || out3.size() != 3 * n) {
    throw DimensionMismatchError("gamma_apply: expected 3 component planes of " +
                                 std::to_string(n) + " entries");
  }

  if (im.path == TransformPath::real) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(3 * n); ++i) {
      im.rbuf[i] = in3[static_cast<std::size_t>(i)];
    }
    fftw_execute(im.fwd);

    const std::size_t nc = im.nc;
    const int n1c = im.n1c, n2 = im.dims.n2, n3 = im.dims.n3;
    auto* c0 = reinterpret_cast<std::complex<double>*>(im.cbuf);
    auto* c1 = c0 + nc;
    auto* c2 = c1 + nc;
#pragma omp parallel for collapse(2) schedule(static)
    for (int k = 0; k < n3; ++k) {
      for (int j = 0; j < n2; ++j) {
        const std::size_t row = static_cast<std::size_t>(n1c) *
                                (static_cast<std::size_t>(j) +
                                 static_cast<std::size_t>(n2) * k);
        const std::complex<double> sy = im.ky[static_cast<std::size_t>(j)];
        const std::complex<double> sz = im.kz[static_cast<std::size_t>(k)];
        for (int f = 0; f < n1c; ++f) {
          const std::size_t p = row + static_cast<std::size_t>(f);
          const std::complex<double> sx = im.kx[static_cast<std::size_t>(f)];
          const double den =
              std::norm(sx) + std::norm(sy) + std::norm(sz);
          if (den == 0.0) {
            c0[p] = c1[p] = c2[p] = 0.0;
          } else {
            const std::complex<double> coef =
                (std::conj(sx) * c0[p] + std::conj(sy) * c1[p] +
                 std::conj(sz) * c2[p]) /
                den;
            c0[p] = sx * coef;
            c1[p] = sy * coef;
            c2[p] = sz * coef;
          }
        }
      }
    }

    fftw_execute(im.bwd);
    const double scale = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(3 * n); ++i) {
      out3[static_cast<std::size_t>(i)] = im.rbuf[i] * scale;
    }
    return;
  }

  // Complex reference path over the full spectrum.
  auto* z0 = reinterpret_cast<std::complex<double>*>(im.zbuf);
  auto* z1 = z0 + n;
  auto* z2 = z1 + n;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(3 * n); ++i) {
    reinterpret_cast<std::complex<double>*>(im.zbuf)[i] =
        in3[static_cast<std::size_t>(i)];
  }
  fftw_execute(im.fwd);
  const int n1 = im.dims.n1, n2 = im.dims.n2, n3 = im.dims.n3;
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < n3; ++k) {
    for (int j = 0; j < n2; ++j) {
      const std::size_t row = static_cast<std::size_t>(n1) *
                              (static_cast<std::size_t>(j) +
                               static_cast<std::size_t>(n2) * k);
      const std::complex<double> sy = im.ky[static_cast<std::size_t>(j)];
      const std::complex<double> sz = im.kz[static_cast<std::size_t>(k)];
      for (int f = 0; f < n1; ++f) {
        const std::size_t p = row + static_cast<std::size_t>(f);
        const std::complex<double> sx = im.kx[static_cast<std::size_t>(f)];
        const double den = std::norm(sx) + std::norm(sy) + std::norm(sz);
        if (den == 0.0) {
          z0[p] = z1[p] = z2[p] = 0.0;
        } else {
          const std::complex<double> coef =
              (std::conj(sx) * z0[p] + std::conj(sy) * z1[p] +
               std::conj(sz) * z2[p]) /
              den;
          z0[p] = sx * coef;
          z1[p] = sy * coef;
          z2[p] = sz * coef;
        }
      }
    }
  }
  fftw_execute(im.bwd);
  const double scale = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(3 * n); ++i) {
    out3[static_cast<std::size_t>(i)] =
        reinterpret_cast<std::complex<double>*>(im.zbuf)[i].real() * scale;
  }
}

void SpectralPlan::gamma_apply_into(const VectorField3& in, VectorField3& out) {
  require_same_shape(in.dims(), impl_->dims, "gamma_apply");
  require_same_shape(out.dims(), impl_->dims, "gamma_apply");
  if (!all_finite(in)) {
    throw ValueError("gamma_apply: input field has non-finite entries");
  }
  gamma_apply({in.data(), 3 * impl_->n}, {out.data(), 3 * impl_->n});
}

VectorField3 SpectralPlan::gamma_apply(const VectorField3& in) {
  VectorField3 out(in.dims());
  gamma_apply_into(in, out);
  return out;
}

void SpectralPlan::project_compatible_into(const Field6& w, const Direction& xibar,
                                           Field6& out) {
  auto& im = *impl_;
  require_same_shape(w.dims(), im.dims, "project_compatible");
  require_same_shape(out.dims(), im.dims, "project_compatible");
  const std::size_t n = im.n;
  if (im.t3.size() != 3 * n) {
    im.t3.assign(3 * n, 0.0);
    im.g3.assign(3 * n, 0.0);
  }

  // t3 = A* w, then g3 = Gamma t3, then
  // out = A xibar + w - A (t3 - g3).
  const double* d = w.data();
  const int n1 = im.dims.n1, n2 = im.dims.n2, n3 = im.dims.n3;
  const std::size_t s2 = static_cast<std::size_t>(n1);
  const std::size_t s3 = s2 * static_cast<std::size_t>(n2);
  double* t = im.t3.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < n3; ++k) {
    for (int j = 0; j < n2; ++j) {
      const std::size_t row = s2 * static_cast<std::size_t>(j) +
                              s3 * static_cast<std::size_t>(k);
      const std::size_t jp = s2 * static_cast<std::size_t>(j == n2 - 1 ? 0 : j + 1) +
                             s3 * static_cast<std::size_t>(k);
      const std::size_t kp = s2 * static_cast<std::size_t>(j) +
                             s3 * static_cast<std::size_t>(k == n3 - 1 ? 0 : k + 1);
      for (int i = 0; i < n1; ++i) {
        const std::size_t p = row + static_cast<std::size_t>(i);
        const std::size_t xp = row + static_cast<std::size_t>(i == n1 - 1 ? 0 : i + 1);
        const std::size_t yp = jp + static_cast<std::size_t>(i);
        const std::size_t zp = kp + static_cast<std::size_t>(i);
        t[p] = kInvSqrt2 * (d[p] + d[3 * n + xp]);
        t[n + p] = kInvSqrt2 * (d[n + p] + d[4 * n + yp]);
        t[2 * n + p] = kInvSqrt2 * (d[2 * n + p] + d[5 * n + zp]);
      }
    }
  }

  gamma_apply({im.t3.data(), 3 * n}, {im.g3.data(), 3 * n});

  const double* g = im.g3.data();
  double* o = out.data();
  const auto& xb = xibar.as_array();
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < n3; ++k) {
    for (int j = 0; j < n2; ++j) {
      const std::size_t row = s2 * static_cast<std::size_t>(j) +
                              s3 * static_cast<std::size_t>(k);
      const std::size_t jm = s2 * static_cast<std::size_t>(j == 0 ? n2 - 1 : j - 1) +
                             s3 * static_cast<std::size_t>(k);
      const std::size_t km = s2 * static_cast<std::size_t>(j) +
                             s3 * static_cast<std::size_t>(k == 0 ? n3 - 1 : k - 1);
      for (int i = 0; i < n1; ++i) {
        const std::size_t p = row + static_cast<std::size_t>(i);
        const std::size_t xm = row + static_cast<std::size_t>(i == 0 ? n1 - 1 : i - 1);
        const std::size_t ym = jm + static_cast<std::size_t>(i);
        const std::size_t zm = km + static_cast<std::size_t>(i);
        for (int c = 0; c < 3; ++c) {
          const std::size_t cc = static_cast<std::size_t>(c) * n;
          const std::size_t back = c == 0 ? xm : (c == 1 ? ym : zm);
          o[cc + p] = kInvSqrt2 * xb[static_cast<std::size_t>(c)] + d[cc + p] -
                      kInvSqrt2 * (t[cc + p] - g[cc + p]);
          o[(3 + c) * n + p] = kInvSqrt2 * xb[static_cast<std::size_t>(c)] +
                               d[(3 + c) * n + p] -
                               kInvSqrt2 * (t[cc + back] - g[cc + back]);
        }
      }
    }
  }
}

Field6 SpectralPlan::project_compatible(const Field6& w, const Direction& xibar) {
  Field6 out(w.dims());
  project_compatible_into(w, xibar, out);
  return out;
}

}  // namespace fracflow
