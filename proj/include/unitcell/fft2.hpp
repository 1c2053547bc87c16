#pragma once

/**
 * @file fft2.hpp
 *
 * Two-dimensional FFT for tensor-field components.
 *
 * Normalization: the forward transform is unnormalized, the inverse divides
 * by nx*ny, so inverse(forward(f)) == f. The inverse returns the real part;
 * for fields produced by even-symmetric frequency multipliers applied to
 * transforms of real data, the imaginary residue is at roundoff level.
 *
 * An Fft2 instance owns working buffers and cached plans; it is cheap to
 * reuse and must not be shared between threads.
 */

#include <unsupported/Eigen/FFT>

#include <complex>
#include <stdexcept>
#include <vector>

#include "unitcell/fields.hpp"

namespace unitcell {

class Fft2 {
 public:
  explicit Fft2(const Grid2& g) : nx_(g.nx), ny_(g.ny) {
    work_.resize(nx_, ny_);
    row_in_.resize(ny_);
    row_out_.resize(ny_);
    col_out_.resize(nx_);
  }

  /** Forward transform of one real component plane (unnormalized). */
  void forward(const Eigen::ArrayXXd& in, Eigen::ArrayXXcd& out) {
    check(in.rows(), in.cols());
    out.resize(nx_, ny_);
    work_ = in.cast<std::complex<double>>();
    transform_columns(work_, out, /*inverse=*/false);
    transform_rows(out, /*inverse=*/false);
  }

  /** Inverse transform of one component plane; scales by 1/(nx*ny), real part. */
  void inverse(const Eigen::ArrayXXcd& in, Eigen::ArrayXXd& out) {
    check(in.rows(), in.cols());
    out.resize(nx_, ny_);
    work_ = in;
    transform_rows(work_, /*inverse=*/true);
    for (int j = 0; j < ny_; ++j) {
      fft_x_.inv(col_out_.data(), work_.data() + static_cast<std::ptrdiff_t>(j) * nx_, nx_);
      for (int i = 0; i < nx_; ++i) out(i, j) = col_out_[i].real();
    }
  }

  void forward(const TensorField2& in, FourierField2& out) {
    out.grid = in.grid;
    forward(in.c11, out.c11);
    forward(in.c22, out.c22);
    forward(in.c12, out.c12);
  }

  void inverse(const FourierField2& in, TensorField2& out) {
    out.grid = in.grid;
    inverse(in.c11, out.c11);
    inverse(in.c22, out.c22);
    inverse(in.c12, out.c12);
  }

 private:
  void check(Eigen::Index rows, Eigen::Index cols) const {
    if (rows != nx_ || cols != ny_) throw std::invalid_argument("Fft2: plane does not match grid");
  }

  void transform_columns(const Eigen::ArrayXXcd& src, Eigen::ArrayXXcd& dst, bool inverse) {
    for (int j = 0; j < ny_; ++j) {
      const std::complex<double>* s = src.data() + static_cast<std::ptrdiff_t>(j) * nx_;
      std::complex<double>* d = dst.data() + static_cast<std::ptrdiff_t>(j) * nx_;
      if (inverse)
        fft_x_.inv(d, s, nx_);
      else
        fft_x_.fwd(d, s, nx_);
    }
  }

  void transform_rows(Eigen::ArrayXXcd& a, bool inverse) {
    for (int i = 0; i < nx_; ++i) {
      for (int j = 0; j < ny_; ++j) row_in_[j] = a(i, j);
      if (inverse)
        fft_y_.inv(row_out_.data(), row_in_.data(), ny_);
      else
        fft_y_.fwd(row_out_.data(), row_in_.data(), ny_);
      for (int j = 0; j < ny_; ++j) a(i, j) = row_out_[j];
    }
  }

  int nx_, ny_;
  Eigen::FFT<double> fft_x_, fft_y_;
  Eigen::ArrayXXcd work_;
  std::vector<std::complex<double>> row_in_, row_out_, col_out_;
};

}  // namespace unitcell
