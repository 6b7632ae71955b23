#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dspear::features {

using Complex = std::complex<double>;

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_inplace(std::vector<Complex>& x);

// Zero-pads (or truncates) to n_fft and returns bins 0..n_fft/2.
std::vector<Complex> rfft(std::span<const double> x, std::size_t n_fft);

std::vector<double> hamming(std::size_t n);

// Orthonormal DCT-II, first n_out coefficients.
class Dct {
 public:
  Dct(std::size_t n_in, std::size_t n_out);
  std::vector<double> operator()(std::span<const double> x) const;
  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }

 private:
  std::size_t n_in_, n_out_;
  std::vector<double> basis_;  // n_out x n_in
};

}  // namespace dspear::features
