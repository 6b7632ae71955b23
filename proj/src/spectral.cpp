#include "dspear/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dspear::features {

void fft_inplace(std::vector<Complex>& x) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles from the angle directly; recurrences drift for long transforms.
      const Complex w = std::polar(1.0, ang * static_cast<double>(k));
      for (std::size_t i = k; i < n; i += len) {
        const Complex u = x[i];
        const Complex v = x[i + half] * w;
        x[i] = u + v;
        x[i + half] = u - v;
      }
    }
  }
}

std::vector<Complex> rfft(std::span<const double> x, std::size_t n_fft) {
  std::vector<Complex> buf(n_fft);
  for (std::size_t i = 0; i < std::min(n_fft, x.size()); ++i) buf[i] = x[i];
  fft_inplace(buf);
  buf.resize(n_fft / 2 + 1);
  return buf;
}

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  return w;
}

Dct::Dct(std::size_t n_in, std::size_t n_out) : n_in_(n_in), n_out_(n_out), basis_(n_in * n_out) {
  if (n_out > n_in || n_in == 0) throw std::invalid_argument("DCT needs 0 < n_out <= n_in");
  for (std::size_t k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_in));
    for (std::size_t n = 0; n < n_in; ++n)
      basis_[k * n_in + n] =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(n) + 1.0) /
                           (2.0 * static_cast<double>(n_in)));
  }
}

std::vector<double> Dct::operator()(std::span<const double> x) const {
  if (x.size() != n_in_) throw std::invalid_argument("DCT input length mismatch");
  std::vector<double> out(n_out_, 0.0);
  for (std::size_t k = 0; k < n_out_; ++k) {
    double acc = 0.0;
    for (std::size_t n = 0; n < n_in_; ++n) acc += basis_[k * n_in_ + n] * x[n];
    out[k] = acc;
  }
  return out;
}

}  // namespace dspear::features
