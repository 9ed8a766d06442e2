#pragma once

#include <complex>
#include <span>
#include <vector>

namespace gfwi::detail {

/// Unnormalised DCT-II: Y_k = 2 sum_j x_j cos(pi k (j + 1/2) / n).
void dct2(std::span<const double> in, std::span<double> out);
/// Unnormalised DCT-III: x_j = X_0 + 2 sum_{k>=1} X_k cos(pi k (j + 1/2) / n).
void dct3(std::span<const double> in, std::span<double> out);

/// 2D real-to-complex FFT of an n0 x n1 row-major array (n1 fastest);
/// output has n0 x (n1/2 + 1) entries.
void rfft2(int n0, int n1, std::span<const double> in, std::span<std::complex<double>> out);
/// Unnormalised inverse of rfft2 (result is n0*n1 times the original).
void irfft2(int n0, int n1, std::span<const std::complex<double>> in, std::span<double> out);

}  // namespace gfwi::detail
