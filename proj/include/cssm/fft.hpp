#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cssm {

using cd = std::complex<double>;

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_pow2(std::vector<cd>& a, bool inverse);

// DFT of arbitrary length (radix-2 when possible, Bluestein otherwise).
// forward: X_k = sum_t x_t exp(-2*pi*i*k*t/n); inverse divides by n.
std::vector<cd> dft(const std::vector<cd>& x, bool inverse);

std::size_t next_pow2(std::size_t n);

}  // namespace cssm
