#pragma once

#include <complex>
#include <vector>

namespace iusp {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

// |X[k]|^2 for k = 0..n/2 of the zero-padded real frame. n power of two,
// frame.size() <= n.
std::vector<double> power_spectrum(const std::vector<double>& frame, size_t n);

}  // namespace iusp
