#pragma once

#include <complex>
#include <vector>

namespace bohmsim {

// In-place complex FFT of any length (radix-2 when n is a power of two,
// Bluestein's chirp-z otherwise).  Forward uses the e^{-i2πkn/N} convention;
// inverse includes the 1/N factor.
void fft(std::vector<std::complex<double>>& data, bool inverse = false);

std::vector<std::complex<double>> fft_copy(const std::vector<std::complex<double>>& data,
                                           bool inverse = false);

}  // namespace bohmsim
