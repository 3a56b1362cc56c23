#pragma once

#include <complex>
#include <vector>

namespace fwn {

/// In-place radix-2 Cooley-Tukey transform. data.size() must be a power of
/// two. Forward uses e^{-2*pi*i*jk/N}; inverse includes the 1/N factor.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

bool is_power_of_two(std::size_t n);

}  // namespace fwn
