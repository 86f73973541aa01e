#pragma once

#include <complex>
#include <cstddef>

namespace pisf::fftc {

// Centered orthonormal DFT: DC lives at index floor(n/2) in both domains,
// and both directions carry the 1/sqrt(n) factor, so forward and inverse
// are unitary adjoints of each other.

void fft1d_centered(std::complex<float>* x, size_t n, size_t howmany, bool forward);
void fft1d_centered(std::complex<double>* x, size_t n, size_t howmany, bool forward);

// `howmany` contiguous h x w planes, transformed independently.
void fft2d_centered(std::complex<float>* x, size_t h, size_t w, size_t howmany, bool forward);
void fft2d_centered(std::complex<double>* x, size_t h, size_t w, size_t howmany, bool forward);

} // namespace pisf::fftc
