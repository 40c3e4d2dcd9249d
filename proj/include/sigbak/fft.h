// include/sigbak/fft.h

// Copyright 2025  The sigbak authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SIGBAK_FFT_H_
#define SIGBAK_FFT_H_

#include <complex>
#include <cstddef>
#include <vector>

namespace sigbak {

size_t next_pow2(size_t n);

// In-place iterative radix-2 transform; a.size() must be a power of two.
// The inverse includes the 1/N scaling.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Full linear convolution, length x.size() + h.size() - 1.
std::vector<float> fft_convolve(const std::vector<float>& x,
                                const std::vector<float>& h);

}  // namespace sigbak

#endif  // SIGBAK_FFT_H_
