// SPDX-License-Identifier: Apache-2.0
//
// mmcast - analog multicast beamforming simulation library
// Copyright (C) 2026 The mmcast authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MMCAST_CHANNEL_HPP
#define MMCAST_CHANNEL_HPP

#include <complex>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace mmcast
{

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

/// Random source used by every randomized operation. Each Monte Carlo trial owns one.
using Rng = std::mt19937_64;

inline constexpr double pi = 3.14159265358979323846;

// Spatial frequency phi = sin(physical angle) under half-wavelength spacing.
// Values are stored as given; steering phases are reduced modulo 2.
struct ChannelPath
{
    cplx coeff{};
    double aod = 0.0;
};

struct MultipathChannel
{
    std::size_t n_antennas = 0;
    ChannelPath los;
    std::vector<ChannelPath> nlos;
};

struct ChannelStats
{
    double los_variance = 1.0;
    std::vector<double> nlos_variances = {0.01, 0.01};
};

struct LinkParams
{
    double power = 1.0;     // total transmit power P
    double noise_var = 1.0; // sigma^2
    cplx pilot{1.0, 0.0};   // unit-modulus training symbol
};

/// Reduce a spatial frequency into [-1, 1).
double wrap_spatial_frequency(double aod);

/// Unit-norm ULA response: entry i is exp(j*i*pi*aod)/sqrt(N), i = 0..N-1.
/// Throws std::invalid_argument for n_antennas == 0.
cvec steering_vector(std::size_t n_antennas, double aod);

/// x^H y. Throws std::invalid_argument on length mismatch.
cplx inner(std::span<const cplx> x, std::span<const cplx> y);

double squared_norm(std::span<const cplx> x);

/// Draw from CN(0, variance): real and imaginary parts each N(0, variance/2).
cplx complex_gaussian(Rng &rng, double variance);

/// LoS coefficient ~ CN(0, los_variance), NLoS l ~ CN(0, nlos_variances[l]), AoDs ~ U[-1, 1].
/// `n_paths` NLoS paths are drawn; variances beyond the configured list reuse the last entry
/// (or zero when the list is empty).
MultipathChannel sample_channel(const ChannelStats &stats, std::size_t n_antennas, std::size_t n_paths, Rng &rng);

/// h = sqrt(N) * (alpha u(N, phi) + sum_l alpha_l u(N, phi_l))
cvec channel_vector(const MultipathChannel &ch);

/// sqrt(P) h^H f s + n with n ~ CN(0, noise_var).
cplx received_symbol(std::span<const cplx> h, std::span<const cplx> f, const LinkParams &link, Rng &rng);

/// Noise-free variant of received_symbol.
cplx received_symbol_noiseless(std::span<const cplx> h, std::span<const cplx> f, const LinkParams &link);

/// sqrt(N) u(N, aod)^H f, with N = f.size().
cplx beam_gain(double aod, std::span<const cplx> f);

} // namespace mmcast

#endif
