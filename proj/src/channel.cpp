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

#include "mmcast/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmcast
{

double wrap_spatial_frequency(double aod)
{
    double r = std::fmod(aod + 1.0, 2.0);
    if (r < 0.0)
        r += 2.0;
    return r - 1.0;
}

cvec steering_vector(std::size_t n_antennas, double aod)
{
    if (n_antennas == 0)
        throw std::invalid_argument("steering_vector: number of antennas must be positive.");

    const double phase_step = pi * wrap_spatial_frequency(aod);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    cvec u(n_antennas);
    for (std::size_t i = 0; i < n_antennas; ++i)
        u[i] = std::polar(scale, phase_step * static_cast<double>(i));
    return u;
}

cplx inner(std::span<const cplx> x, std::span<const cplx> y)
{
    if (x.size() != y.size())
        throw std::invalid_argument("inner: vector lengths differ.");
    cplx acc{};
    for (std::size_t i = 0; i < x.size(); ++i)
        acc += std::conj(x[i]) * y[i];
    return acc;
}

double squared_norm(std::span<const cplx> x)
{
    double acc = 0.0;
    for (const auto &v : x)
        acc += std::norm(v);
    return acc;
}

cplx complex_gaussian(Rng &rng, double variance)
{
    if (variance <= 0.0)
        return {};
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

MultipathChannel sample_channel(const ChannelStats &stats, std::size_t n_antennas, std::size_t n_paths, Rng &rng)
{
    std::uniform_real_distribution<double> aod_dist(-1.0, 1.0);

    MultipathChannel ch;
    ch.n_antennas = n_antennas;
    ch.los.coeff = complex_gaussian(rng, stats.los_variance);
    ch.los.aod = aod_dist(rng);
    ch.nlos.reserve(n_paths);
    for (std::size_t l = 0; l < n_paths; ++l)
    {
        double var = 0.0;
        if (!stats.nlos_variances.empty())
            var = stats.nlos_variances[std::min(l, stats.nlos_variances.size() - 1)];
        ChannelPath p;
        p.coeff = complex_gaussian(rng, var);
        p.aod = aod_dist(rng);
        ch.nlos.push_back(p);
    }
    return ch;
}

cvec channel_vector(const MultipathChannel &ch)
{
    const std::size_t n = ch.n_antennas;
    if (n == 0)
        throw std::invalid_argument("channel_vector: number of antennas must be positive.");

    const double root_n = std::sqrt(static_cast<double>(n));
    cvec h(n, cplx{});
    auto add_path = [&](const ChannelPath &p)
    {
        const cvec u = steering_vector(n, p.aod);
        for (std::size_t i = 0; i < n; ++i)
            h[i] += root_n * p.coeff * u[i];
    };
    add_path(ch.los);
    for (const auto &p : ch.nlos)
        add_path(p);
    return h;
}

cplx received_symbol_noiseless(std::span<const cplx> h, std::span<const cplx> f, const LinkParams &link)
{
    return std::sqrt(link.power) * inner(h, f) * link.pilot;
}

cplx received_symbol(std::span<const cplx> h, std::span<const cplx> f, const LinkParams &link, Rng &rng)
{
    const cplx clean = received_symbol_noiseless(h, f, link);
    return clean + complex_gaussian(rng, link.noise_var);
}

cplx beam_gain(double aod, std::span<const cplx> f)
{
    const cvec u = steering_vector(f.size(), aod);
    return std::sqrt(static_cast<double>(f.size())) * inner(u, f);
}

} // namespace mmcast
