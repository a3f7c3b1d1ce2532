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

#include "mmcast/multicast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmcast
{

namespace
{

double wrap_to_pi(double phase)
{
    double r = std::fmod(phase + pi, 2.0 * pi);
    if (r <= 0.0)
        r += 2.0 * pi;
    return r - pi;
}

double circular_distance(double a, double b)
{
    return std::abs(wrap_to_pi(a - b));
}

} // namespace

// --- QuantizedAngleSet ---------------------------------------------------------

std::size_t QuantizedAngleSet::nearest_index(double phase) const
{
    const std::size_t n = angles.size();
    const double p = wrap_to_pi(phase);
    const double t = (p + pi) / spacing() - 0.5;
    const auto lo = static_cast<std::size_t>(std::fmod(std::floor(t) + static_cast<double>(n), static_cast<double>(n)));
    const std::size_t hi = (lo + 1) % n;

    const double d_lo = circular_distance(p, angles[lo]);
    const double d_hi = circular_distance(p, angles[hi]);
    const double tie = 1e-12 * spacing();
    if (d_lo < d_hi - tie)
        return lo;
    if (d_hi < d_lo - tie)
        return hi;
    return angles[lo] < angles[hi] ? lo : hi;
}

QuantizedAngleSet quantized_angle_set(unsigned bits)
{
    if (bits < 1 || bits > 16)
        throw std::invalid_argument("quantized_angle_set: bits must be in [1, 16].");

    QuantizedAngleSet s;
    s.bits = bits;
    const std::size_t n = std::size_t{1} << bits;
    s.angles.reserve(n);
    for (std::size_t m = 1; m <= n; ++m)
        s.angles.push_back(pi * (-1.0 + (2.0 * static_cast<double>(m) - 1.0) / static_cast<double>(n)));
    return s;
}

// --- allocation ------------------------------------------------------------------

SubArrayLayout allocate_subarrays(const std::vector<UserEstimate> &users, std::size_t n_antennas)
{
    const std::size_t k_users = users.size();
    if (k_users == 0)
        throw std::invalid_argument("allocate_subarrays: at least one user is required.");
    if (n_antennas < k_users)
        throw std::invalid_argument("allocate_subarrays: fewer antennas than users.");
    for (std::size_t k = 0; k < k_users; ++k)
    {
        if (!(users[k].est_gain > 0.0))
            throw degenerate_user_error("allocate_subarrays: user " + std::to_string(k) +
                                        " has zero estimated gain.");
        if (!(users[k].noise_std > 0.0))
            throw std::invalid_argument("allocate_subarrays: noise standard deviation must be positive.");
    }

    SubArrayLayout layout;
    layout.n_antennas = n_antennas;
    layout.order.resize(k_users);
    std::iota(layout.order.begin(), layout.order.end(), std::size_t{0});
    // full key so that the result does not depend on the input order
    std::stable_sort(layout.order.begin(), layout.order.end(),
                     [&](std::size_t a, std::size_t b)
                     {
                         const auto &ua = users[a], &ub = users[b];
                         return std::tie(ua.est_aod, ua.est_gain, ua.noise_std) <
                                std::tie(ub.est_aod, ub.est_gain, ub.noise_std);
                     });

    double weight_sum = 0.0;
    for (const auto &u : users)
        weight_sum += u.noise_std / u.est_gain;

    // sizes in sorted order
    std::vector<long long> sizes(k_users, 0);
    long long assigned = 0;
    for (std::size_t pos = 0; pos + 1 < k_users; ++pos)
    {
        const auto &u = users[layout.order[pos]];
        const double share = u.noise_std * static_cast<double>(n_antennas) / (u.est_gain * weight_sum);
        sizes[pos] = std::llround(share);
        assigned += sizes[pos];
    }
    sizes[k_users - 1] = static_cast<long long>(n_antennas) - assigned;

    for (;;)
    {
        auto small = std::find_if(sizes.begin(), sizes.end(), [](long long s) { return s < 1; });
        if (small == sizes.end())
            break;
        layout.clamped = true;
        const long long deficit = 1 - *small;
        *small = 1;
        auto largest = std::max_element(sizes.begin(), sizes.end());
        *largest -= deficit;
    }

    layout.user_sizes.assign(k_users, 0);
    for (std::size_t pos = 0; pos < k_users; ++pos)
        layout.user_sizes[layout.order[pos]] = static_cast<std::size_t>(sizes[pos]);

    std::size_t offset = 0;
    for (std::size_t pos = 0; pos < k_users; ++pos)
    {
        const std::size_t k = layout.order[pos];
        if (!layout.subarrays.empty() && layout.subarrays.back().aod == users[k].est_aod)
        {
            layout.subarrays.back().size += layout.user_sizes[k];
            layout.subarrays.back().members.push_back(k);
        }
        else
        {
            SubArray sa;
            sa.aod = users[k].est_aod;
            sa.offset = offset;
            sa.size = layout.user_sizes[k];
            sa.members = {k};
            layout.subarrays.push_back(sa);
        }
        offset += layout.user_sizes[k];
    }
    return layout;
}

cvec subarray_weight(std::size_t size, double aod, std::size_t n_antennas)
{
    if (size < 1 || size > n_antennas)
        throw std::invalid_argument("subarray_weight: size must be in [1, n_antennas].");

    const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    const double step = pi * aod;
    cvec w(size);
    for (std::size_t i = 0; i < size; ++i)
        w[i] = std::polar(scale, step * static_cast<double>(i));
    return w;
}

// --- assembly ----------------------------------------------------------------------

BeamformerDesign assemble_beamformer(const SubArrayLayout &layout, const std::vector<double> &thetas,
                                     const QuantizedAngleSet *entry_set)
{
    if (thetas.size() != layout.n_factors())
        throw std::invalid_argument("assemble_beamformer: expected " + std::to_string(layout.n_factors()) +
                                    " phase factors, got " + std::to_string(thetas.size()) + ".");

    BeamformerDesign d;
    d.method = "algorithm2";
    d.layout = layout;
    d.phases.thetas = thetas;
    d.f_unquantized.reserve(layout.n_antennas);
    for (std::size_t g = 0; g < layout.subarrays.size(); ++g)
    {
        const auto &sa = layout.subarrays[g];
        const cplx factor = g == 0 ? cplx{1.0, 0.0} : std::polar(1.0, thetas[g - 1]);
        for (const auto &v : subarray_weight(sa.size, sa.aod, layout.n_antennas))
            d.f_unquantized.push_back(factor * v);
    }

    d.quantized = entry_set != nullptr;
    if (!d.quantized)
    {
        d.f_rf = d.f_unquantized;
        return d;
    }
    const double modulus = 1.0 / std::sqrt(static_cast<double>(layout.n_antennas));
    d.f_rf.reserve(d.f_unquantized.size());
    for (const auto &v : d.f_unquantized)
        d.f_rf.push_back(std::polar(modulus, entry_set->snap(std::arg(v))));
    return d;
}

// --- objective ----------------------------------------------------------------------

cvec estimated_channel(const UserEstimate &user, std::size_t n_antennas)
{
    cvec h = steering_vector(n_antennas, user.est_aod);
    const double scale = std::sqrt(static_cast<double>(n_antennas)) * user.est_gain;
    for (auto &v : h)
        v *= scale;
    return h;
}

MulticastProblem estimated_problem(const std::vector<UserEstimate> &users, std::size_t n_antennas, double power)
{
    MulticastProblem p;
    p.power = power;
    for (const auto &u : users)
    {
        p.channels.push_back(estimated_channel(u, n_antennas));
        p.noise_vars.push_back(u.noise_std * u.noise_std);
    }
    return p;
}

std::vector<double> user_snrs(const MulticastProblem &problem, std::span<const cplx> f)
{
    if (problem.noise_vars.size() != problem.channels.size())
        throw std::invalid_argument("user_snrs: one noise variance per channel is required.");
    std::vector<double> out;
    out.reserve(problem.channels.size());
    for (std::size_t k = 0; k < problem.channels.size(); ++k)
        out.push_back(problem.power * std::norm(inner(problem.channels[k], f)) / problem.noise_vars[k]);
    return out;
}

double min_snr_objective(const MulticastProblem &problem, std::span<const cplx> f)
{
    const auto snrs = user_snrs(problem, f);
    if (snrs.empty())
        return 0.0;
    return *std::min_element(snrs.begin(), snrs.end());
}

FactorObjective::FactorObjective(const SubArrayLayout &layout, const MulticastProblem &problem)
    : n_users_(problem.n_users()), n_groups_(layout.subarrays.size())
{
    response_.assign(n_users_ * n_groups_, cplx{});
    for (std::size_t g = 0; g < n_groups_; ++g)
    {
        const auto &sa = layout.subarrays[g];
        const cvec w = subarray_weight(sa.size, sa.aod, layout.n_antennas);
        for (std::size_t k = 0; k < n_users_; ++k)
        {
            const auto &h = problem.channels[k];
            if (h.size() != layout.n_antennas)
                throw std::invalid_argument("FactorObjective: channel length does not match the layout.");
            cplx acc{};
            for (std::size_t i = 0; i < sa.size; ++i)
                acc += std::conj(h[sa.offset + i]) * w[i];
            response_[k * n_groups_ + g] = acc;
        }
    }
    for (std::size_t k = 0; k < n_users_; ++k)
        scale_.push_back(problem.power / problem.noise_vars.at(k));
}

double FactorObjective::operator()(std::span<const double> thetas) const
{
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_users_; ++k)
    {
        const cplx *row = response_.data() + k * n_groups_;
        cplx acc = row[0];
        for (std::size_t g = 1; g < n_groups_; ++g)
            acc += std::polar(1.0, thetas[g - 1]) * row[g];
        worst = std::min(worst, scale_[k] * std::norm(acc));
    }
    return n_users_ == 0 ? 0.0 : worst;
}

// --- sequential phase-factor search ---------------------------------------------------

PhaseFactors optimize_phase_factors(const SubArrayLayout &layout, const MulticastProblem &design_problem,
                                    const QuantizedAngleSet &t_set, std::size_t i_max)
{
    if (i_max < 1)
        throw std::invalid_argument("optimize_phase_factors: i_max must be at least 1.");

    const FactorObjective objective(layout, design_problem);
    const std::size_t n_factors = objective.n_factors();

    PhaseFactors pf;
    pf.thetas.assign(n_factors, 0.0);
    pf.indices.assign(n_factors, 0);
    if (n_factors == 0)
    {
        pf.objective = objective(pf.thetas);
        return pf;
    }

    double gamma = 0.0;
    for (std::size_t sweep = 1; sweep <= i_max; ++sweep)
    {
        double current = 0.0;
        for (std::size_t n = 0; n < n_factors; ++n)
        {
            double best = -1.0;
            std::size_t best_m = 0;
            auto trial = pf.thetas;
            for (std::size_t m = 0; m < t_set.size(); ++m)
            {
                trial[n] = t_set.angles[m];
                const double v = objective(trial);
                ++pf.eval_count;
                if (v > best)
                {
                    best = v;
                    best_m = m;
                }
            }
            pf.thetas[n] = t_set.angles[best_m];
            pf.indices[n] = best_m;
            current = best;
        }
        pf.sweeps = sweep;
        pf.sweep_history.push_back(current);
        if (current > gamma)
        {
            gamma = current;
        }
        else
        {
            pf.early_stop = sweep < i_max;
            break;
        }
    }
    pf.objective = gamma;
    return pf;
}

BeamformerDesign run_algorithm2(const std::vector<UserEstimate> &users, const MulticastConfig &config)
{
    const SubArrayLayout layout = allocate_subarrays(users, config.n_antennas);
    const MulticastProblem design = estimated_problem(users, config.n_antennas, config.power);
    const QuantizedAngleSet t_set = quantized_angle_set(config.factor_bits);
    const PhaseFactors pf = optimize_phase_factors(layout, design, t_set, config.i_max);

    const QuantizedAngleSet s_set = quantized_angle_set(config.entry_bits);
    BeamformerDesign d = assemble_beamformer(layout, pf.thetas, config.quantize ? &s_set : nullptr);
    d.phases = pf;
    d.eval_count = pf.eval_count;
    d.objective_history = pf.sweep_history;
    return d;
}

// --- diagnostics ----------------------------------------------------------------------

std::vector<double> equal_snr_diagnostic(const std::vector<UserEstimate> &users, const SubArrayLayout &layout)
{
    const std::size_t n = layout.n_antennas;
    std::vector<double> out(users.size(), 0.0);
    for (const auto &sa : layout.subarrays)
    {
        const cvec w = subarray_weight(sa.size, sa.aod, n);
        std::size_t local = 0;
        for (const std::size_t k : sa.members)
        {
            // zero-padded weight restricted to this user's share of the block
            cvec padded(n, cplx{});
            for (std::size_t i = 0; i < layout.user_sizes[k]; ++i)
                padded[sa.offset + local + i] = w[local + i];
            local += layout.user_sizes[k];

            const cvec h_hat = estimated_channel(users[k], n);
            out[k] = std::abs(inner(h_hat, padded)) * std::sqrt(static_cast<double>(n)) / users[k].noise_std;
        }
    }
    return out;
}

double rounding_ratio_bound(const SubArrayLayout &layout)
{
    const std::size_t k_users = layout.n_users();
    double upper = 1.0, lower = 1.0;
    for (std::size_t pos = 0; pos < k_users; ++pos)
    {
        const double nk = static_cast<double>(layout.user_sizes[layout.order[pos]]);
        const double d = pos + 1 < k_users ? 0.5 : 0.5 * static_cast<double>(k_users - 1);
        if (nk - d <= 0.0)
            return std::numeric_limits<double>::infinity();
        upper = std::max(upper, nk / (nk - d));
        lower = std::max(lower, (nk + d) / nk);
    }
    return upper * lower;
}

} // namespace mmcast
