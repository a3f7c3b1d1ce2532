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

#include "mmcast/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmcast
{

namespace
{

// log2 of base^exponent, for the search-space guards
double log2_space(std::size_t base, std::size_t exponent)
{
    return static_cast<double>(exponent) * std::log2(static_cast<double>(base));
}

void check_problem(const MulticastProblem &problem)
{
    if (problem.channels.empty())
        throw std::invalid_argument("At least one channel is required.");
    if (problem.noise_vars.size() != problem.channels.size())
        throw std::invalid_argument("One noise variance per channel is required.");
    for (const auto &h : problem.channels)
        if (h.size() != problem.channels.front().size())
            throw std::invalid_argument("All channels must have the same length.");
}

} // namespace

OracleResult exhaustive_factor_oracle(const SubArrayLayout &layout, const MulticastProblem &problem,
                                      const QuantizedAngleSet &t_set, const QuantizedAngleSet *entry_set)
{
    check_problem(problem);
    const std::size_t n_factors = layout.n_factors();
    if (log2_space(t_set.size(), n_factors) > max_factor_search_bits)
        throw search_space_error("exhaustive_factor_oracle: " + std::to_string(t_set.size()) + "^" +
                                 std::to_string(n_factors) + " factor tuples exceed the 2^24 budget.");

    const FactorObjective fast(layout, problem);
    auto evaluate = [&](const std::vector<double> &thetas)
    {
        if (entry_set == nullptr)
            return fast(thetas);
        return min_snr_objective(problem, assemble_beamformer(layout, thetas, entry_set).f_rf);
    };

    OracleResult res;
    res.best_value = -1.0;
    std::vector<std::size_t> idx(n_factors, 0);
    std::vector<double> thetas(n_factors);
    for (;;)
    {
        for (std::size_t n = 0; n < n_factors; ++n)
            thetas[n] = t_set.angles[idx[n]];
        const double v = evaluate(thetas);
        ++res.evaluations;
        if (v > res.best_value)
        {
            res.best_value = v;
            res.best_config = idx;
        }

        // odometer, last factor fastest
        std::size_t pos = n_factors;
        while (pos > 0)
        {
            --pos;
            if (++idx[pos] < t_set.size())
                break;
            idx[pos] = 0;
            if (pos == 0)
                return res;
        }
        if (n_factors == 0)
            return res;
    }
}

OracleResult exhaustive_beamformer_oracle(const MulticastProblem &problem, const QuantizedAngleSet &entry_set)
{
    check_problem(problem);
    const std::size_t n = problem.channels.front().size();
    const std::size_t s = entry_set.size();
    const std::size_t k_users = problem.n_users();
    if (log2_space(s, n) > max_beamformer_search_bits)
        throw search_space_error("exhaustive_beamformer_oracle: " + std::to_string(s) + "^" + std::to_string(n) +
                                 " candidates exceed the 2^26 budget.");

    // contrib[(i * s + m) * K + k] = conj(h_k[i]) e^{j S_m} / sqrt(N)
    const double modulus = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<cplx> contrib(n * s * k_users);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < s; ++m)
            for (std::size_t k = 0; k < k_users; ++k)
                contrib[(i * s + m) * k_users + k] =
                    std::conj(problem.channels[k][i]) * std::polar(modulus, entry_set.angles[m]);

    std::vector<double> scale(k_users);
    for (std::size_t k = 0; k < k_users; ++k)
        scale[k] = problem.power / problem.noise_vars[k];

    OracleResult res;
    res.best_value = -1.0;
    std::vector<std::size_t> idx(n, 0);
    // partial[d * K + k]: response of user k to entries 0..d-1
    std::vector<cplx> partial((n + 1) * k_users, cplx{});

    auto recurse = [&](auto &&self, std::size_t depth) -> void
    {
        const cplx *base = partial.data() + depth * k_users;
        if (depth + 1 == n)
        {
            for (std::size_t m = 0; m < s; ++m)
            {
                const cplx *c = contrib.data() + (depth * s + m) * k_users;
                double worst = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < k_users; ++k)
                    worst = std::min(worst, scale[k] * std::norm(base[k] + c[k]));
                ++res.evaluations;
                if (worst > res.best_value)
                {
                    res.best_value = worst;
                    idx[depth] = m;
                    res.best_config = idx;
                }
            }
            return;
        }
        cplx *next = partial.data() + (depth + 1) * k_users;
        for (std::size_t m = 0; m < s; ++m)
        {
            const cplx *c = contrib.data() + (depth * s + m) * k_users;
            for (std::size_t k = 0; k < k_users; ++k)
                next[k] = base[k] + c[k];
            idx[depth] = m;
            self(self, depth + 1);
        }
    };
    recurse(recurse, 0);
    return res;
}

cvec quantized_matched_filter(std::size_t n_antennas, double aod, const QuantizedAngleSet &entry_set)
{
    const double modulus = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    const double delta = entry_set.spacing();
    const cvec u = steering_vector(n_antennas, aod);

    // the snapped vector only changes where a rotated entry crosses a decision boundary
    std::vector<double> breaks;
    breaks.reserve(n_antennas + 1);
    for (const auto &v : u)
    {
        double b = std::fmod(-std::arg(v) - pi, delta);
        if (b < 0.0)
            b += delta;
        breaks.push_back(b);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.push_back(breaks.front() + delta);

    cvec best_f, f(n_antennas);
    double best = -1.0;
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j)
    {
        if (breaks[j + 1] - breaks[j] < 1e-12 * delta)
            continue;
        const double psi = 0.5 * (breaks[j] + breaks[j + 1]);
        for (std::size_t i = 0; i < n_antennas; ++i)
            f[i] = std::polar(modulus, entry_set.snap(std::arg(u[i]) + psi));
        const double gain = std::abs(inner(u, f));
        if (gain > best)
        {
            best = gain;
            best_f = f;
        }
    }
    if (best_f.empty())
    {
        for (std::size_t i = 0; i < n_antennas; ++i)
            f[i] = std::polar(modulus, entry_set.snap(std::arg(u[i])));
        best_f = f;
    }
    return best_f;
}

BeamformerDesign alter_baseline(const MulticastProblem &problem, const QuantizedAngleSet &entry_set, std::size_t n_iter,
                                std::optional<cvec> init)
{
    check_problem(problem);
    if (n_iter < 1 || n_iter > 20)
        throw std::invalid_argument("alter_baseline: n_iter must be in [1, 20].");

    const std::size_t n = problem.channels.front().size();
    const std::size_t k_users = problem.n_users();
    const double modulus = 1.0 / std::sqrt(static_cast<double>(n));

    cvec f;
    if (init)
    {
        if (init->size() != n)
            throw std::invalid_argument("alter_baseline: initial beamformer has the wrong length.");
        f = *init;
    }
    else
    {
        std::size_t strongest = 0;
        double best_norm = -1.0;
        for (std::size_t k = 0; k < k_users; ++k)
        {
            const double v = squared_norm(problem.channels[k]) / problem.noise_vars[k];
            if (v > best_norm)
            {
                best_norm = v;
                strongest = k;
            }
        }
        f = problem.channels[strongest];
    }
    for (auto &v : f)
        v = std::polar(modulus, entry_set.snap(std::arg(v)));

    std::vector<cplx> candidates;
    for (const double a : entry_set.angles)
        candidates.push_back(std::polar(modulus, a));
    std::vector<double> scale(k_users);
    for (std::size_t k = 0; k < k_users; ++k)
        scale[k] = problem.power / problem.noise_vars[k];

    BeamformerDesign d;
    d.method = "alter";
    d.quantized = true;

    std::vector<cplx> response(k_users);
    for (std::size_t round = 0; round < n_iter; ++round)
    {
        for (std::size_t k = 0; k < k_users; ++k)
            response[k] = inner(problem.channels[k], f);

        for (std::size_t i = 0; i < n; ++i)
        {
            double best = -1.0;
            std::size_t best_m = 0;
            for (std::size_t m = 0; m < candidates.size(); ++m)
            {
                const cplx delta = candidates[m] - f[i];
                double worst = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < k_users; ++k)
                    worst = std::min(worst, scale[k] * std::norm(response[k] + std::conj(problem.channels[k][i]) * delta));
                ++d.eval_count;
                if (worst > best)
                {
                    best = worst;
                    best_m = m;
                }
            }
            const cplx delta = candidates[best_m] - f[i];
            for (std::size_t k = 0; k < k_users; ++k)
                response[k] += std::conj(problem.channels[k][i]) * delta;
            f[i] = candidates[best_m];
        }
        d.objective_history.push_back(min_snr_objective(problem, f));
    }

    d.f_rf = f;
    d.f_unquantized = f;
    d.phases.objective = d.objective_history.back();
    return d;
}

double matched_filter_bound(const MulticastProblem &problem)
{
    check_problem(problem);
    double bound = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < problem.n_users(); ++k)
        bound = std::min(bound, problem.power * squared_norm(problem.channels[k]) / problem.noise_vars[k]);
    return bound;
}

std::uint64_t algorithm2_complexity(unsigned factor_bits, std::size_t n_users, std::size_t i_max)
{
    return (std::uint64_t{1} << factor_bits) * (n_users == 0 ? 0 : n_users - 1) * i_max;
}

std::uint64_t alter_complexity(std::size_t n_antennas, std::size_t n_users, std::size_t n_iter)
{
    return static_cast<std::uint64_t>(n_antennas) * n_antennas * n_users * n_iter;
}

} // namespace mmcast
