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

#include <doctest.h>

#include <cmath>

using namespace mmcast;

namespace
{

std::vector<UserEstimate> random_users(std::size_t k, Rng &rng)
{
    std::uniform_real_distribution<double> gain(0.5, 1.5), aod(-1.0, 1.0);
    std::vector<UserEstimate> users(k);
    for (auto &u : users)
        u = {gain(rng), aod(rng), 1.0};
    return users;
}

MulticastProblem los_problem(std::size_t k, std::size_t n, Rng &rng, double power = 1.0)
{
    MulticastProblem p;
    p.power = power;
    for (std::size_t i = 0; i < k; ++i)
    {
        p.channels.push_back(channel_vector(sample_channel(ChannelStats{}, n, 0, rng)));
        p.noise_vars.push_back(1.0);
    }
    return p;
}

double to_db(double x)
{
    return 10.0 * std::log10(x);
}

// every vector of S^N by an odometer, independent of the library search
double brute_force_beamformer(const MulticastProblem &p, const QuantizedAngleSet &s)
{
    const std::size_t n = p.channels.front().size();
    std::vector<std::size_t> idx(n, 0);
    double best = -1.0;
    for (;;)
    {
        cvec f(n);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = std::polar(1.0 / std::sqrt(double(n)), s.angles[idx[i]]);
        best = std::max(best, min_snr_objective(p, f));
        std::size_t pos = 0;
        while (pos < n && ++idx[pos] == s.size())
            idx[pos++] = 0;
        if (pos == n)
            break;
    }
    return best;
}

} // namespace

TEST_CASE("oracle evaluation counts")
{
    Rng rng(1);
    SUBCASE("two users, three factor bits")
    {
        const auto users = random_users(2, rng);
        const auto r = exhaustive_factor_oracle(allocate_subarrays(users, 8), estimated_problem(users, 8, 1.0),
                                                quantized_angle_set(3));
        CHECK(r.evaluations == 8);
        CHECK(r.best_config.size() == 1);
    }
    SUBCASE("three users, four factor bits")
    {
        const auto users = random_users(3, rng);
        const auto r = exhaustive_factor_oracle(allocate_subarrays(users, 64), estimated_problem(users, 64, 1.0),
                                                quantized_angle_set(4));
        CHECK(r.evaluations == 256);
        CHECK(r.best_config.size() == 2);
    }
    SUBCASE("four antennas, two entry bits")
    {
        const auto r = exhaustive_beamformer_oracle(los_problem(2, 4, rng), quantized_angle_set(2));
        CHECK(r.evaluations == 256);
        CHECK(r.best_config.size() == 4);
    }
}

TEST_CASE("oracles refuse oversized searches")
{
    Rng rng(2);
    CHECK_THROWS_AS(exhaustive_beamformer_oracle(los_problem(2, 64, rng), quantized_angle_set(6)), search_space_error);
    CHECK_THROWS_AS(exhaustive_beamformer_oracle(los_problem(2, 9, rng), quantized_angle_set(3)), search_space_error);
    CHECK_NOTHROW(exhaustive_beamformer_oracle(los_problem(1, 4, rng), quantized_angle_set(3)));

    const auto users = random_users(8, rng);
    CHECK_THROWS_AS(exhaustive_factor_oracle(allocate_subarrays(users, 64), estimated_problem(users, 64, 1.0),
                                             quantized_angle_set(4)),
                    search_space_error);
}

TEST_CASE("beamformer oracle against an independent enumeration")
{
    Rng rng(3);
    const auto s = quantized_angle_set(2);
    for (int t = 0; t < 20; ++t)
    {
        const auto p = los_problem(3, 5, rng);
        const auto r = exhaustive_beamformer_oracle(p, s);
        CHECK(r.best_value == doctest::Approx(brute_force_beamformer(p, s)).epsilon(1e-12));
        cvec f(5);
        for (std::size_t i = 0; i < 5; ++i)
            f[i] = std::polar(1.0 / std::sqrt(5.0), s.angles[r.best_config[i]]);
        CHECK(min_snr_objective(p, f) == doctest::Approx(r.best_value).epsilon(1e-12));
    }
}

TEST_CASE("single-user oracle is the quantized matched filter")
{
    Rng rng(4);
    const auto s = quantized_angle_set(3);
    std::uniform_real_distribution<double> aod(-1.0, 1.0);
    for (int t = 0; t < 20; ++t)
    {
        const double phi = aod(rng);
        MultipathChannel ch;
        ch.n_antennas = 8;
        ch.los = {complex_gaussian(rng, 1.0), phi};
        const MulticastProblem p{{channel_vector(ch)}, {1.0}, 2.0};

        // phases of e^{j psi} u(8, phi) snapped to S by hand, best psi over a fine grid
        cvec f(8);
        double best_gain = -1.0;
        for (int r = 0; r < 20000; ++r)
        {
            const double psi = s.spacing() * (r + 0.5) / 20000.0;
            cvec g(8);
            cplx acc{};
            for (std::size_t i = 0; i < 8; ++i)
            {
                const double ph = pi * phi * double(i) + psi;
                double best_a = 0.0, best_d = 1e9;
                for (const double a : s.angles)
                {
                    const double d = std::abs(std::arg(std::exp(cplx(0.0, ph - a))));
                    if (d < best_d)
                    {
                        best_d = d;
                        best_a = a;
                    }
                }
                g[i] = std::polar(1.0 / std::sqrt(8.0), best_a);
                acc += std::exp(cplx(0.0, -pi * phi * double(i))) * g[i];
            }
            if (std::abs(acc) > best_gain)
            {
                best_gain = std::abs(acc);
                f = g;
            }
        }
        const double mf = min_snr_objective(p, f);
        CHECK(min_snr_objective(p, quantized_matched_filter(8, phi, s)) == doctest::Approx(mf).epsilon(1e-12));
        CHECK(exhaustive_beamformer_oracle(p, s).best_value == doctest::Approx(mf).epsilon(1e-12));
    }
}

TEST_CASE("factor oracle against nested loops")
{
    Rng rng(5);
    const auto t3 = quantized_angle_set(3);
    for (int t = 0; t < 30; ++t)
    {
        const auto users = random_users(3, rng);
        const auto l = allocate_subarrays(users, 16);
        const auto p = estimated_problem(users, 16, 1.0);
        double best = -1.0;
        for (const double a : t3.angles)
            for (const double b : t3.angles)
                best = std::max(best, min_snr_objective(p, assemble_beamformer(l, {a, b}, nullptr).f_rf));
        const auto r = exhaustive_factor_oracle(l, p, t3);
        CHECK(r.best_value == doctest::Approx(best).epsilon(1e-12));
        CHECK(r.evaluations == 64);
    }
}

TEST_CASE("ordering between oracles, algorithm 2 and the bound")
{
    Rng rng(6);
    const auto s3 = quantized_angle_set(3);
    const auto t3 = quantized_angle_set(3);
    MulticastConfig cfg;
    cfg.n_antennas = 8;
    cfg.entry_bits = 3;
    cfg.factor_bits = 3;
    for (int t = 0; t < 40; ++t)
    {
        const auto users = random_users(2, rng);
        const auto design = run_algorithm2(users, cfg);
        const auto p = estimated_problem(users, 8, 1.0);
        const auto oracle = exhaustive_beamformer_oracle(p, s3);
        const auto factor = exhaustive_factor_oracle(design.layout, p, t3, &s3);
        const double alg2 = min_snr_objective(p, design.f_rf);
        CHECK(oracle.best_value >= factor.best_value * (1.0 - 1e-12));
        CHECK(factor.best_value >= alg2 * (1.0 - 1e-12));
        CHECK(matched_filter_bound(p) >= oracle.best_value * (1.0 - 1e-12));
        CHECK(oracle.evaluations == 16777216);
    }
}

TEST_CASE("three-user sequential search is close to the joint optimum" * doctest::may_fail())
{
    Rng rng(7);
    const auto t3 = quantized_angle_set(3);
    int good = 0;
    const int instances = 500;
    for (int t = 0; t < instances; ++t)
    {
        const auto users = random_users(3, rng);
        const auto l = allocate_subarrays(users, 16);
        const auto p = estimated_problem(users, 16, 1.0);
        const auto pf = optimize_phase_factors(l, p, t3, 30);
        const auto r = exhaustive_factor_oracle(l, p, t3);
        CHECK(pf.objective <= r.best_value * (1.0 + 1e-12));
        good += pf.objective >= 0.95 * r.best_value;
    }
    MESSAGE("within 0.95 of the joint optimum: " << good << " of " << instances);
    CHECK(good >= 450);
}

TEST_CASE("matched-filter bound")
{
    MultipathChannel ch;
    ch.n_antennas = 32;
    ch.los = {{0.3, 0.4}, -1.0 + 9.0 / 32.0};
    const MulticastProblem p{{channel_vector(ch)}, {0.5}, 3.0};
    const double bound = matched_filter_bound(p);
    CHECK(bound == doctest::Approx(3.0 * 32.0 * 0.25 / 0.5));
    CHECK(min_snr_objective(p, steering_vector(32, ch.los.aod)) == doctest::Approx(bound));
}

TEST_CASE("ALTER-style baseline")
{
    const auto s6 = quantized_angle_set(6);
    Rng rng(8);

    SUBCASE("argument checks")
    {
        const auto p = los_problem(2, 8, rng);
        CHECK_THROWS_AS(alter_baseline(p, s6, 0), std::invalid_argument);
        CHECK_THROWS_AS(alter_baseline(p, s6, 21), std::invalid_argument);
        CHECK_THROWS_AS(alter_baseline(p, s6, 2, cvec(7)), std::invalid_argument);
    }
    SUBCASE("evaluation count and monotone rounds")
    {
        for (int t = 0; t < 20; ++t)
        {
            MulticastProblem p;
            for (int k = 0; k < 3; ++k)
            {
                p.channels.push_back(channel_vector(sample_channel(ChannelStats{}, 64, 2, rng)));
                p.noise_vars.push_back(1.0);
            }
            const auto d = alter_baseline(p, s6, 4);
            CHECK(d.eval_count == 64 * 64 * 4);
            CHECK(d.objective_history.size() == 4);
            for (std::size_t i = 1; i < d.objective_history.size(); ++i)
                CHECK(d.objective_history[i] >= d.objective_history[i - 1] * (1.0 - 1e-12));
            CHECK(d.method == "alter");
            for (const auto &v : d.f_rf)
                CHECK(std::abs(std::abs(v) - 0.125) < 1e-12);
            CHECK(min_snr_objective(p, d.f_rf) == doctest::Approx(d.objective_history.back()));
            CHECK(d.objective_history.back() <= matched_filter_bound(p) * (1.0 + 1e-12));

            // a single round from the default start never ends below the start
            const auto first = alter_baseline(p, s6, 1);
            std::size_t strongest = 0;
            for (std::size_t k = 1; k < 3; ++k)
                if (squared_norm(p.channels[k]) > squared_norm(p.channels[strongest]))
                    strongest = k;
            cvec start = p.channels[strongest];
            for (auto &v : start)
                v = std::polar(0.125, s6.snap(std::arg(v)));
            CHECK(first.objective_history[0] >= min_snr_objective(p, start) * (1.0 - 1e-12));
        }
    }
    SUBCASE("complexity figures")
    {
        CHECK(alter_complexity(64, 3, 2) == 24576);
        CHECK(algorithm2_complexity(4, 3, 30) == 960);
    }
}

TEST_CASE("ALTER-style baseline near the oracle at desk scale" * doctest::may_fail())
{
    Rng rng(8);
    const auto s3 = quantized_angle_set(3);
    int close = 0;
    for (int t = 0; t < 200; ++t)
    {
        const auto p = los_problem(2, 8, rng);
        const double oracle = exhaustive_beamformer_oracle(p, s3).best_value;
        const double alter = alter_baseline(p, s3, 5).objective_history.back();
        CHECK(alter <= oracle * (1.0 + 1e-12));
        close += to_db(oracle) - to_db(alter) <= 0.5;
    }
    MESSAGE("within 0.5 dB of the oracle: " << close << " of 200");
    CHECK(close >= 160);
}
