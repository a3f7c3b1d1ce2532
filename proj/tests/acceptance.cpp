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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "mmcast/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

using namespace mmcast;

namespace
{

int failures = 0;

void report(int id, const char *title, bool ok, const std::string &detail)
{
    std::printf("[%s] criterion %d: %s -- %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

template <typename... Args>
std::string fmt(const char *f, Args... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t worker_count()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<UserEstimate> random_users(std::size_t k, Rng &rng)
{
    std::uniform_real_distribution<double> gain(0.5, 1.5), aod(-1.0, 1.0), sigma(0.5, 2.0);
    std::vector<UserEstimate> users(k);
    for (auto &u : users)
        u = {gain(rng), aod(rng), sigma(rng)};
    return users;
}

CalibrationCache &shared_cache()
{
    static CalibrationCache cache;
    return cache;
}

void gain_estimation_accuracy()
{
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = default_config(ExperimentKind::gain_error);
    cfg.threads = worker_count();
    const auto res = run_gain_error_experiment(cfg, shared_cache());
    const double elapsed = seconds_since(t0);

    const auto &rows = res.stats.rows;
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
    {
        const double slack = 2.0 * std::hypot(rows[i].stderr_, rows[i - 1].stderr_);
        monotone = monotone && rows[i].mean <= rows[i - 1].mean + slack;
    }
    const double at18 = res.stats.at(18.0, "algorithm1").mean;
    std::string curve;
    for (const auto &r : rows)
        curve += fmt(" %g:%.4f", r.snr_db, r.mean);
    report(1, "gain-estimation accuracy", at18 >= 0.03 && at18 <= 0.10 && monotone && elapsed <= 300.0,
           fmt("error at 18 dB %.4f (band [0.03, 0.10]), monotone %s, %zu trials in %.1f s, curve", at18,
               monotone ? "yes" : "no", cfg.trials, elapsed) +
               curve);
}

void calibration_sanity()
{
    bool ok = true;
    std::string detail;
    for (const std::size_t n : {16u, 64u})
    {
        const auto &calib = shared_cache().get(n, 4000, 256, VarianceMode::magnitude_variance);
        const double r_max = composite_ripple(calib, 20000);
        const CompositeBeamDesigner d(n, 20000);
        const double r0 = d.ripple(0.0, 0.0, d.mean_magnitude(0.0, 0.0));

        const Codebook cb = build_codebook(n);
        LinkParams link;
        link.noise_var = 0.0;
        Rng rng(1);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i)
        {
            MultipathChannel ch;
            ch.n_antennas = n;
            ch.los = {{0.6, -0.8}, -1.0 + (2.0 * i + 1.0) / 1000.0};
            const GainEstimate est = run_algorithm1(channel_vector(ch), cb, link, calib, rng);
            worst = std::max(worst, std::abs(est.est_gain - 1.0));
        }
        ok = ok && r_max < r0 && worst <= r_max + 1e-12;
        detail += fmt("N=%zu ripple %.4f vs uncalibrated %.4f, worst noiseless error %.4f; ", n, r_max, r0, worst);
    }
    report(2, "calibration sanity", ok, detail);
}

void allocation_correctness()
{
    Rng rng(2);
    std::uniform_int_distribution<std::size_t> k_dist(2, 6);
    bool sums = true, positive = true, bounded = true;
    int checked = 0;
    for (int t = 0; t < 1000; ++t)
    {
        const auto users = random_users(k_dist(rng), rng);
        const auto l = allocate_subarrays(users, 64);
        std::size_t total = 0;
        for (const auto s : l.user_sizes)
        {
            total += s;
            positive = positive && s >= 1;
        }
        sums = sums && total == 64;
        if (l.clamped)
            continue;
        ++checked;
        const auto v = equal_snr_diagnostic(users, l);
        const double ratio = *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
        bounded = bounded && ratio <= rounding_ratio_bound(l) * (1.0 + 1e-12);
    }
    const std::vector<UserEstimate> fixture{{1.0, -0.5, 1.0}, {1.0, 0.1, 1.0}, {0.5, 0.6, 1.0}};
    const auto sizes = allocate_subarrays(fixture, 64).user_sizes;
    const bool fixture_ok = sizes == std::vector<std::size_t>{16, 16, 32};
    report(3, "allocation correctness", sums && positive && bounded && fixture_ok && checked > 0,
           fmt("sum=N %s, sizes>=1 %s, rounding bound %s on %d unclamped instances, fixture (%zu,%zu,%zu)",
               sums ? "yes" : "no", positive ? "yes" : "no", bounded ? "holds" : "violated", checked, sizes[0],
               sizes[1], sizes[2]));
}

void optimizer_contracts()
{
    Rng rng(3);
    const auto t4 = quantized_angle_set(4);
    std::uniform_int_distribution<std::size_t> k_dist(2, 5);
    int monotone = 0, counted = 0;
    const int instances = 1000;
    for (int t = 0; t < instances; ++t)
    {
        const auto users = random_users(k_dist(rng), rng);
        const auto l = allocate_subarrays(users, 64);
        const auto pf = optimize_phase_factors(l, estimated_problem(users, 64, 1.0), t4, 30);
        bool mono = true;
        for (std::size_t i = 1; i < pf.sweep_history.size(); ++i)
            mono = mono && pf.sweep_history[i] >= pf.sweep_history[i - 1];
        monotone += mono;
        const std::size_t cap = algorithm2_complexity(4, users.size(), 30);
        const std::size_t group_cap = algorithm2_complexity(4, l.subarrays.size(), 30);
        const bool count_ok = pf.eval_count <= cap && (pf.eval_count != group_cap || !pf.early_stop) &&
                              (pf.early_stop || pf.eval_count == group_cap);
        counted += count_ok;
    }
    const auto cap = algorithm2_complexity(4, 3, 30);
    report(4, "optimizer contracts", monotone == instances && counted == instances && cap == 960,
           fmt("monotone %d/%d, evaluation count contract %d/%d, cap at M=4 K=3 I_max=30 is %llu", monotone,
               instances, counted, instances, static_cast<unsigned long long>(cap)));
}

void oracle_equivalence()
{
    Rng rng(4);
    const auto t3 = quantized_angle_set(3);

    int k2_equal = 0;
    for (int t = 0; t < 500; ++t)
    {
        const auto users = random_users(2, rng);
        const auto l = allocate_subarrays(users, 8);
        const auto p = estimated_problem(users, 8, 1.0);
        const double seq = optimize_phase_factors(l, p, t3, 30).objective;
        const double joint = exhaustive_factor_oracle(l, p, t3).best_value;
        k2_equal += std::abs(seq - joint) <= 1e-12 * joint;
    }

    int k3_close = 0;
    for (int t = 0; t < 500; ++t)
    {
        const auto users = random_users(3, rng);
        const auto l = allocate_subarrays(users, 16);
        const auto p = estimated_problem(users, 16, 1.0);
        const double seq = optimize_phase_factors(l, p, t3, 30).objective;
        const double joint = exhaustive_factor_oracle(l, p, t3).best_value;
        k3_close += seq >= 0.95 * joint;
    }

    // quantized Algorithm 2 from Algorithm 1 estimates against the beamformer oracle on the true channels
    const auto s3 = quantized_angle_set(3);
    const auto &calib = shared_cache().get(8, 4000, 256, VarianceMode::magnitude_variance);
    const Codebook cb = build_codebook(8);
    LinkParams link;
    link.power = std::pow(10.0, 1.8);
    MulticastConfig mc;
    mc.n_antennas = 8;
    mc.entry_bits = 3;
    mc.factor_bits = 3;
    mc.power = link.power;
    int dominated = 0;
    const int oracle_instances = 100;
    for (int t = 0; t < oracle_instances; ++t)
    {
        MulticastProblem truth;
        truth.power = link.power;
        std::vector<UserEstimate> users;
        for (int k = 0; k < 2; ++k)
        {
            truth.channels.push_back(channel_vector(sample_channel(ChannelStats{}, 8, 2, rng)));
            truth.noise_vars.push_back(1.0);
            const auto est = run_algorithm1(truth.channels.back(), cb, link, calib, rng);
            users.push_back({est.est_gain, est.est_aod, 1.0});
        }
        const auto d = run_algorithm2(users, mc);
        dominated += min_snr_objective(truth, d.f_rf) <= exhaustive_beamformer_oracle(truth, s3).best_value * (1.0 + 1e-12);
    }

    report(5, "oracle equivalence at desk scale", k2_equal == 500 && k3_close >= 450 && dominated == oracle_instances,
           fmt("K=2 sequential equals joint %d/500; K=3 N=16 M=3 within 0.95 of joint %d/500 (need 450); "
               "algorithm 2 <= beamformer oracle %d/%d",
               k2_equal, k3_close, dominated, oracle_instances));
}

void baseline_gap()
{
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = default_config(ExperimentKind::min_snr);
    cfg.threads = worker_count();
    const auto res = run_minsnr_experiment(cfg, shared_cache());

    bool bounded = true;
    for (const auto &rec : res.trials)
    {
        const double bound = rec.objectives.at("mf_bound") * (1.0 + 1e-12);
        bounded = bounded && rec.objectives.at("algorithm2_true") <= bound && rec.objectives.at("alter") <= bound &&
                  rec.objectives.at("algorithm2_unquantized_true") <= bound;
    }
    double worst_gap = -1e9;
    std::string curve;
    for (const double snr : cfg.snr_db)
    {
        const double a2 = res.stats.at(snr, "algorithm2").mean;
        const double alter = res.stats.at(snr, "alter").mean;
        worst_gap = std::max(worst_gap, alter - a2);
        curve += fmt(" %g:%.2f/%.2f/%.2f", snr, a2, alter, res.stats.at(snr, "mf_bound").mean);
    }
    report(6, "baseline gap", worst_gap <= 1.5 && bounded,
           fmt("largest mean gap to ALTER-style %.2f dB (limit 1.5), all methods below the bound %s, %zu trials in "
               "%.1f s; dB algorithm2/alter/bound",
               worst_gap, bounded ? "yes" : "no", cfg.trials, seconds_since(t0)) +
               curve);
}

std::string slurp(const std::filesystem::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism()
{
    const auto dir = std::filesystem::temp_directory_path() / "mmcast_acceptance";
    std::filesystem::remove_all(dir);
    bool same = true;
    std::string detail;
    for (const auto kind : {ExperimentKind::gain_error, ExperimentKind::min_snr})
    {
        ExperimentConfig cfg = default_config(kind);
        cfg.trials = kind == ExperimentKind::gain_error ? 500 : 60;
        cfg.seed = 2026;
        for (const std::size_t threads : {1u, 4u})
        {
            cfg.threads = threads;
            emit_results(run_experiment(cfg, shared_cache()),
                         dir / (to_string(kind) + "_t" + std::to_string(threads)));
        }
        for (const char *suffix : {"_aggregate.csv", "_trials.jsonl"})
        {
            const auto a = slurp(dir / (to_string(kind) + "_t1" + suffix));
            const auto b = slurp(dir / (to_string(kind) + "_t4" + suffix));
            const bool eq = !a.empty() && a == b;
            same = same && eq;
            detail += to_string(kind) + suffix + (eq ? " identical; " : " differs; ");
        }
    }
    std::filesystem::remove_all(dir);
    report(7, "determinism", same, detail + "serial vs 4 threads");
}

} // namespace

int main()
{
    gain_estimation_accuracy();
    calibration_sanity();
    allocation_correctness();
    optimizer_contracts();
    oracle_equivalence();
    baseline_gap();
    determinism();
    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
