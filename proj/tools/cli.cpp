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

#include "cli.hpp"

#include "mmcast/experiment.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

namespace mmcast
{

namespace
{

struct CommonOptions
{
    std::string config = "default";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> n_antennas;
    std::optional<std::size_t> n_users;
    std::string out = ".";
    std::string cache;
    double snr_db = 18.0;
};

std::string fmt(const char *format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

ExperimentConfig resolve_config(const CommonOptions &opt, ExperimentKind kind)
{
    ExperimentConfig cfg = load_config(opt.config, kind);
    cfg.kind = kind;
    if (opt.seed)
        cfg.seed = *opt.seed;
    if (opt.trials)
        cfg.trials = *opt.trials;
    if (opt.threads)
        cfg.threads = *opt.threads;
    if (opt.n_antennas)
        cfg.n_antennas = *opt.n_antennas;
    if (opt.n_users)
        cfg.n_users = *opt.n_users;
    if (!opt.cache.empty())
        cfg.calibration_cache = opt.cache;
    if (cfg.calibration_cache.empty())
        cfg.calibration_cache = (std::filesystem::path(opt.out) / "calibration.jsonl").string();
    cfg.validate();
    return cfg;
}

std::vector<cvec> draw_true_channels(const ExperimentConfig &cfg, Rng &rng)
{
    ChannelStats stats;
    stats.los_variance = cfg.los_variance;
    stats.nlos_variances = cfg.nlos_variances;
    std::vector<cvec> hs;
    for (std::size_t k = 0; k < cfg.n_users; ++k)
        hs.push_back(channel_vector(sample_channel(stats, cfg.n_antennas, cfg.n_nlos, rng)));
    return hs;
}

std::vector<UserEstimate> estimate_users(const ExperimentConfig &cfg, const std::vector<cvec> &hs,
                                         const CompositeCalibration &calib, double power, Rng &rng,
                                         std::ostream &out)
{
    const Codebook cb = build_codebook(cfg.n_antennas);
    LinkParams link;
    link.power = power;
    link.noise_var = cfg.noise_var;
    std::vector<UserEstimate> users;
    for (std::size_t k = 0; k < hs.size(); ++k)
    {
        const GainEstimate est = run_algorithm1(hs[k], cb, link, calib, rng);
        users.push_back({est.est_gain, est.est_aod, std::sqrt(cfg.noise_var)});
        out << "user " << k << ": codeword " << est.best_index << ", est_aod " << fmt("%.6f", est.est_aod)
            << ", est_gain " << fmt("%.6f", est.est_gain) << '\n';
    }
    return users;
}

int run_campaign(const CommonOptions &opt, ExperimentKind kind, const std::string &name, std::ostream &out)
{
    const ExperimentConfig cfg = resolve_config(opt, kind);
    CalibrationCache cache(cfg.calibration_cache);
    const ExperimentResult res = run_experiment(cfg, cache);
    const auto prefix = std::filesystem::path(opt.out) / name;
    emit_results(res, prefix);
    out << "snr_db,method,mean,stderr,n\n";
    for (const auto &r : res.stats.rows)
        out << fmt("%g", r.snr_db) << ',' << r.method << ',' << fmt("%.6g", r.mean) << ','
            << fmt("%.3g", r.stderr_) << ',' << r.n << '\n';
    out << "wrote " << prefix.string() << "_aggregate.csv and " << prefix.string() << "_trials.jsonl\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Analog multicast beamforming: gain estimation, sub-array design and Monte Carlo campaigns"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonOptions opt;
    app.add_option("--config", opt.config, "Config file (JSON) or 'default'");
    app.add_option("--seed", opt.seed, "Master seed");
    app.add_option("--out", opt.out, "Output directory");
    app.add_option("--trials", opt.trials, "Number of Monte Carlo trials");
    app.add_option("--threads", opt.threads, "Worker threads");
    app.add_option("--cache", opt.cache, "Calibration cache file");

    auto *calibrate = app.add_subcommand("calibrate", "Compute (or refresh) the composite-beam calibration");
    std::size_t cal_n = 64, cal_q = 4000, cal_grid = 256;
    std::string cal_mode = "magnitude";
    calibrate->add_option("--n-antennas", cal_n, "Array size")->check(CLI::Range(2, 4096));
    calibrate->add_option("--q", cal_q, "Coverage samples Q")->check(CLI::Range(100, 1000000));
    calibrate->add_option("--grid", cal_grid, "Grid points per phase axis")->check(CLI::Range(16, 4096));
    calibrate->add_option("--mode", cal_mode, "Variance mode")->check(CLI::IsMember({"complex", "magnitude"}));

    auto *estimate = app.add_subcommand("estimate", "Single-instance channel gain estimation");
    auto *design = app.add_subcommand("design", "Single-instance multicast beamformer design");
    for (auto *sub : {estimate, design})
    {
        sub->add_option("--snr", opt.snr_db, "P/sigma^2 in dB");
        sub->add_option("--n-antennas", opt.n_antennas, "Override the array size");
        sub->add_option("--users", opt.n_users, "Override the number of users");
    }

    auto *fig1 = app.add_subcommand("fig1", "Gain-estimation error campaign");
    auto *fig2 = app.add_subcommand("fig2", "Minimum-SNR campaign");
    for (auto *sub : {fig1, fig2})
    {
        sub->add_option("--n-antennas", opt.n_antennas, "Override the array size");
        sub->add_option("--users", opt.n_users, "Override the number of users");
    }

    auto *oracle = app.add_subcommand("oracle", "Small-instance exhaustive checks");
    std::size_t or_n = 8, or_users = 2;
    unsigned or_bits = 3, or_factor_bits = 3;
    oracle->add_option("--n-antennas", or_n, "Array size");
    oracle->add_option("--users", or_users, "Number of users");
    oracle->add_option("--entry-bits", or_bits, "Phase-shifter resolution B");
    oracle->add_option("--factor-bits", or_factor_bits, "Phase-factor resolution M");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (calibrate->parsed())
        {
            const std::string path =
                opt.cache.empty() ? (std::filesystem::path(opt.out) / "calibration.jsonl").string() : opt.cache;
            CalibrationCache cache(path);
            const auto c = cache.refresh(cal_n, cal_q, cal_grid, variance_mode_from_string(cal_mode));
            out << "n_antennas " << c.n_antennas << ", q " << c.q_samples << ", mode " << to_string(c.variance_mode)
                << '\n'
                << "eta1 " << fmt("%.6f", c.eta1) << ", eta2 " << fmt("%.6f", c.eta2) << ", Z "
                << fmt("%.6f", c.z_norm) << ", ripple " << fmt("%.4f", composite_ripple(c, 20000)) << '\n'
                << "cache " << path << '\n';
            return 0;
        }

        if (estimate->parsed() || design->parsed())
        {
            const ExperimentConfig cfg = resolve_config(opt, ExperimentKind::min_snr);
            CalibrationCache cache(cfg.calibration_cache);
            const auto calib = cache.get(cfg.n_antennas, cfg.q_samples, cfg.calib_grid, cfg.variance_mode);
            const double power = cfg.noise_var * std::pow(10.0, opt.snr_db / 10.0);

            Rng rng(derive_seed(cfg.seed, 0, 0));
            const auto hs = draw_true_channels(cfg, rng);
            Rng noise(derive_seed(cfg.seed, 0, 1));
            const auto users = estimate_users(cfg, hs, calib, power, noise, out);
            if (estimate->parsed())
                return 0;

            MulticastConfig mc;
            mc.n_antennas = cfg.n_antennas;
            mc.entry_bits = cfg.entry_bits;
            mc.factor_bits = cfg.factor_bits;
            mc.i_max = cfg.i_max;
            mc.power = power;
            const BeamformerDesign d = run_algorithm2(users, mc);

            MulticastProblem truth;
            truth.channels = hs;
            truth.noise_vars.assign(hs.size(), cfg.noise_var);
            truth.power = power;

            std::size_t total = 0;
            out << "sizes";
            for (const std::size_t k : d.layout.order)
            {
                out << ' ' << d.layout.user_sizes[k];
                total += d.layout.user_sizes[k];
            }
            out << " (sum " << total << ")\nphase factors";
            for (const double t : d.phases.thetas)
                out << ' ' << fmt("%.4f", t);
            out << "\nsweeps " << d.phases.sweeps << ", evaluations " << d.eval_count << " (cap "
                << algorithm2_complexity(cfg.factor_bits, d.layout.subarrays.size(), cfg.i_max) << ")\n"
                << "min SNR design " << fmt("%.3f", 10.0 * std::log10(d.phases.objective)) << " dB, true "
                << fmt("%.3f", 10.0 * std::log10(min_snr_objective(truth, d.f_rf))) << " dB, bound "
                << fmt("%.3f", 10.0 * std::log10(matched_filter_bound(truth))) << " dB\n";
            return 0;
        }

        if (fig1->parsed())
            return run_campaign(opt, ExperimentKind::gain_error, "fig1", out);
        if (fig2->parsed())
            return run_campaign(opt, ExperimentKind::min_snr, "fig2", out);

        if (oracle->parsed())
        {
            const QuantizedAngleSet s_set = quantized_angle_set(or_bits);
            const double space_bits = static_cast<double>(or_n) * or_bits;
            if (space_bits > max_beamformer_search_bits)
            {
                err << "oracle: refusing N=" << or_n << " with B=" << or_bits << " (2^" << space_bits
                    << " candidates exceeds the 2^" << max_beamformer_search_bits << " budget)\n";
                return 1;
            }
            ExperimentConfig cfg = default_config(ExperimentKind::min_snr);
            cfg.n_antennas = or_n;
            cfg.n_users = or_users;
            if (opt.seed)
                cfg.seed = *opt.seed;
            cfg.validate();
            Rng rng(derive_seed(cfg.seed, 0, 0));
            const auto hs = draw_true_channels(cfg, rng);

            MulticastProblem truth;
            truth.channels = hs;
            truth.noise_vars.assign(hs.size(), cfg.noise_var);

            std::vector<UserEstimate> users;
            for (const auto &h : hs)
            {
                // noiseless LoS-direction estimate from the strongest codeword
                const Codebook cb = build_codebook(or_n);
                std::size_t best = 0;
                for (std::size_t i = 1; i < cb.size(); ++i)
                    if (std::abs(inner(h, cb.codewords[i])) > std::abs(inner(h, cb.codewords[best])))
                        best = i;
                users.push_back({std::abs(inner(h, cb.codewords[best])) / std::sqrt(double(or_n)),
                                 cb.centers[best], std::sqrt(cfg.noise_var)});
            }
            MulticastConfig mc;
            mc.n_antennas = or_n;
            mc.entry_bits = or_bits;
            mc.factor_bits = or_factor_bits;
            const BeamformerDesign d = run_algorithm2(users, mc);
            const OracleResult bf = exhaustive_beamformer_oracle(truth, s_set);
            const BeamformerDesign alter = alter_baseline(truth, s_set, 2);

            out << "exhaustive beamformer: " << fmt("%.4f", 10 * std::log10(bf.best_value)) << " dB over "
                << bf.evaluations << " candidates\n"
                << "algorithm2 (quantized): " << fmt("%.4f", 10 * std::log10(min_snr_objective(truth, d.f_rf)))
                << " dB\n"
                << "alter-style: " << fmt("%.4f", 10 * std::log10(min_snr_objective(truth, alter.f_rf))) << " dB\n"
                << "matched-filter bound: " << fmt("%.4f", 10 * std::log10(matched_filter_bound(truth))) << " dB\n";
            if (d.layout.n_factors() > 0)
            {
                const OracleResult fo =
                    exhaustive_factor_oracle(d.layout, estimated_problem(users, or_n, 1.0), quantized_angle_set(or_factor_bits));
                out << "sequential factors " << fmt("%.4f", 10 * std::log10(d.phases.objective))
                    << " dB vs joint factors " << fmt("%.4f", 10 * std::log10(fo.best_value)) << " dB ("
                    << fo.evaluations << " tuples)\n";
            }
            return 0;
        }
    }
    catch (const config_error &e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace mmcast
