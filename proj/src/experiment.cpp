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

#include "mmcast/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <type_traits>

namespace mmcast
{

using json = nlohmann::ordered_json;

// --- config ---------------------------------------------------------------------

std::string to_string(ExperimentKind kind)
{
    return kind == ExperimentKind::gain_error ? "gain-error" : "min-snr";
}

std::string to_string(EvaluationMode mode)
{
    return mode == EvaluationMode::true_channel ? "true" : "estimated";
}

void ExperimentConfig::validate() const
{
    auto fail = [](const std::string &msg) { throw config_error("Invalid configuration: " + msg); };
    if (n_antennas < 2)
        fail("n_antennas must be at least 2");
    if (n_users < 1)
        fail("n_users must be at least 1");
    if (n_users > n_antennas)
        fail("n_users cannot exceed n_antennas");
    if (los_variance <= 0.0)
        fail("los_variance must be positive");
    for (const double v : nlos_variances)
        if (v < 0.0 || !std::isfinite(v))
            fail("nlos_variances must be finite and non-negative");
    if (nlos_variances.size() != n_nlos)
        fail("nlos_variances must have n_nlos entries");
    if (!(noise_var > 0.0))
        fail("noise_var must be positive");
    if (snr_db.empty())
        fail("snr_db grid is empty");
    if (q_samples < 100)
        fail("q_samples must be at least 100");
    if (calib_grid < 16)
        fail("calib_grid must be at least 16");
    if (entry_bits < 1 || entry_bits > 16 || factor_bits < 1 || factor_bits > 16)
        fail("entry_bits and factor_bits must be in [1, 16]");
    if (i_max < 1)
        fail("i_max must be at least 1");
    if (alter_iters < 1 || alter_iters > 20)
        fail("alter_iters must be in [1, 20]");
    if (trials < 1)
        fail("trials must be at least 1");
    if (threads < 1)
        fail("threads must be at least 1");
}

ExperimentConfig default_config(ExperimentKind kind)
{
    ExperimentConfig cfg;
    cfg.kind = kind;
    cfg.trials = kind == ExperimentKind::gain_error ? 10000 : 1000;
    return cfg;
}

ExperimentConfig config_from_json(const std::string &text, ExperimentKind kind)
{
    ExperimentConfig cfg = default_config(kind);
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw config_error(std::string("Config is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw config_error("Config must be a JSON object.");

    static const char *known[] = {"kind",        "n_antennas",  "n_users",     "n_nlos",         "los_variance",
                                  "nlos_variances", "noise_var", "snr_db",     "q_samples",      "calib_grid",
                                  "variance_mode", "entry_bits", "factor_bits", "i_max",         "alter_iters",
                                  "trials",      "seed",        "eval_mode",   "threads",        "calibration_cache"};
    for (const auto &[key, value] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char *k) { return key == k; }) ==
            std::end(known))
            throw config_error("Unknown config field '" + key + "'.");

    try
    {
        if (j.contains("kind"))
        {
            const auto k = j["kind"].get<std::string>();
            if (k == "gain-error")
                cfg.kind = ExperimentKind::gain_error;
            else if (k == "min-snr")
                cfg.kind = ExperimentKind::min_snr;
            else
                throw config_error("Unknown experiment kind '" + k + "'.");
            if (cfg.kind != kind && !j.contains("trials"))
                cfg.trials = default_config(cfg.kind).trials;
        }
        auto read = [&](const char *key, auto &field)
        {
            using T = std::decay_t<decltype(field)>;
            if (!j.contains(key))
                return;
            if constexpr (std::is_unsigned_v<T>)
                if (!j[key].is_number_unsigned())
                    throw config_error(std::string("Config field '") + key + "' must be a non-negative integer.");
            field = j[key].get<T>();
        };
        read("n_antennas", cfg.n_antennas);
        read("n_users", cfg.n_users);
        read("n_nlos", cfg.n_nlos);
        read("los_variance", cfg.los_variance);
        read("nlos_variances", cfg.nlos_variances);
        read("noise_var", cfg.noise_var);
        read("snr_db", cfg.snr_db);
        read("q_samples", cfg.q_samples);
        read("calib_grid", cfg.calib_grid);
        read("entry_bits", cfg.entry_bits);
        read("factor_bits", cfg.factor_bits);
        read("i_max", cfg.i_max);
        read("alter_iters", cfg.alter_iters);
        read("trials", cfg.trials);
        read("seed", cfg.seed);
        read("threads", cfg.threads);
        read("calibration_cache", cfg.calibration_cache);
        if (j.contains("variance_mode"))
            cfg.variance_mode = variance_mode_from_string(j["variance_mode"].get<std::string>());
        if (j.contains("eval_mode"))
        {
            const auto m = j["eval_mode"].get<std::string>();
            if (m == "true")
                cfg.eval_mode = EvaluationMode::true_channel;
            else if (m == "estimated")
                cfg.eval_mode = EvaluationMode::estimated_channel;
            else
                throw config_error("Unknown eval_mode '" + m + "'.");
        }
    }
    catch (const json::exception &e)
    {
        throw config_error(std::string("Config field has the wrong type: ") + e.what());
    }
    catch (const std::invalid_argument &e)
    {
        throw config_error(e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string &path, ExperimentKind kind)
{
    if (path.empty() || path == "default")
        return default_config(kind);
    std::ifstream in(path);
    if (!in)
        throw config_error("Cannot open config file '" + path + "'.");
    std::stringstream ss;
    ss << in.rdbuf();
    try
    {
        return config_from_json(ss.str(), kind);
    }
    catch (const config_error &e)
    {
        throw config_error(path + ": " + e.what());
    }
}

std::string config_to_json(const ExperimentConfig &cfg)
{
    json j;
    j["kind"] = to_string(cfg.kind);
    j["n_antennas"] = cfg.n_antennas;
    j["n_users"] = cfg.n_users;
    j["n_nlos"] = cfg.n_nlos;
    j["los_variance"] = cfg.los_variance;
    j["nlos_variances"] = cfg.nlos_variances;
    j["noise_var"] = cfg.noise_var;
    j["snr_db"] = cfg.snr_db;
    j["q_samples"] = cfg.q_samples;
    j["calib_grid"] = cfg.calib_grid;
    j["variance_mode"] = to_string(cfg.variance_mode);
    j["entry_bits"] = cfg.entry_bits;
    j["factor_bits"] = cfg.factor_bits;
    j["i_max"] = cfg.i_max;
    j["alter_iters"] = cfg.alter_iters;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["eval_mode"] = to_string(cfg.eval_mode);
    j["threads"] = cfg.threads;
    j["calibration_cache"] = cfg.calibration_cache;
    return j.dump(2);
}

// --- helpers ----------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b)
{
    // splitmix64 finaliser applied to a mixed counter
    auto mix = [](std::uint64_t z)
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

double relative_gain_error(const std::vector<double> &est, const std::vector<double> &truth)
{
    if (est.size() != truth.size() || truth.empty())
        throw std::invalid_argument("relative_gain_error: vectors must be non-empty and of equal length.");
    double acc = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k)
        acc += std::abs(est[k] - truth[k]) / truth[k];
    return acc / static_cast<double>(truth.size());
}

std::pair<double, double> mean_and_stderr(const std::vector<double> &values)
{
    if (values.empty())
        return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const double v : values)
        sum += v;
    const double mean = sum / n;
    if (values.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (const double v : values)
        ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

const AggregateRow &AggregateStats::at(double snr_db, const std::string &method) const
{
    for (const auto &r : rows)
        if (r.snr_db == snr_db && r.method == method)
            return r;
    throw std::out_of_range("No aggregate row for method '" + method + "' at " + std::to_string(snr_db) + " dB.");
}

namespace
{

// Runs body(index) for index in [0, count) on `threads` workers. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body body)
{
    if (threads <= 1 || count <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t)
        pool.emplace_back(
            [&]
            {
                for (std::size_t i = next++; i < count; i = next++)
                {
                    try
                    {
                        body(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                    }
                }
            });
    for (auto &th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

double to_db(double linear)
{
    return 10.0 * std::log10(std::max(linear, 1e-300));
}

ChannelStats stats_of(const ExperimentConfig &cfg)
{
    ChannelStats s;
    s.los_variance = cfg.los_variance;
    s.nlos_variances = cfg.nlos_variances;
    return s;
}

struct TrialChannels
{
    std::vector<MultipathChannel> paths;
    std::vector<cvec> vectors;
};

TrialChannels draw_channels(const ExperimentConfig &cfg, std::uint64_t seed)
{
    Rng rng(seed);
    TrialChannels tc;
    const ChannelStats stats = stats_of(cfg);
    for (std::size_t k = 0; k < cfg.n_users; ++k)
    {
        tc.paths.push_back(sample_channel(stats, cfg.n_antennas, cfg.n_nlos, rng));
        tc.vectors.push_back(channel_vector(tc.paths.back()));
    }
    return tc;
}

void fill_truth(TrialRecord &rec, const TrialChannels &tc)
{
    for (const auto &p : tc.paths)
    {
        rec.true_gains.push_back(std::abs(p.los.coeff));
        rec.true_aods.push_back(p.los.aod);
    }
}

double power_of(const ExperimentConfig &cfg, double snr_db)
{
    return cfg.noise_var * std::pow(10.0, snr_db / 10.0);
}

struct Baselines
{
    double alter = 0.0;
    double mf_bound = 0.0;
    double oracle = 0.0;
    std::uint64_t alter_evals = 0;
    std::uint64_t oracle_evals = 0;
};

Baselines solve_baselines(const ExperimentConfig &cfg, const TrialChannels &tc, const QuantizedAngleSet &s_set,
                          bool with_oracle)
{
    MulticastProblem unit;
    unit.channels = tc.vectors;
    unit.noise_vars.assign(cfg.n_users, cfg.noise_var);
    unit.power = 1.0;

    Baselines b;
    const BeamformerDesign alter = alter_baseline(unit, s_set, cfg.alter_iters);
    b.alter = min_snr_objective(unit, alter.f_rf);
    b.alter_evals = alter.eval_count;
    b.mf_bound = matched_filter_bound(unit);
    if (with_oracle)
    {
        const OracleResult oracle = exhaustive_beamformer_oracle(unit, s_set);
        b.oracle = oracle.best_value;
        b.oracle_evals = oracle.evaluations;
    }
    return b;
}

} // namespace

// --- experiments --------------------------------------------------------------------

ExperimentResult run_gain_error_experiment(const ExperimentConfig &cfg, CalibrationCache &cache)
{
    cfg.validate();
    const CompositeCalibration calib = cache.get(cfg.n_antennas, cfg.q_samples, cfg.calib_grid, cfg.variance_mode);
    const Codebook cb = build_codebook(cfg.n_antennas);
    const std::size_t n_snr = cfg.snr_db.size();

    ExperimentResult result;
    result.stats.kind = ExperimentKind::gain_error;
    result.trials.resize(n_snr * cfg.trials);

    parallel_for(cfg.trials, cfg.threads,
                 [&](std::size_t trial)
                 {
                     const std::uint64_t channel_seed = derive_seed(cfg.seed, trial, 0);
                     const TrialChannels tc = draw_channels(cfg, channel_seed);
                     for (std::size_t s = 0; s < n_snr; ++s)
                     {
                         TrialRecord &rec = result.trials[s * cfg.trials + trial];
                         rec.trial = trial;
                         rec.snr_db = cfg.snr_db[s];
                         rec.channel_seed = channel_seed;
                         rec.noise_seed = derive_seed(cfg.seed, trial, s + 1);
                         fill_truth(rec, tc);

                         LinkParams link;
                         link.power = power_of(cfg, cfg.snr_db[s]);
                         link.noise_var = cfg.noise_var;
                         Rng rng(rec.noise_seed);
                         for (const auto &h : tc.vectors)
                         {
                             const GainEstimate est = run_algorithm1(h, cb, link, calib, rng);
                             rec.est_gains.push_back(est.est_gain);
                             rec.est_aods.push_back(est.est_aod);
                         }
                         rec.gain_error = relative_gain_error(rec.est_gains, rec.true_gains);
                     }
                 });

    for (std::size_t s = 0; s < n_snr; ++s)
    {
        std::vector<double> errs;
        errs.reserve(cfg.trials);
        for (std::size_t t = 0; t < cfg.trials; ++t)
            errs.push_back(result.trials[s * cfg.trials + t].gain_error);
        const auto [mean, se] = mean_and_stderr(errs);
        result.stats.rows.push_back({cfg.snr_db[s], "gain_error", "algorithm1", mean, se, errs.size()});
    }
    return result;
}

ExperimentResult run_minsnr_experiment(const ExperimentConfig &cfg, CalibrationCache &cache)
{
    cfg.validate();
    const CompositeCalibration calib = cache.get(cfg.n_antennas, cfg.q_samples, cfg.calib_grid, cfg.variance_mode);
    const Codebook cb = build_codebook(cfg.n_antennas);
    const QuantizedAngleSet s_set = quantized_angle_set(cfg.entry_bits);
    const std::size_t n_snr = cfg.snr_db.size();
    const bool with_oracle = static_cast<double>(cfg.n_antennas) * cfg.entry_bits <= max_beamformer_search_bits;

    std::vector<std::string> methods = {"algorithm2", "alter", "mf_bound"};
    if (with_oracle)
        methods.push_back("oracle");

    ExperimentResult result;
    result.stats.kind = ExperimentKind::min_snr;
    result.trials.resize(n_snr * cfg.trials);

    parallel_for(cfg.trials, cfg.threads,
                 [&](std::size_t trial)
                 {
                     const std::uint64_t channel_seed = derive_seed(cfg.seed, trial, 0);
                     const TrialChannels tc = draw_channels(cfg, channel_seed);
                     // perfect-CSI baselines are scale invariant in P: solve once at unit power
                     const Baselines base = solve_baselines(cfg, tc, s_set, with_oracle);
                     for (std::size_t s = 0; s < n_snr; ++s)
                     {
                         TrialRecord &rec = result.trials[s * cfg.trials + trial];
                         rec.trial = trial;
                         rec.snr_db = cfg.snr_db[s];
                         rec.channel_seed = channel_seed;
                         rec.noise_seed = derive_seed(cfg.seed, trial, s + 1);
                         fill_truth(rec, tc);

                         LinkParams link;
                         link.power = power_of(cfg, cfg.snr_db[s]);
                         link.noise_var = cfg.noise_var;
                         Rng rng(rec.noise_seed);

                         std::vector<UserEstimate> users;
                         for (const auto &h : tc.vectors)
                         {
                             const GainEstimate est = run_algorithm1(h, cb, link, calib, rng);
                             rec.est_gains.push_back(est.est_gain);
                             rec.est_aods.push_back(est.est_aod);
                             users.push_back({est.est_gain, est.est_aod, std::sqrt(cfg.noise_var)});
                         }
                         rec.gain_error = relative_gain_error(rec.est_gains, rec.true_gains);

                         MulticastConfig mc;
                         mc.n_antennas = cfg.n_antennas;
                         mc.entry_bits = cfg.entry_bits;
                         mc.factor_bits = cfg.factor_bits;
                         mc.i_max = cfg.i_max;
                         mc.power = link.power;
                         mc.quantize = true;
                         const BeamformerDesign design = run_algorithm2(users, mc);
                         for (const std::size_t k : design.layout.order)
                             rec.sizes.push_back(design.layout.user_sizes[k]);
                         rec.thetas = design.phases.thetas;

                         MulticastProblem truth;
                         truth.channels = tc.vectors;
                         truth.noise_vars.assign(cfg.n_users, cfg.noise_var);
                         truth.power = link.power;
                         const MulticastProblem estimated = estimated_problem(users, cfg.n_antennas, link.power);

                         const double alg2_true = min_snr_objective(truth, design.f_rf);
                         const double alg2_est = min_snr_objective(estimated, design.f_rf);
                         rec.objectives["algorithm2"] =
                             cfg.eval_mode == EvaluationMode::true_channel ? alg2_true : alg2_est;
                         rec.objectives["algorithm2_true"] = alg2_true;
                         rec.objectives["algorithm2_estimated"] = alg2_est;
                         rec.objectives["algorithm2_design"] = design.phases.objective;
                         rec.objectives["algorithm2_unquantized_true"] = min_snr_objective(truth, design.f_unquantized);
                         rec.eval_counts["algorithm2"] = design.eval_count;

                         rec.objectives["alter"] = link.power * base.alter;
                         rec.eval_counts["alter"] = base.alter_evals;
                         rec.objectives["mf_bound"] = link.power * base.mf_bound;
                         if (with_oracle)
                         {
                             rec.objectives["oracle"] = link.power * base.oracle;
                             rec.eval_counts["oracle"] = base.oracle_evals;
                         }
                     }
                 });

    for (std::size_t s = 0; s < n_snr; ++s)
    {
        for (const auto &m : methods)
        {
            std::vector<double> vals;
            vals.reserve(cfg.trials);
            for (std::size_t t = 0; t < cfg.trials; ++t)
                vals.push_back(to_db(result.trials[s * cfg.trials + t].objectives.at(m)));
            const auto [mean, se] = mean_and_stderr(vals);
            result.stats.rows.push_back({cfg.snr_db[s], "min_snr_db", m, mean, se, vals.size()});
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig &cfg, CalibrationCache &cache)
{
    return cfg.kind == ExperimentKind::gain_error ? run_gain_error_experiment(cfg, cache)
                                                  : run_minsnr_experiment(cfg, cache);
}

// --- output -------------------------------------------------------------------------

namespace
{

std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string aggregate_csv(const AggregateStats &stats)
{
    std::string out = "snr_db,metric,method,mean,stderr,n\n";
    for (const auto &r : stats.rows)
    {
        out += fmt_double(r.snr_db) + ',' + r.metric + ',' + r.method + ',' + fmt_double(r.mean) + ',' +
               fmt_double(r.stderr_) + ',' + std::to_string(r.n) + '\n';
    }
    return out;
}

std::string trial_jsonl(const std::vector<TrialRecord> &trials)
{
    std::string out;
    for (const auto &t : trials)
    {
        json j;
        j["trial"] = t.trial;
        j["snr_db"] = t.snr_db;
        j["channel_seed"] = t.channel_seed;
        j["noise_seed"] = t.noise_seed;
        j["true_gains"] = t.true_gains;
        j["true_aods"] = t.true_aods;
        j["est_gains"] = t.est_gains;
        j["est_aods"] = t.est_aods;
        j["gain_error"] = t.gain_error;
        if (!t.sizes.empty())
            j["sizes"] = t.sizes;
        if (!t.thetas.empty())
            j["thetas"] = t.thetas;
        if (!t.objectives.empty())
            j["objectives"] = t.objectives;
        if (!t.eval_counts.empty())
            j["eval_counts"] = t.eval_counts;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void emit_results(const ExperimentResult &result, const std::filesystem::path &prefix)
{
    auto write = [](const std::filesystem::path &path, const std::string &content)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("Cannot open '" + path.string() + "' for writing.");
        out << content;
        out.close();
        if (!out)
            throw std::runtime_error("Failed writing '" + path.string() + "'.");
    };

    if (prefix.has_parent_path())
    {
        std::error_code ec;
        std::filesystem::create_directories(prefix.parent_path(), ec);
        if (ec)
            throw std::runtime_error("Cannot create directory '" + prefix.parent_path().string() + "': " +
                                     ec.message());
    }
    write(prefix.string() + "_aggregate.csv", aggregate_csv(result.stats));
    write(prefix.string() + "_trials.jsonl", trial_jsonl(result.trials));
}

} // namespace mmcast
