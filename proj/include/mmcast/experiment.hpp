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

#ifndef MMCAST_EXPERIMENT_HPP
#define MMCAST_EXPERIMENT_HPP

#include "mmcast/multicast.hpp"
#include "mmcast/oracles.hpp"
#include "mmcast/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mmcast
{

enum class ExperimentKind
{
    gain_error,
    min_snr,
};

enum class EvaluationMode
{
    true_channel,
    estimated_channel,
};

/// Raised for configuration files or values that cannot be used.
class config_error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::gain_error;
    std::size_t n_antennas = 64;
    std::size_t n_users = 3;
    std::size_t n_nlos = 2;
    double los_variance = 1.0;
    std::vector<double> nlos_variances = {0.01, 0.01};
    double noise_var = 1.0;
    std::vector<double> snr_db = {0, 3, 6, 9, 12, 15, 18};
    std::size_t q_samples = 4000;
    std::size_t calib_grid = 256;
    VarianceMode variance_mode = VarianceMode::magnitude_variance;
    unsigned entry_bits = 6;  // B
    unsigned factor_bits = 4; // M
    std::size_t i_max = 30;
    std::size_t alter_iters = 2;
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    EvaluationMode eval_mode = EvaluationMode::true_channel;
    std::size_t threads = 1;
    std::string calibration_cache; // empty: in-memory only

    /// Throws config_error when a field is out of range.
    void validate() const;
};

/// Defaults for the given kind: 10^4 trials for gain-error and 10^3 for min-SNR campaigns.
ExperimentConfig default_config(ExperimentKind kind);

/// JSON object with any subset of the ExperimentConfig fields; missing fields keep their defaults.
/// The literal path "default" yields default_config(kind).
ExperimentConfig load_config(const std::string &path, ExperimentKind kind);
ExperimentConfig config_from_json(const std::string &text, ExperimentKind kind);
std::string config_to_json(const ExperimentConfig &cfg);

std::string to_string(ExperimentKind kind);
std::string to_string(EvaluationMode mode);

/// Counter-based stream derivation: the seed depends only on (master, a, b), never on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

struct TrialRecord
{
    std::size_t trial = 0;
    double snr_db = 0.0;
    std::uint64_t channel_seed = 0;
    std::uint64_t noise_seed = 0;
    std::vector<double> true_gains;
    std::vector<double> true_aods;
    std::vector<double> est_gains;
    std::vector<double> est_aods;
    double gain_error = 0.0;
    std::vector<std::size_t> sizes;
    std::vector<double> thetas;
    std::map<std::string, double> objectives; // linear min-SNR per method
    std::map<std::string, std::uint64_t> eval_counts;
};

struct AggregateRow
{
    double snr_db = 0.0;
    std::string metric;
    std::string method;
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

struct AggregateStats
{
    ExperimentKind kind = ExperimentKind::gain_error;
    std::vector<AggregateRow> rows;

    /// Row lookup; throws std::out_of_range when absent.
    const AggregateRow &at(double snr_db, const std::string &method) const;
};

struct ExperimentResult
{
    AggregateStats stats;
    std::vector<TrialRecord> trials; // ordered by (snr index, trial)
};

/// (1/K) sum_k | |alpha_hat_k| - |alpha_k| | / |alpha_k|
double relative_gain_error(const std::vector<double> &est, const std::vector<double> &truth);

/// Mean and standard error of the mean.
std::pair<double, double> mean_and_stderr(const std::vector<double> &values);

ExperimentResult run_gain_error_experiment(const ExperimentConfig &cfg, CalibrationCache &cache);

/// Methods: algorithm2, alter, mf_bound and, when |S|^N fits the oracle budget, oracle.
/// Algorithm 2 designs from Algorithm 1 estimates; the baselines get the true channels.
ExperimentResult run_minsnr_experiment(const ExperimentConfig &cfg, CalibrationCache &cache);

ExperimentResult run_experiment(const ExperimentConfig &cfg, CalibrationCache &cache);

/// Writes <prefix>_aggregate.csv (snr_db,metric,method,mean,stderr,n) and <prefix>_trials.jsonl.
/// Throws std::runtime_error naming the path on I/O failure.
void emit_results(const ExperimentResult &result, const std::filesystem::path &prefix);

std::string aggregate_csv(const AggregateStats &stats);
std::string trial_jsonl(const std::vector<TrialRecord> &trials);

} // namespace mmcast

#endif
