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

#ifndef MMCAST_TRAINING_HPP
#define MMCAST_TRAINING_HPP

#include "mmcast/channel.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>

namespace mmcast
{

// DFT codebook. Codeword n (1-based) is u(N, -1 + (2n-1)/N) and covers
// [-1 + 2(n-1)/N, -1 + 2n/N].
struct Codebook
{
    std::size_t n_antennas = 0;
    std::vector<cvec> codewords;
    std::vector<double> centers;

    std::size_t size() const { return codewords.size(); }
};

/// Throws std::invalid_argument for n_antennas < 2.
Codebook build_codebook(std::size_t n_antennas);

/// Center of codeword `index` (1-based).
double codeword_center(std::size_t n_antennas, std::size_t index);

struct SweepOutcome
{
    std::size_t best_index = 0; // 1-based
    cplx y_center{};            // sample retained for the best codeword
    double est_aod = 0.0;
};

/// Exhaustive beam sweep. Every codeword test draws its own noise sample, ties go to the lowest index.
SweepOutcome beam_sweep(std::span<const cplx> h, const Codebook &cb, const LinkParams &link, Rng &rng);

struct TrainingTriple
{
    cplx y_center{};
    cplx y_left{};
    cplx y_right{};
};

/// Left and right neighbour codewords of the codeword centered at `center_aod`.
/// At the band edges the spatial frequency wraps modulo 2.
cvec left_neighbor(std::size_t n_antennas, double center_aod);
cvec right_neighbor(std::size_t n_antennas, double center_aod);

/// Two extra training tests with the neighbours of the best codeword; `y_center` is the
/// sample retained from the sweep.
TrainingTriple neighbor_training(std::span<const cplx> h, double est_aod, cplx y_center, const LinkParams &link,
                                 Rng &rng);

/// g(aod) = sqrt(N) u(N, aod)^H (f_C + e^{j eta1} f_L + e^{j eta2} f_R), f_C centered at `center_aod`.
cplx composite_gain(double aod, double eta1, double eta2, double center_aod, std::size_t n_antennas);

enum class VarianceMode
{
    complex_variance,   // mean |g - mean(g)|^2
    magnitude_variance, // variance of |g|
};

std::string to_string(VarianceMode mode);
VarianceMode variance_mode_from_string(const std::string &name);

struct CompositeCalibration
{
    std::size_t n_antennas = 0;
    std::size_t q_samples = 0;
    std::size_t grid_size = 0;
    VarianceMode variance_mode = VarianceMode::magnitude_variance;
    double eta1 = 0.0;
    double eta2 = 0.0;
    double z_norm = 0.0;
    double objective = 0.0; // variance at (eta1, eta2)
};

// Off-line composite beam design on the reference layout f_1, f_2, f_3 (center -1 + 3/N).
// The coverage [center - 2/N, center + 2/N] is sampled at Q points
// center - 2/N + 4q/(NQ), q = 1..Q.
class CompositeBeamDesigner
{
  public:
    CompositeBeamDesigner(std::size_t n_antennas, std::size_t q_samples);

    std::size_t n_antennas() const { return n_antennas_; }
    std::size_t q_samples() const { return q_samples_; }
    double center_aod() const;
    double sample_aod(std::size_t q) const; // q = 1..Q

    double objective(double eta1, double eta2, VarianceMode mode) const;

    /// Z = (1/Q) sum_q |g(sample_q, eta1, eta2)|.
    double mean_magnitude(double eta1, double eta2) const;

    /// max_q | |g(sample_q)| / z - 1 | over the coverage samples.
    double ripple(double eta1, double eta2, double z) const;

  private:
    std::size_t n_antennas_;
    std::size_t q_samples_;
    // per-sample gains of the center, left and right codewords
    cvec gc_, gl_, gr_;
    // moments used by the closed-form complex variance
    cplx mean_c_{}, mean_l_{}, mean_r_{};
    double pow_c_ = 0.0, pow_l_ = 0.0, pow_r_ = 0.0;
    cplx cross_cl_{}, cross_cr_{}, cross_lr_{};
};

/// 2-D grid search of (eta1, eta2) over (-pi, pi]^2 followed by one refinement pass at 10x
/// resolution around the best cell. Requires q_samples >= 100 and grid_size >= 16.
CompositeCalibration calibrate_composite(std::size_t n_antennas, std::size_t q_samples, std::size_t grid_size = 256,
                                         VarianceMode mode = VarianceMode::magnitude_variance);

/// Z for fixed phases.
double compute_z(std::size_t n_antennas, double eta1, double eta2, std::size_t q_samples);

/// Worst relative deviation of |g| from Z over the coverage, evaluated on `grid_points` samples.
double composite_ripple(const CompositeCalibration &calib, std::size_t grid_points);

/// |alpha_hat| = |(y_C + e^{j eta1} y_L + e^{j eta2} y_R) / (s Z sqrt(P))|. Throws for P <= 0.
double estimate_gain(const TrainingTriple &triple, const CompositeCalibration &calib, const LinkParams &link);

struct GainEstimate
{
    double est_gain = 0.0;
    double est_aod = 0.0;
    std::size_t best_index = 0;
};

/// Beam sweep, AoD estimate, neighbour training and gain estimate for one user.
GainEstimate run_algorithm1(std::span<const cplx> h, const Codebook &cb, const LinkParams &link,
                            const CompositeCalibration &calib, Rng &rng);

// Calibration table persisted as one JSON object per line:
// {"n_antennas":64,"q_samples":4000,"grid_size":256,"mode":"complex","eta1":...,"eta2":...,"z_norm":...}
// Lookups are shared, inserts take the exclusive lock and rewrite the file.
class CalibrationCache
{
  public:
    CalibrationCache() = default;
    explicit CalibrationCache(std::filesystem::path file);

    /// Returns the cached record or computes, stores and persists it.
    CompositeCalibration get(std::size_t n_antennas, std::size_t q_samples, std::size_t grid_size,
                             VarianceMode mode);

    /// Recompute unconditionally and overwrite the record.
    CompositeCalibration refresh(std::size_t n_antennas, std::size_t q_samples, std::size_t grid_size,
                                 VarianceMode mode);

    std::size_t size() const;
    const std::filesystem::path &file() const { return file_; }

  private:
    using Key = std::tuple<std::size_t, std::size_t, std::size_t, VarianceMode>;

    void load();
    void store(const CompositeCalibration &calib);

    std::filesystem::path file_;
    mutable std::shared_mutex mutex_;
    std::map<Key, CompositeCalibration> records_;
};

} // namespace mmcast

#endif
