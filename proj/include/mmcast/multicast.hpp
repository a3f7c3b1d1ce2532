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

#ifndef MMCAST_MULTICAST_HPP
#define MMCAST_MULTICAST_HPP

#include "mmcast/channel.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmcast
{

/// Raised when a user's estimated gain is zero and the sub-array allocation is undefined.
class degenerate_user_error : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

// Uniform phase alphabet {pi(-1 + (2m-1)/2^bits), m = 1..2^bits}.
// Used both for the entry phases of the phase shifters and for the sub-array phase factors.
struct QuantizedAngleSet
{
    unsigned bits = 0;
    std::vector<double> angles;

    std::size_t size() const { return angles.size(); }
    double spacing() const { return 2.0 * pi / static_cast<double>(angles.size()); }

    /// Index of the member closest to `phase` on the circle; ties go to the smaller angle.
    std::size_t nearest_index(double phase) const;
    double snap(double phase) const { return angles[nearest_index(phase)]; }
};

/// Throws std::invalid_argument unless 1 <= bits <= 16.
QuantizedAngleSet quantized_angle_set(unsigned bits);

struct UserEstimate
{
    double est_gain = 0.0;  // |alpha_hat|
    double est_aod = 0.0;   // phi_hat
    double noise_std = 1.0; // sigma
};

// One contiguous block of the array, steered to `aod`. Users whose estimated AoDs coincide
// share one block; its size is the sum of their allocations.
struct SubArray
{
    double aod = 0.0;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::vector<std::size_t> members; // user indices
};

struct SubArrayLayout
{
    std::size_t n_antennas = 0;
    std::vector<std::size_t> order;      // user indices sorted by ascending AoD
    std::vector<std::size_t> user_sizes; // N_k, indexed by user
    std::vector<SubArray> subarrays;     // in ascending AoD order
    bool clamped = false;                // a rounded size had to be lifted to 1

    std::size_t n_users() const { return user_sizes.size(); }
    std::size_t n_factors() const { return subarrays.empty() ? 0 : subarrays.size() - 1; }
};

/// Sub-array sizes N_k proportional to sigma_k / |alpha_hat_k|, rounded for all but the last
/// user in sorted order, which takes the remainder. Sizes below 1 are lifted to 1 with the deficit
/// taken from the largest sub-array.
SubArrayLayout allocate_subarrays(const std::vector<UserEstimate> &users, std::size_t n_antennas);

/// w[i] = exp(j i pi aod) / sqrt(n_antennas), i = 0..size-1.
cvec subarray_weight(std::size_t size, double aod, std::size_t n_antennas);

struct PhaseFactors
{
    std::vector<double> thetas;
    std::vector<std::size_t> indices;   // positions in the factor alphabet
    double objective = 0.0;             // best min-SNR (gamma)
    std::vector<double> sweep_history;  // min-SNR after each completed sweep
    std::size_t eval_count = 0;
    std::size_t sweeps = 0;
    bool early_stop = false;            // a sweep without improvement ended the loop before i_max
};

struct BeamformerDesign
{
    std::string method;
    cvec f_rf;
    cvec f_unquantized;
    SubArrayLayout layout;
    PhaseFactors phases;
    bool quantized = false;
    std::size_t eval_count = 0;
    std::vector<double> objective_history;
};

/// f = [w_1; e^{j theta_1} w_2; ...]. With an entry set every phase is snapped to its nearest member.
/// Throws std::invalid_argument if thetas.size() != layout.n_factors().
BeamformerDesign assemble_beamformer(const SubArrayLayout &layout, const std::vector<double> &thetas,
                                     const QuantizedAngleSet *entry_set);

// Channels seen by the design or the evaluation, with the per-user noise variance and the
// common transmit power.
struct MulticastProblem
{
    std::vector<cvec> channels;
    std::vector<double> noise_vars;
    double power = 1.0;

    std::size_t n_users() const { return channels.size(); }
};

/// LoS-only estimate sqrt(N) |alpha_hat| u(N, phi_hat).
cvec estimated_channel(const UserEstimate &user, std::size_t n_antennas);

/// Problem built from the estimated channels.
MulticastProblem estimated_problem(const std::vector<UserEstimate> &users, std::size_t n_antennas, double power);

std::vector<double> user_snrs(const MulticastProblem &problem, std::span<const cplx> f);

/// min_k P |h_k^H f|^2 / sigma_k^2
double min_snr_objective(const MulticastProblem &problem, std::span<const cplx> f);

// Min-SNR as a function of the phase factors for a fixed layout. Each user's response is
// precomputed per sub-array so one evaluation costs O(K * G).
class FactorObjective
{
  public:
    FactorObjective(const SubArrayLayout &layout, const MulticastProblem &problem);

    double operator()(std::span<const double> thetas) const;
    std::size_t n_factors() const { return n_groups_ == 0 ? 0 : n_groups_ - 1; }

  private:
    std::size_t n_users_ = 0;
    std::size_t n_groups_ = 0;
    std::vector<cplx> response_; // [user * n_groups + group]
    std::vector<double> scale_;  // P / sigma_k^2
};

/// Sequential (coordinate) maximisation of the min-SNR over the phase factors, starting from
/// theta = 0. Each sweep updates theta_1..theta_{G-1} in turn; the loop stops after i_max sweeps or
/// as soon as a sweep fails to improve the best value.
PhaseFactors optimize_phase_factors(const SubArrayLayout &layout, const MulticastProblem &design_problem,
                                    const QuantizedAngleSet &t_set, std::size_t i_max);

struct MulticastConfig
{
    std::size_t n_antennas = 64;
    unsigned entry_bits = 6;  // B
    unsigned factor_bits = 4; // M
    std::size_t i_max = 30;
    double power = 1.0;
    bool quantize = true;
};

/// Allocation, sub-array weights, phase-factor search and assembly from the estimated CSI.
BeamformerDesign run_algorithm2(const std::vector<UserEstimate> &users, const MulticastConfig &config);

/// Per-user |alpha_hat_k| N_k / sigma_k, computed from the zero-padded sub-array weights and the
/// estimated channels. Values are indexed by user.
std::vector<double> equal_snr_diagnostic(const std::vector<UserEstimate> &users, const SubArrayLayout &layout);

/// Upper bound on max/min of the diagnostic values that rounding in the allocation can cause:
/// max_k N_k/(N_k - d_k) * max_k (N_k + d_k)/N_k with d_k = 1/2 for rounded sizes and
/// (K-1)/2 for the remainder. Only meaningful for unclamped layouts.
double rounding_ratio_bound(const SubArrayLayout &layout);

} // namespace mmcast

#endif
