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

#ifndef MMCAST_ORACLES_HPP
#define MMCAST_ORACLES_HPP

#include "mmcast/multicast.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>

namespace mmcast
{

/// Thrown when an exhaustive search would exceed its enumeration budget.
class search_space_error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct OracleResult
{
    double best_value = 0.0;
    std::vector<std::size_t> best_config; // alphabet indices; ties keep the lexicographically smallest
    std::uint64_t evaluations = 0;
};

inline constexpr unsigned max_factor_search_bits = 24;
inline constexpr unsigned max_beamformer_search_bits = 26;

/// Joint enumeration of all |T|^(G-1) phase-factor tuples for a fixed layout.
/// The objective is the min-SNR on `problem`; with an entry set the assembled beamformer is quantized
/// before evaluation.
OracleResult exhaustive_factor_oracle(const SubArrayLayout &layout, const MulticastProblem &problem,
                                      const QuantizedAngleSet &t_set, const QuantizedAngleSet *entry_set = nullptr);

/// Global optimum of the min-SNR over every constant-modulus vector whose entry phases lie in S.
/// Refuses search spaces above 2^26 candidates.
OracleResult exhaustive_beamformer_oracle(const MulticastProblem &problem, const QuantizedAngleSet &entry_set);

/// Entry phases of e^{j psi} u(N, aod) snapped to S, with the common rotation psi chosen to maximise
/// the gain toward aod. This is the best single-user beamformer over S.
cvec quantized_matched_filter(std::size_t n_antennas, double aod, const QuantizedAngleSet &entry_set);

/// Entry-wise alternating maximisation of the min-SNR over S (an ALTER-style reconstruction).
/// Default start: the phases of the strongest user's channel snapped to S. Each round scans entries
/// 0..N-1 and moves each to its best member of S with the others fixed.
BeamformerDesign alter_baseline(const MulticastProblem &problem, const QuantizedAngleSet &entry_set, std::size_t n_iter,
                                std::optional<cvec> init = std::nullopt);

/// min_k P ||h_k||^2 / sigma_k^2; no unit-norm beamformer can exceed it.
double matched_filter_bound(const MulticastProblem &problem);

/// Complexity figures used when comparing methods: 2^M (K-1) I_max for the phase-factor search and
/// N^2 K N_iter for the entry-wise baseline.
std::uint64_t algorithm2_complexity(unsigned factor_bits, std::size_t n_users, std::size_t i_max);
std::uint64_t alter_complexity(std::size_t n_antennas, std::size_t n_users, std::size_t n_iter);

} // namespace mmcast

#endif
