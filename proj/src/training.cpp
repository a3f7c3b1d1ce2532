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

#include "mmcast/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mmcast
{

Codebook build_codebook(std::size_t n_antennas)
{
    if (n_antennas < 2)
        throw std::invalid_argument("build_codebook: at least 2 antennas are required.");

    Codebook cb;
    cb.n_antennas = n_antennas;
    cb.codewords.reserve(n_antennas);
    cb.centers.reserve(n_antennas);
    for (std::size_t n = 1; n <= n_antennas; ++n)
    {
        const double c = codeword_center(n_antennas, n);
        cb.centers.push_back(c);
        cb.codewords.push_back(steering_vector(n_antennas, c));
    }
    return cb;
}

double codeword_center(std::size_t n_antennas, std::size_t index)
{
    return -1.0 + (2.0 * static_cast<double>(index) - 1.0) / static_cast<double>(n_antennas);
}

SweepOutcome beam_sweep(std::span<const cplx> h, const Codebook &cb, const LinkParams &link, Rng &rng)
{
    if (h.size() != cb.n_antennas)
        throw std::invalid_argument("beam_sweep: channel length does not match the codebook.");

    SweepOutcome out;
    double best = -1.0;
    for (std::size_t i = 0; i < cb.size(); ++i)
    {
        const cplx y = received_symbol(h, cb.codewords[i], link, rng);
        const double mag = std::abs(y);
        if (mag > best)
        {
            best = mag;
            out.best_index = i + 1;
            out.y_center = y;
        }
    }
    out.est_aod = cb.centers[out.best_index - 1];
    return out;
}

cvec left_neighbor(std::size_t n_antennas, double center_aod)
{
    return steering_vector(n_antennas, center_aod - 2.0 / static_cast<double>(n_antennas));
}

cvec right_neighbor(std::size_t n_antennas, double center_aod)
{
    return steering_vector(n_antennas, center_aod + 2.0 / static_cast<double>(n_antennas));
}

TrainingTriple neighbor_training(std::span<const cplx> h, double est_aod, cplx y_center, const LinkParams &link,
                                 Rng &rng)
{
    const std::size_t n = h.size();
    const cvec fl = left_neighbor(n, est_aod);
    const cvec fr = right_neighbor(n, est_aod);

    TrainingTriple t;
    t.y_center = y_center;
    t.y_left = received_symbol(h, fl, link, rng);
    t.y_right = received_symbol(h, fr, link, rng);
    return t;
}

cplx composite_gain(double aod, double eta1, double eta2, double center_aod, std::size_t n_antennas)
{
    const cvec fc = steering_vector(n_antennas, center_aod);
    const cvec fl = left_neighbor(n_antennas, center_aod);
    const cvec fr = right_neighbor(n_antennas, center_aod);
    const cplx e1 = std::polar(1.0, eta1);
    const cplx e2 = std::polar(1.0, eta2);

    cvec f(n_antennas);
    for (std::size_t i = 0; i < n_antennas; ++i)
        f[i] = fc[i] + e1 * fl[i] + e2 * fr[i];
    return beam_gain(aod, f);
}

std::string to_string(VarianceMode mode)
{
    return mode == VarianceMode::complex_variance ? "complex" : "magnitude";
}

VarianceMode variance_mode_from_string(const std::string &name)
{
    if (name == "complex")
        return VarianceMode::complex_variance;
    if (name == "magnitude")
        return VarianceMode::magnitude_variance;
    throw std::invalid_argument("Unknown variance mode '" + name + "' (expected 'complex' or 'magnitude').");
}

// --- CompositeBeamDesigner --------------------------------------------------

CompositeBeamDesigner::CompositeBeamDesigner(std::size_t n_antennas, std::size_t q_samples)
    : n_antennas_(n_antennas), q_samples_(q_samples)
{
    if (n_antennas < 2)
        throw std::invalid_argument("CompositeBeamDesigner: at least 2 antennas are required.");
    if (q_samples == 0)
        throw std::invalid_argument("CompositeBeamDesigner: Q must be positive.");

    const double c = center_aod();
    const cvec fc = steering_vector(n_antennas, c);
    const cvec fl = left_neighbor(n_antennas, c);
    const cvec fr = right_neighbor(n_antennas, c);

    gc_.resize(q_samples);
    gl_.resize(q_samples);
    gr_.resize(q_samples);
    for (std::size_t q = 1; q <= q_samples; ++q)
    {
        const double phi = sample_aod(q);
        gc_[q - 1] = beam_gain(phi, fc);
        gl_[q - 1] = beam_gain(phi, fl);
        gr_[q - 1] = beam_gain(phi, fr);
    }

    const double inv_q = 1.0 / static_cast<double>(q_samples);
    for (std::size_t q = 0; q < q_samples; ++q)
    {
        mean_c_ += gc_[q];
        mean_l_ += gl_[q];
        mean_r_ += gr_[q];
        pow_c_ += std::norm(gc_[q]);
        pow_l_ += std::norm(gl_[q]);
        pow_r_ += std::norm(gr_[q]);
        cross_cl_ += std::conj(gc_[q]) * gl_[q];
        cross_cr_ += std::conj(gc_[q]) * gr_[q];
        cross_lr_ += std::conj(gl_[q]) * gr_[q];
    }
    mean_c_ *= inv_q, mean_l_ *= inv_q, mean_r_ *= inv_q;
    pow_c_ *= inv_q, pow_l_ *= inv_q, pow_r_ *= inv_q;
    cross_cl_ *= inv_q, cross_cr_ *= inv_q, cross_lr_ *= inv_q;
}

double CompositeBeamDesigner::center_aod() const
{
    return codeword_center(n_antennas_, 2);
}

double CompositeBeamDesigner::sample_aod(std::size_t q) const
{
    const double n = static_cast<double>(n_antennas_);
    return center_aod() - 2.0 / n + 4.0 * static_cast<double>(q) / (n * static_cast<double>(q_samples_));
}

double CompositeBeamDesigner::objective(double eta1, double eta2, VarianceMode mode) const
{
    const cplx e1 = std::polar(1.0, eta1);
    const cplx e2 = std::polar(1.0, eta2);

    if (mode == VarianceMode::complex_variance)
    {
        // E|g|^2 - |E g|^2 expanded in the per-codeword moments
        const double power = pow_c_ + pow_l_ + pow_r_ + 2.0 * std::real(e1 * cross_cl_) +
                             2.0 * std::real(e2 * cross_cr_) + 2.0 * std::real(std::conj(e1) * e2 * cross_lr_);
        const cplx mean = mean_c_ + e1 * mean_l_ + e2 * mean_r_;
        return std::max(0.0, power - std::norm(mean));
    }

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t q = 0; q < q_samples_; ++q)
    {
        const double m = std::abs(gc_[q] + e1 * gl_[q] + e2 * gr_[q]);
        sum += m;
        sum_sq += m * m;
    }
    const double inv_q = 1.0 / static_cast<double>(q_samples_);
    const double mean = sum * inv_q;
    return std::max(0.0, sum_sq * inv_q - mean * mean);
}

double CompositeBeamDesigner::mean_magnitude(double eta1, double eta2) const
{
    const cplx e1 = std::polar(1.0, eta1);
    const cplx e2 = std::polar(1.0, eta2);
    double sum = 0.0;
    for (std::size_t q = 0; q < q_samples_; ++q)
        sum += std::abs(gc_[q] + e1 * gl_[q] + e2 * gr_[q]);
    return sum / static_cast<double>(q_samples_);
}

double CompositeBeamDesigner::ripple(double eta1, double eta2, double z) const
{
    const cplx e1 = std::polar(1.0, eta1);
    const cplx e2 = std::polar(1.0, eta2);
    double worst = 0.0;
    for (std::size_t q = 0; q < q_samples_; ++q)
        worst = std::max(worst, std::abs(std::abs(gc_[q] + e1 * gl_[q] + e2 * gr_[q]) / z - 1.0));
    return worst;
}

// --- calibration --------------------------------------------------------------

namespace
{

double wrap_phase(double eta)
{
    // into (-pi, pi]
    double r = std::fmod(eta + pi, 2.0 * pi);
    if (r <= 0.0)
        r += 2.0 * pi;
    return r - pi;
}

} // namespace

CompositeCalibration calibrate_composite(std::size_t n_antennas, std::size_t q_samples, std::size_t grid_size,
                                         VarianceMode mode)
{
    if (q_samples < 100)
        throw std::invalid_argument("calibrate_composite: Q must be at least 100.");
    if (grid_size < 16)
        throw std::invalid_argument("calibrate_composite: grid size must be at least 16.");

    const CompositeBeamDesigner designer(n_antennas, q_samples);
    const double step = 2.0 * pi / static_cast<double>(grid_size);
    auto grid_phase = [&](std::size_t k) { return -pi + step * static_cast<double>(k + 1); };

    double best = std::numeric_limits<double>::infinity();
    double best1 = 0.0, best2 = 0.0;
    for (std::size_t a = 0; a < grid_size; ++a)
    {
        for (std::size_t b = 0; b < grid_size; ++b)
        {
            const double e1 = grid_phase(a), e2 = grid_phase(b);
            const double v = designer.objective(e1, e2, mode);
            if (v < best)
            {
                best = v;
                best1 = e1;
                best2 = e2;
            }
        }
    }

    // refinement over the neighbouring cells at a tenth of the coarse step
    const double fine = step / 10.0;
    const double c1 = best1, c2 = best2;
    for (int a = -10; a <= 10; ++a)
    {
        for (int b = -10; b <= 10; ++b)
        {
            if (a == 0 && b == 0)
                continue;
            const double e1 = wrap_phase(c1 + fine * a);
            const double e2 = wrap_phase(c2 + fine * b);
            const double v = designer.objective(e1, e2, mode);
            if (v < best)
            {
                best = v;
                best1 = e1;
                best2 = e2;
            }
        }
    }

    CompositeCalibration calib;
    calib.n_antennas = n_antennas;
    calib.q_samples = q_samples;
    calib.grid_size = grid_size;
    calib.variance_mode = mode;
    calib.eta1 = best1;
    calib.eta2 = best2;
    calib.objective = best;
    calib.z_norm = designer.mean_magnitude(best1, best2);
    return calib;
}

double compute_z(std::size_t n_antennas, double eta1, double eta2, std::size_t q_samples)
{
    return CompositeBeamDesigner(n_antennas, q_samples).mean_magnitude(eta1, eta2);
}

double composite_ripple(const CompositeCalibration &calib, std::size_t grid_points)
{
    return CompositeBeamDesigner(calib.n_antennas, grid_points).ripple(calib.eta1, calib.eta2, calib.z_norm);
}

double estimate_gain(const TrainingTriple &triple, const CompositeCalibration &calib, const LinkParams &link)
{
    if (!(link.power > 0.0))
        throw std::invalid_argument("estimate_gain: transmit power must be positive.");
    const cplx combined =
        triple.y_center + std::polar(1.0, calib.eta1) * triple.y_left + std::polar(1.0, calib.eta2) * triple.y_right;
    return std::abs(combined / (link.pilot * calib.z_norm * std::sqrt(link.power)));
}

GainEstimate run_algorithm1(std::span<const cplx> h, const Codebook &cb, const LinkParams &link,
                            const CompositeCalibration &calib, Rng &rng)
{
    if (calib.n_antennas != cb.n_antennas)
        throw std::invalid_argument("run_algorithm1: calibration was computed for a different array size.");

    const SweepOutcome sweep = beam_sweep(h, cb, link, rng);
    const TrainingTriple triple = neighbor_training(h, sweep.est_aod, sweep.y_center, link, rng);

    GainEstimate est;
    est.est_gain = estimate_gain(triple, calib, link);
    est.est_aod = sweep.est_aod;
    est.best_index = sweep.best_index;
    return est;
}

// --- CalibrationCache -----------------------------------------------------------

CalibrationCache::CalibrationCache(std::filesystem::path file) : file_(std::move(file))
{
    load();
}

void CalibrationCache::load()
{
    if (file_.empty() || !std::filesystem::exists(file_))
        return;

    std::ifstream in(file_);
    if (!in)
        throw std::runtime_error("Cannot open calibration cache '" + file_.string() + "'.");

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        try
        {
            const auto j = nlohmann::json::parse(line);
            CompositeCalibration c;
            c.n_antennas = j.at("n_antennas").get<std::size_t>();
            c.q_samples = j.at("q_samples").get<std::size_t>();
            c.grid_size = j.value("grid_size", std::size_t{256});
            c.variance_mode = variance_mode_from_string(j.at("mode").get<std::string>());
            c.eta1 = j.at("eta1").get<double>();
            c.eta2 = j.at("eta2").get<double>();
            c.z_norm = j.at("z_norm").get<double>();
            c.objective = j.value("objective", 0.0);
            records_[{c.n_antennas, c.q_samples, c.grid_size, c.variance_mode}] = c;
        }
        catch (const std::exception &e)
        {
            throw std::runtime_error("Malformed calibration record in '" + file_.string() + "' line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
    }
}

void CalibrationCache::store(const CompositeCalibration &calib)
{
    records_[{calib.n_antennas, calib.q_samples, calib.grid_size, calib.variance_mode}] = calib;
    if (file_.empty())
        return;

    if (file_.has_parent_path())
        std::filesystem::create_directories(file_.parent_path());

    auto tmp = file_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out)
            throw std::runtime_error("Cannot write calibration cache '" + tmp.string() + "'.");
        for (const auto &[key, c] : records_)
        {
            nlohmann::ordered_json j;
            j["n_antennas"] = c.n_antennas;
            j["q_samples"] = c.q_samples;
            j["grid_size"] = c.grid_size;
            j["mode"] = to_string(c.variance_mode);
            j["eta1"] = c.eta1;
            j["eta2"] = c.eta2;
            j["z_norm"] = c.z_norm;
            j["objective"] = c.objective;
            out << j.dump() << '\n';
        }
    }
    std::filesystem::rename(tmp, file_);
}

CompositeCalibration CalibrationCache::get(std::size_t n_antennas, std::size_t q_samples, std::size_t grid_size,
                                           VarianceMode mode)
{
    const Key key{n_antennas, q_samples, grid_size, mode};
    {
        std::shared_lock lock(mutex_);
        if (auto it = records_.find(key); it != records_.end())
            return it->second;
    }
    std::unique_lock lock(mutex_);
    if (auto it = records_.find(key); it != records_.end())
        return it->second;
    auto calib = calibrate_composite(n_antennas, q_samples, grid_size, mode);
    store(calib);
    return calib;
}

CompositeCalibration CalibrationCache::refresh(std::size_t n_antennas, std::size_t q_samples, std::size_t grid_size,
                                               VarianceMode mode)
{
    auto calib = calibrate_composite(n_antennas, q_samples, grid_size, mode);
    std::unique_lock lock(mutex_);
    store(calib);
    return calib;
}

std::size_t CalibrationCache::size() const
{
    std::shared_lock lock(mutex_);
    return records_.size();
}

} // namespace mmcast
