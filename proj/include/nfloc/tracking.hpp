// SPDX-License-Identifier: Apache-2.0
//
// nfloc - adaptive near-field / far-field downlink localization simulator
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

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"
#include "ofdm_channel.hpp"
#include "scenario.hpp"

namespace nfloc {

struct TrackConfig {
    int horizon = 40;       // K
    int memory_window = 10; // K_F
    int poly_degree = 2;    // n_d
    double error_threshold = 4.0; // eps_th, m
    double nf_limit = 7.2;        // d_NF, m
    Scheme initial_scheme = Scheme::far_field;
    double step_period = 0.25; // s
    bool flush_on_switch = true;

    void validate() const {
        require(horizon >= 1, "track: horizon must be >= 1");
        require(poly_degree >= 0, "track: polynomial degree must be >= 0");
        require(memory_window > poly_degree, "track: memory window must exceed the polynomial degree");
        require(error_threshold > 0.0, "track: error threshold must be positive");
        require(nf_limit > 0.0, "track: d_NF must be positive");
        require(step_period > 0.0, "track: step period must be positive");
    }
};

struct MemoryEntry {
    double time = 0.0;
    Vec3 position = Vec3::Zero();
    Scheme scheme = Scheme::far_field;
};

/// Bounded, time-ordered store of past positions.
class TrackMemory {
public:
    explicit TrackMemory(std::size_t capacity) : capacity_(capacity) {
        require(capacity >= 1, "track memory: capacity must be >= 1");
    }

    void store(const MemoryEntry& e) {
        if (!entries_.empty() && !(e.time > entries_.back().time))
            throw Error("track memory: times must be strictly increasing");
        if (entries_.size() == capacity_)
            entries_.pop_front();
        entries_.push_back(e);
    }

    void clear() { entries_.clear(); }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }

    /// Up to n most recent entries, oldest first.
    [[nodiscard]] std::vector<MemoryEntry> latest(std::size_t n) const {
        const std::size_t take = std::min(n, entries_.size());
        return {entries_.end() - static_cast<std::ptrdiff_t>(take), entries_.end()};
    }

private:
    std::size_t capacity_;
    std::deque<MemoryEntry> entries_;
};

/// Per-axis polynomial in (t - t_ref).
struct TrajectoryModel {
    int degree = 0;
    double t_ref = 0.0;
    std::array<Eigen::VectorXd, 3> coeffs; // lowest power first
    std::vector<double> fit_times;
    double residual = 0.0; // root-sum-square of the fit residuals over all axes

    [[nodiscard]] Vec3 at(double t) const {
        const double x = t - t_ref;
        Vec3 out;
        for (int a = 0; a < 3; ++a) {
            double acc = 0.0;
            for (Eigen::Index i = coeffs[a].size() - 1; i >= 0; --i)
                acc = acc * x + coeffs[a][i];
            out[a] = acc;
        }
        return out;
    }
};

/// Least-squares fit over the most recent `window` points. nullopt when there
/// are fewer than degree + 1 points; the caller then falls back to the raw estimate.
inline std::optional<TrajectoryModel> fit_trajectory(std::span<const MemoryEntry> points, int degree, int window) {
    require(degree >= 0 && window >= 1, "fit_trajectory: bad degree or window");
    const std::size_t n = std::min(points.size(), static_cast<std::size_t>(window));
    if (n < static_cast<std::size_t>(degree) + 1)
        return std::nullopt;
    const auto pts = points.subspan(points.size() - n);

    TrajectoryModel m;
    m.degree = degree;
    m.t_ref = pts.back().time;
    Eigen::MatrixXd V(static_cast<Eigen::Index>(n), degree + 1);
    Eigen::MatrixXd P(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = pts[i].time - m.t_ref;
        double pw = 1.0;
        for (int c = 0; c <= degree; ++c, pw *= x)
            V(static_cast<Eigen::Index>(i), c) = pw;
        P.row(static_cast<Eigen::Index>(i)) = pts[i].position.transpose();
        m.fit_times.push_back(pts[i].time);
    }
    const Eigen::MatrixXd C = V.colPivHouseholderQr().solve(P);
    for (int a = 0; a < 3; ++a) {
        m.coeffs[a] = C.col(a);
        if (!m.coeffs[a].allFinite())
            return std::nullopt;
    }
    m.residual = (V * C - P).norm();
    return m;
}

inline std::optional<TrajectoryModel> fit_trajectory(const TrackMemory& memory, int degree, int window) {
    const auto pts = memory.latest(static_cast<std::size_t>(window));
    return fit_trajectory(std::span<const MemoryEntry>(pts), degree, window);
}

inline double trajectory_error(const Vec3& estimate, const Vec3& predicted) { return (estimate - predicted).norm(); }

enum class Trigger { none, trajectory, range, unreliable };

inline std::string_view to_string(Trigger t) {
    switch (t) {
    case Trigger::trajectory:
        return "trajectory";
    case Trigger::range:
        return "range";
    case Trigger::unreliable:
        return "unreliable";
    default:
        return "none";
    }
}

/// One iteration of the tracking protocol.
struct TrackStep {
    int k = 0;
    double t = 0.0;
    Vec3 truth = Vec3::Zero();
    double true_range = 0.0;
    Vec3 estimate = Vec3::Constant(std::numeric_limits<double>::quiet_NaN()); // final p_hat
    Vec3 stored = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());   // what went to memory
    Scheme scheme = Scheme::far_field; // xi_k
    bool used_ff = false;
    bool used_nf = false;
    bool gated = false; // a trajectory fit was available for the E_UE test
    double trajectory_error = std::numeric_limits<double>::quiet_NaN();
    Trigger trigger = Trigger::none;
    bool flushed = false;
    bool unreliable = false;
    Scheme next_scheme = Scheme::far_field;

    [[nodiscard]] bool nf_rerun() const { return scheme == Scheme::far_field && used_nf; }
    [[nodiscard]] bool switched() const { return next_scheme != scheme; }
};

/// Adaptive FF/NF scheme selection with trajectory gating.
///
/// `step` takes a callable est(Scheme) -> Vec3 returning the position estimate
/// of that signaling scheme for the current iteration; it may throw nfloc::Error,
/// which logs an unreliable step and forces the NF scheme next.
class Tracker {
public:
    Tracker(TrackConfig cfg, Vec3 bs_position)
        : cfg_(cfg), bs_(std::move(bs_position)), memory_(static_cast<std::size_t>(std::max(cfg.horizon, 1))),
          xi_(cfg.initial_scheme) {
        cfg_.validate();
    }

    [[nodiscard]] const TrackMemory& memory() const { return memory_; }
    [[nodiscard]] Scheme scheme() const { return xi_; }
    [[nodiscard]] const TrackConfig& config() const { return cfg_; }

    template <class Estimate>
    TrackStep step(int k, double t, const Vec3& truth, Estimate&& est) {
        TrackStep s;
        s.k = k;
        s.t = t;
        s.truth = truth;
        s.true_range = (truth - bs_).norm();
        s.scheme = xi_;

        auto run = [&](Scheme which) -> std::optional<Vec3> {
            (which == Scheme::far_field ? s.used_ff : s.used_nf) = true;
            try {
                return est(which);
            } catch (const Error&) {
                return std::nullopt;
            }
        };
        auto fail = [&]() {
            s.unreliable = true;
            s.trigger = Trigger::unreliable;
            s.next_scheme = xi_ = Scheme::near_field;
            return s;
        };
        const int nd = cfg_.poly_degree;

        if (xi_ == Scheme::far_field) {
            const auto ff = run(Scheme::far_field);
            if (!ff)
                return fail();
            Vec3 p_hat = *ff;
            Vec3 p_pred = p_hat;
            if (memory_.size() > static_cast<std::size_t>(nd) + 1) {
                if (const auto fit = fit_trajectory(memory_, nd, cfg_.memory_window)) {
                    p_pred = fit->at(t);
                    s.gated = true;
                }
            }
            s.trajectory_error = trajectory_error(p_hat, p_pred);
            const bool diverged = s.trajectory_error > cfg_.error_threshold;
            const bool close = range_of(p_hat) < cfg_.nf_limit;
            if (diverged || close) {
                s.trigger = diverged ? Trigger::trajectory : Trigger::range;
                if (cfg_.flush_on_switch) {
                    memory_.clear();
                    s.flushed = true;
                }
                const auto nf = run(Scheme::near_field);
                if (!nf)
                    return fail();
                p_hat = *nf;
                s.stored = p_hat;
                memory_.store({t, p_hat, Scheme::near_field});
            } else {
                s.stored = smoothed(t, p_hat, Scheme::far_field);
                memory_.store({t, s.stored, Scheme::far_field});
            }
            s.estimate = p_hat;
        } else {
            const auto nf = run(Scheme::near_field);
            if (!nf)
                return fail();
            s.estimate = *nf;
            s.stored = memory_.size() > static_cast<std::size_t>(nd) ? smoothed(t, *nf, Scheme::near_field) : *nf;
            memory_.store({t, s.stored, Scheme::near_field});
        }

        // "p_hat in FF" is read as d_hat >= d_NF, so one of the two branches always applies.
        xi_ = range_of(s.estimate) >= cfg_.nf_limit ? Scheme::far_field : Scheme::near_field;
        s.next_scheme = xi_;
        return s;
    }

private:
    [[nodiscard]] double range_of(const Vec3& p) const { return (p - bs_).norm(); }

    /// Fit over the latest K_F memory entries plus the new estimate, evaluated at t.
    Vec3 smoothed(double t, const Vec3& p_hat, Scheme scheme) const {
        auto pts = memory_.latest(static_cast<std::size_t>(cfg_.memory_window));
        pts.push_back({t, p_hat, scheme});
        const auto fit = fit_trajectory(std::span<const MemoryEntry>(pts), cfg_.poly_degree,
                                        cfg_.memory_window + 1);
        return fit ? fit->at(t) : p_hat;
    }

    TrackConfig cfg_;
    Vec3 bs_;
    TrackMemory memory_;
    Scheme xi_;
};

// ---------------------------------------------------------------------------
// Simulated tracks
// ---------------------------------------------------------------------------

/// Constant-velocity UE motion.
struct Mobility {
    Vec3 start = Vec3::Zero();
    Vec3 velocity = Vec3::Zero(); // m/s

    [[nodiscard]] Vec3 at(double t) const { return start + velocity * t; }
};

/// Straight line at fixed azimuth and height between two BS ranges, at `speed` m/s.
/// Returns the motion and the number of steps of length dt that stay on the segment.
inline std::pair<Mobility, int> radial_path(const Vec3& bs, double d_from, double d_to, double az, double z,
                                            double speed, double dt) {
    require(speed > 0.0 && dt > 0.0, "radial_path: speed and period must be positive");
    const Vec3 a = place_ue(bs, d_from, az, z);
    const Vec3 b = place_ue(bs, d_to, az, z);
    const double len = (b - a).norm();
    require(len > 0.0, "radial_path: empty path");
    const Vec3 v = (b - a) / len * speed;
    const int steps = static_cast<int>(std::floor(len / (speed * dt) + 1e-9)) + 1;
    return {{a, v}, steps};
}

enum class TrackMode { adaptive, ff_only, nf_only };

inline std::string_view to_string(TrackMode m) {
    switch (m) {
    case TrackMode::ff_only:
        return "ff-only";
    case TrackMode::nf_only:
        return "nf-only";
    default:
        return "adaptive";
    }
}

/// Per-step estimates keyed by (step, scheme), drawn from seeds derived from
/// one master seed. Runs of different modes over the same cache see the same
/// channel and noise realizations.
class EstimateCache {
public:
    EstimateCache(const Scenario& scenario, std::uint64_t seed) : scenario_(scenario), seed_(seed) {}

    /// Throws nfloc::Error if the estimator failed for this realization.
    Vec3 get(Scheme s, int k, const Vec3& truth) {
        const auto key = std::make_pair(k, static_cast<int>(s));
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            std::optional<Vec3> v;
            try {
                v = scenario_.run(s, truth, derive_seed(seed_, static_cast<std::uint64_t>(s), std::uint64_t(k)))
                        .position;
            } catch (const Error&) {
            }
            it = cache_.emplace(key, v).first;
        }
        if (!it->second)
            throw Error("estimator failed at step " + std::to_string(k));
        return *it->second;
    }

    [[nodiscard]] std::size_t size() const { return cache_.size(); }

private:
    const Scenario& scenario_;
    std::uint64_t seed_;
    std::map<std::pair<int, int>, std::optional<Vec3>> cache_;
};

struct TrackLog {
    TrackMode mode = TrackMode::adaptive;
    std::vector<TrackStep> steps;
    bool truncated = false;
    std::string warning;

    /// Fraction of steps that employed the NF scheme at all.
    [[nodiscard]] double nf_fraction() const {
        if (steps.empty())
            return 0.0;
        std::size_t n = 0;
        for (const auto& s : steps)
            n += s.used_nf;
        return double(n) / double(steps.size());
    }
};

struct TrackOptions {
    TrackMode mode = TrackMode::adaptive;
    bool stop_at_first_nf = false; // enough for the switching distance
};

/// K protocol steps along `path` with estimates served from `cache`.
inline TrackLog run_tracking(const Scenario& scenario, const Mobility& path, const TrackConfig& cfg,
                             EstimateCache& cache, TrackOptions opt = {}) {
    cfg.validate();
    TrackLog log;
    log.mode = opt.mode;
    const Vec3& bs = scenario.geometry().origin;
    TrackConfig c = cfg;
    if (opt.mode == TrackMode::ff_only)
        c.initial_scheme = Scheme::far_field;
    if (opt.mode == TrackMode::nf_only)
        c.initial_scheme = Scheme::near_field;
    Tracker tracker(c, bs);

    for (int k = 1; k <= cfg.horizon; ++k) {
        const double t = (k - 1) * cfg.step_period;
        const Vec3 truth = path.at(t);
        if (!inside(scenario.region(), truth, bs, 1e-6)) {
            log.truncated = true;
            log.warning = "path leaves the serviced region at step " + std::to_string(k) + "; track truncated";
            break;
        }
        if (opt.mode == TrackMode::adaptive) {
            log.steps.push_back(tracker.step(k, t, truth, [&](Scheme s) { return cache.get(s, k, truth); }));
            if (opt.stop_at_first_nf && log.steps.back().used_nf)
                break;
            continue;
        }
        // Single-scheme baselines: raw estimate every step, no gating.
        const Scheme s = opt.mode == TrackMode::ff_only ? Scheme::far_field : Scheme::near_field;
        TrackStep st;
        st.k = k;
        st.t = t;
        st.truth = truth;
        st.true_range = (truth - bs).norm();
        st.scheme = st.next_scheme = s;
        (s == Scheme::far_field ? st.used_ff : st.used_nf) = true;
        try {
            st.estimate = st.stored = cache.get(s, k, truth);
        } catch (const Error&) {
            st.unreliable = true;
            st.trigger = Trigger::unreliable;
        }
        log.steps.push_back(st);
    }
    return log;
}

inline TrackLog run_tracking(const Scenario& scenario, const Mobility& path, const TrackConfig& cfg,
                             std::uint64_t seed, TrackOptions opt = {}) {
    EstimateCache cache(scenario, seed);
    return run_tracking(scenario, path, cfg, cache, opt);
}

/// True BS-UE distance at the first step that employed the NF scheme.
inline std::optional<double> switching_distance(const TrackLog& log) {
    for (const auto& s : log.steps)
        if (s.used_nf)
            return s.true_range;
    return std::nullopt;
}

inline void write_csv(std::ostream& os, const TrackLog& log) {
    os << "k,t,true_x,true_y,true_z,true_range,est_x,est_y,est_z,stored_x,stored_y,stored_z,scheme,used_ff,used_nf,"
          "trajectory_error,trigger,flushed,switched,next_scheme\n";
    os << std::setprecision(10);
    auto num = [&](double v) -> std::ostream& {
        if (std::isfinite(v))
            os << v;
        return os;
    };
    for (const auto& s : log.steps) {
        os << s.k << ',' << s.t << ',' << s.truth.x() << ',' << s.truth.y() << ',' << s.truth.z() << ','
           << s.true_range << ',';
        num(s.estimate.x()) << ',';
        num(s.estimate.y()) << ',';
        num(s.estimate.z()) << ',';
        num(s.stored.x()) << ',';
        num(s.stored.y()) << ',';
        num(s.stored.z()) << ',';
        os << to_string(s.scheme) << ',' << s.used_ff << ',' << s.used_nf << ',';
        num(s.trajectory_error) << ',';
        os << to_string(s.trigger) << ',' << s.flushed << ',' << s.switched() << ',' << to_string(s.next_scheme)
           << '\n';
    }
}

} // namespace nfloc
