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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "beambook.hpp"
#include "geometry.hpp"
#include "ofdm_channel.hpp"
#include "receiver.hpp"

namespace nfloc {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double width() const { return hi - lo; }
    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
};

/// How the angular / range objectives |a^H F~ y_q| are evaluated.
enum class ProductOrder {
    /// Form v_q = F~ y_q once per subcarrier, then one N_BS dot product per probe.
    precombined,
    /// Evaluate (a^H F~) y_q per probe, as the algorithms are written; N_BS * J
    /// multiply-accumulates per probe. Used for the complexity study.
    beam_space,
};

struct SearchConfig {
    int outer_iters = 3;   // I_1 / I_2
    int range_steps = 100; // I_d
    int angle_steps = 100; // I_theta
    double rssi_floor = 0.05;
    double refine_factor = 0.2;
    // Unset brackets default to the serviced region.
    std::optional<Interval> range_bracket;
    std::optional<Interval> az_bracket;
    std::optional<Interval> el_bracket;
    ProductOrder order = ProductOrder::precombined;
    /// Near-field range search: one coherent search over all subcarriers, or one per subcarrier.
    bool nf_coherent_range = true;
    /// Near-field objectives divided by the weighted beam-space norm of the probe.
    bool nf_normalized = true;
    /// Keep the incumbent coordinate when its update lowers the traced objective.
    bool monotone = false;
    /// Near-field seed: coarse range x elevation grid at the strongest beam's azimuth.
    /// Zero in either dimension starts at the strongest beam's focus point.
    int nf_seed_ranges = 16;
    int nf_seed_elevations = 6;

    void validate(double ambiguity_range) const {
        require(outer_iters >= 1, "search: need at least one outer iteration");
        require(range_steps >= 2 && angle_steps >= 2, "search: step counts must be >= 2");
        require(rssi_floor >= 0.0 && rssi_floor < 1.0, "search: rssi floor must lie in [0, 1)");
        require(refine_factor > 0.0 && refine_factor <= 1.0, "search: refine factor must lie in (0, 1]");
        require(nf_seed_ranges >= 0 && nf_seed_elevations >= 0, "search: seed grid sizes must be >= 0");
        if (range_bracket) {
            require(range_bracket->lo > 0.0 && range_bracket->lo < range_bracket->hi, "search: bad range bracket");
            require(range_bracket->hi < ambiguity_range,
                    "search: range bracket exceeds the non-ambiguous range c/W_sub");
        }
        if (az_bracket)
            require(az_bracket->lo < az_bracket->hi, "search: bad azimuth bracket");
        if (el_bracket)
            require(el_bracket->lo <= el_bracket->hi, "search: bad elevation bracket");
    }
};

/// Work counters filled by the estimators.
struct OpTally {
    std::uint64_t steering_constructions = 0; // planar or spherical array vectors built
    std::uint64_t phase_rolls = 0;            // subcarrier phase vectors t(d) built
    std::uint64_t distance_evals = 0;         // element-to-point distances
    std::uint64_t inner_products = 0;         // complex multiply-accumulates in correlations

    OpTally& operator+=(const OpTally& o) {
        steering_constructions += o.steering_constructions;
        phase_rolls += o.phase_rolls;
        distance_evals += o.distance_evals;
        inner_products += o.inner_products;
        return *this;
    }
    bool operator==(const OpTally&) const = default;
};

struct PositionEstimate {
    Vec3 position = Vec3::Zero();
    SphericalPose pose;
    std::vector<double> weights;
    Scheme scheme = Scheme::far_field;
    OpTally ops;
    /// Objective at the running estimate after each outer iteration.
    std::vector<double> objective_trace;
};

/// Normalized per-beam received energy, thresholded.
inline std::vector<double> beam_weights(const RxSnapshot& rx, double rssi_floor) {
    const Eigen::Index J = rx.y.rows();
    require(J >= 1, "beam_weights: empty snapshot");
    std::vector<double> w(static_cast<std::size_t>(J));
    double top = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
        w[j] = rx.y.row(j).norm();
        top = std::max(top, w[j]);
    }
    if (!(top > 0.0))
        throw Error("no signal energy");
    for (double& v : w) {
        v /= top;
        if (v < rssi_floor)
            v = 0.0;
    }
    return w;
}

struct LineMax {
    double arg = 0.0;
    double value = 0.0;
};

/// Grid maximization over `steps` points, endpoints included. Ties keep the smaller coordinate.
template <class F>
LineMax line_search_max(F&& objective, Interval bracket, int steps) {
    require(steps >= 2, "line_search_max: need at least two steps");
    LineMax best{bracket.lo, objective(bracket.lo)};
    const double h = bracket.width() / (steps - 1);
    for (int i = 1; i < steps; ++i) {
        const double x = (i == steps - 1) ? bracket.hi : bracket.lo + h * i;
        const double v = objective(x);
        if (v > best.value)
            best = {x, v};
    }
    return best;
}

/// Grid version of line_search_max for `count` objectives sharing one bracket.
///
/// `objective(x, out)` fills out[0 .. count-1]; each objective gets its own
/// argmax with the same grid and tie rule as line_search_max.
template <class F>
std::vector<LineMax> line_search_max_each(F&& objective, Interval bracket, int steps, int count) {
    require(steps >= 2, "line_search_max: need at least two steps");
    std::vector<double> vals(static_cast<std::size_t>(count));
    objective(bracket.lo, vals.data());
    std::vector<LineMax> best(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c)
        best[c] = {bracket.lo, vals[c]};
    const double h = bracket.width() / (steps - 1);
    for (int i = 1; i < steps; ++i) {
        const double x = (i == steps - 1) ? bracket.hi : bracket.lo + h * i;
        objective(x, vals.data());
        for (int c = 0; c < count; ++c)
            if (vals[c] > best[c].value)
                best[c] = {x, vals[c]};
    }
    return best;
}

namespace detail {

/// Window of width `width` centered on `center`, clipped to `bounds`.
inline Interval refine(Interval bounds, double center, double width) {
    Interval out{std::max(bounds.lo, center - 0.5 * width), std::min(bounds.hi, center + 0.5 * width)};
    if (out.hi <= out.lo)
        out = {std::clamp(center, bounds.lo, bounds.hi), std::clamp(center, bounds.lo, bounds.hi)};
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / double(v.size());
}

/// Shared state of both estimators: weighted beam combiner and objective evaluation.
class BeamCorrelator {
public:
    BeamCorrelator(const RxSnapshot& rx, const BeamBook& book, const std::vector<double>& w, ProductOrder order,
                   OpTally& ops)
        : rx_(rx), order_(order), ops_(ops) {
        const Eigen::Index J = book.matrix.cols();
        Eigen::VectorXd wv(J);
        for (Eigen::Index j = 0; j < J; ++j)
            wv[j] = w[j];
        weighted_ = book.matrix * wv.asDiagonal(); // F~ = F diag(w)
        int nz = 0;
        for (Eigen::Index j = 0; j < J; ++j)
            nz += w[j] > 0.0;
        active_.resize(book.matrix.rows(), nz);
        for (Eigen::Index j = 0, k = 0; j < J; ++j)
            if (w[j] > 0.0)
                active_.col(k++) = std::sqrt(w[j]) * book.matrix.col(j);
        if (order_ == ProductOrder::precombined) {
            combined_ = weighted_ * rx.y; // column q is F~ y_q
            ops_.inner_products += std::uint64_t(weighted_.rows()) * J * rx.y.cols();
        }
    }

    /// a^H F~ y_q
    cd value(const CVector& a, int q) const {
        if (order_ == ProductOrder::precombined) {
            ops_.inner_products += std::uint64_t(a.size());
            return a.dot(combined_.col(q));
        }
        const Eigen::Index J = weighted_.cols();
        ops_.inner_products += std::uint64_t(a.size()) * J + J;
        const Eigen::RowVectorXcd beam_resp = a.adjoint() * weighted_;
        return (beam_resp * rx_.y.col(q))(0);
    }

    /// |a^H F~ y_q|
    double operator()(const CVector& a, int q) const { return std::abs(value(a, q)); }

    /// a_q^H F~ y_q for every column a_q of A (one column per subcarrier).
    void values(const CMatrix& A, CVector& out) const {
        const Eigen::Index Q = A.cols();
        out.resize(Q);
        if (order_ == ProductOrder::precombined) {
            ops_.inner_products += std::uint64_t(A.rows()) * Q;
            for (Eigen::Index q = 0; q < Q; ++q)
                out[q] = A.col(q).dot(combined_.col(q));
            return;
        }
        const Eigen::Index J = weighted_.cols();
        ops_.inner_products += (std::uint64_t(A.rows()) * J + J) * Q;
        beam_resp_.noalias() = A.adjoint() * weighted_; // Q x J
        for (Eigen::Index q = 0; q < Q; ++q)
            out[q] = beam_resp_.row(q).transpose().cwiseProduct(rx_.y.col(q)).sum();
    }

    /// kernel_norm of every column of A.
    void kernel_norms(const CMatrix& A, Eigen::VectorXd& out) const {
        ops_.inner_products += std::uint64_t(A.rows()) * active_.cols() * A.cols();
        kernel_.noalias() = active_.adjoint() * A;
        out = kernel_.colwise().norm().transpose();
    }

    /// sqrt(a^H F diag(w) F^H a), the probe's norm under the weighted beam-space kernel.
    double kernel_norm(const CVector& a) const {
        ops_.inner_products += std::uint64_t(a.size()) * active_.cols();
        return (active_.adjoint() * a).norm();
    }

private:
    const RxSnapshot& rx_;
    ProductOrder order_;
    OpTally& ops_;
    CMatrix weighted_;
    CMatrix combined_;
    CMatrix active_; // sqrt(w_j) f_j for the non-zero weights
    mutable CMatrix beam_resp_, kernel_;
};

inline Interval default_range(const SearchConfig& cfg, const Region& region) {
    return cfg.range_bracket.value_or(Interval{region.d_min, region.d_max});
}

inline Interval default_az(const SearchConfig& cfg, const Region& region) {
    return cfg.az_bracket.value_or(Interval{region.az_min, region.az_max});
}

inline Interval default_el(const SearchConfig& cfg, const Region& region, double ref_z, double d) {
    if (cfg.el_bracket)
        return *cfg.el_bracket;
    const auto [lo, hi] = elevation_bounds(region, ref_z, d);
    return {lo, hi};
}

inline std::size_t argmax_first(const std::vector<double>& w) {
    return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
}

} // namespace detail

/// Far-field localization from a beam-steering sweep.
///
/// Each outer iteration runs three 1-D grid searches: range per beam on the
/// subcarrier phase roll |y_j^H t(d)| (RSSI-weighted mean over beams), then
/// azimuth and elevation per subcarrier on |a~(theta)^H F~ y_q| (plain mean over
/// subcarriers). Later iterations search a window shrunk by refine_factor
/// around the incumbent.
inline PositionEstimate localize_ff(const RxSnapshot& rx, const BeamBook& book, const SearchConfig& cfg,
                                    const SteeringModel& model, const Region& region) {
    require(book.scheme == Scheme::far_field, "localize_ff: needs a beam-steering book");
    require(rx.y.rows() == book.beams(), "localize_ff: snapshot rows do not match the beam count");
    const OfdmGrid& grid = model.grid();
    require(rx.y.cols() == grid.q_count, "localize_ff: snapshot columns do not match the subcarrier count");
    cfg.validate(grid.ambiguity_range());
    const double ref_z = model.geometry().origin.z();

    PositionEstimate est;
    est.scheme = Scheme::far_field;
    est.weights = beam_weights(rx, cfg.rssi_floor);
    if (std::none_of(est.weights.begin(), est.weights.end(), [](double v) { return v > 0.0; }))
        throw Error("no reliable beam");

    OpTally& ops = est.ops;
    const detail::BeamCorrelator corr(rx, book, est.weights, cfg.order, ops);
    const int Q = grid.q_count;
    const int J = book.beams();

    const Interval range0 = detail::default_range(cfg, region);
    const Interval az0 = detail::default_az(cfg, region);
    double d_hat = range0.mid();
    double az_hat = az0.mid();
    double el_hat = detail::default_el(cfg, region, ref_z, d_hat).mid();

    CVector t, a;
    std::vector<double> per(static_cast<std::size_t>(Q));
    // sum_q |a~(az, el)^H F~ y_q|; range does not enter it.
    auto ff_objective = [&](double az, double el) {
        model.far_field(az, el, a);
        ++ops.steering_constructions;
        double obj = 0.0;
        for (int q = 0; q < Q; ++q)
            obj += corr(a, q);
        return obj;
    };
    // Same value kept out of the tally when it is diagnostic only.
    auto trace_objective = [&](double az, double el) {
        const OpTally before = ops;
        const double obj = ff_objective(az, el);
        ops = before;
        return obj;
    };
    double incumbent = cfg.monotone ? ff_objective(az_hat, el_hat) : 0.0;
    double scale = 1.0;
    for (int ii = 0; ii < cfg.outer_iters; ++ii, scale *= cfg.refine_factor) {
        // Range, one search per reliable beam.
        const Interval rb = ii == 0 ? range0 : detail::refine(range0, d_hat, range0.width() * scale);
        double num = 0.0, den = 0.0;
        for (int j = 0; j < J; ++j) {
            if (est.weights[j] <= 0.0)
                continue;
            const auto yj = rx.y.row(j);
            const auto best = line_search_max(
                [&](double d) {
                    subcarrier_phase_vector(grid, d, t);
                    ++ops.phase_rolls;
                    ops.inner_products += std::uint64_t(Q);
                    return std::abs(yj.conjugate().cwiseProduct(t.transpose()).sum()); // |y_j^H t(d)|
                },
                rb, cfg.range_steps);
            num += est.weights[j] * best.arg;
            den += est.weights[j];
        }
        d_hat = num / den;

        // Azimuth at the current elevation, per subcarrier.
        const Interval ab = ii == 0 ? az0 : detail::refine(az0, az_hat, az0.width() * scale);
        for (int q = 0; q < Q; ++q) {
            per[q] = line_search_max(
                         [&](double az) {
                             model.far_field(az, el_hat, a);
                             ++ops.steering_constructions;
                             return corr(a, q);
                         },
                         ab, cfg.angle_steps)
                         .arg;
        }
        const double az_prev = az_hat;
        az_hat = detail::mean(per);
        if (cfg.monotone) {
            const double obj = ff_objective(az_hat, el_hat);
            if (obj < incumbent)
                az_hat = az_prev;
            else
                incumbent = obj;
        }

        // Elevation at the new azimuth; the bracket follows the region's height span at d_hat.
        const Interval el0 = detail::default_el(cfg, region, ref_z, d_hat);
        const Interval eb = ii == 0 ? el0 : detail::refine(el0, el_hat, el0.width() * scale);
        for (int q = 0; q < Q; ++q) {
            per[q] = line_search_max(
                         [&](double el) {
                             model.far_field(az_hat, el, a);
                             ++ops.steering_constructions;
                             return corr(a, q);
                         },
                         eb, cfg.angle_steps)
                         .arg;
        }
        const double el_prev = el_hat;
        el_hat = detail::mean(per);
        if (cfg.monotone) {
            const double obj = ff_objective(az_hat, el_hat);
            if (obj < incumbent)
                el_hat = el_prev;
            else
                incumbent = obj;
            est.objective_trace.push_back(incumbent);
        } else {
            est.objective_trace.push_back(trace_objective(az_hat, el_hat));
        }
    }

    est.pose = {d_hat, az_hat, el_hat};
    est.position = cartesian_from_spherical(est.pose, model.geometry().origin);
    return est;
}

/// Near-field localization from a beam-focusing sweep.
///
/// Starts at the focus point of the strongest beam, or at the best point of a
/// coarse range x elevation grid through it, then alternates 1-D grid
/// searches over range, azimuth and elevation. Every probe rebuilds the
/// spherical steering vectors a_q(p) at the probed point; per-subcarrier
/// maxima are averaged with equal weight.
///
/// With nf_coherent_range the range search maximizes |sum_q a_q^H F~ y_q|
/// instead of averaging per-subcarrier maxima. With nf_normalized every
/// objective is divided by the probe's weighted beam-space norm.
inline PositionEstimate localize_nf(const RxSnapshot& rx, const BeamBook& book, const SearchConfig& cfg,
                                    const SteeringModel& model, const Region& region) {
    require(book.scheme == Scheme::near_field, "localize_nf: needs a beam-focusing book");
    require(rx.y.rows() == book.beams(), "localize_nf: snapshot rows do not match the beam count");
    const OfdmGrid& grid = model.grid();
    require(rx.y.cols() == grid.q_count, "localize_nf: snapshot columns do not match the subcarrier count");
    cfg.validate(grid.ambiguity_range());
    const Vec3& origin = model.geometry().origin;
    const int N = model.size();

    PositionEstimate est;
    est.scheme = Scheme::near_field;
    est.weights = beam_weights(rx, cfg.rssi_floor);
    if (std::none_of(est.weights.begin(), est.weights.end(), [](double v) { return v > 0.0; }))
        throw Error("no reliable beam");

    OpTally& ops = est.ops;
    const detail::BeamCorrelator corr(rx, book, est.weights, cfg.order, ops);
    const int Q = grid.q_count;

    SphericalPose cur = book.focus_poses.at(detail::argmax_first(est.weights));
    const Interval range0 = detail::default_range(cfg, region);
    const Interval az0 = detail::default_az(cfg, region);

    CMatrix A;
    CVector v;
    Eigen::VectorXd k;
    // Per-subcarrier objectives |a_q^H F~ y_q| (optionally normalized) at one pose.
    auto probe_all = [&](const SphericalPose& pose, double* out) {
        model.near_field_band(cartesian_from_spherical(pose, origin), A);
        ops.steering_constructions += std::uint64_t(Q);
        ops.distance_evals += std::uint64_t(N) * Q;
        corr.values(A, v);
        if (cfg.nf_normalized)
            corr.kernel_norms(A, k);
        for (int q = 0; q < Q; ++q)
            out[q] = cfg.nf_normalized ? std::abs(v[q]) / std::max(k[q], 1e-300) : std::abs(v[q]);
    };
    // Range objective summed coherently over subcarriers, so the phase roll
    // across the band carries time-of-flight information.
    auto coherent = [&](const SphericalPose& pose) {
        model.near_field_band(cartesian_from_spherical(pose, origin), A);
        ops.steering_constructions += std::uint64_t(Q);
        ops.distance_evals += std::uint64_t(N) * Q;
        corr.values(A, v);
        if (!cfg.nf_normalized)
            return std::abs(v.sum());
        corr.kernel_norms(A, k);
        return std::abs(v.sum()) / std::max(k.norm(), 1e-300);
    };
    auto mean_arg = [](const std::vector<LineMax>& m) {
        double s = 0.0;
        for (const auto& x : m)
            s += x.arg;
        return s / double(m.size());
    };

    if (cfg.nf_seed_ranges > 0 && cfg.nf_seed_elevations > 0) {
        double best = coherent(cur);
        const SphericalPose focus = cur;
        for (const double d : geometric_points(range0.lo, range0.hi, cfg.nf_seed_ranges)) {
            const Interval eb = detail::default_el(cfg, region, origin.z(), d);
            for (const double el : uniform_points(eb.lo, eb.hi, cfg.nf_seed_elevations)) {
                const SphericalPose p{d, focus.az, el};
                const double obj = coherent(p);
                if (obj > best) {
                    best = obj;
                    cur = p;
                }
            }
        }
    }

    double incumbent = cfg.monotone ? coherent(cur) : 0.0;
    // Under the guard a coordinate update that lowers the objective is undone.
    auto accept = [&](double& coord, double candidate) {
        const double prev = coord;
        coord = candidate;
        if (!cfg.monotone)
            return;
        const double obj = coherent(cur);
        if (obj < incumbent)
            coord = prev;
        else
            incumbent = obj;
    };

    double scale = 1.0;
    for (int ii = 0; ii < cfg.outer_iters; ++ii, scale *= cfg.refine_factor) {
        const Interval rb = ii == 0 ? range0 : detail::refine(range0, cur.dof, range0.width() * scale);
        if (cfg.nf_coherent_range) {
            accept(cur.dof,
                   line_search_max([&](double d) { return coherent({d, cur.az, cur.el}); }, rb, cfg.range_steps).arg);
        } else {
            accept(cur.dof, mean_arg(line_search_max_each(
                                [&](double d, double* out) { probe_all({d, cur.az, cur.el}, out); }, rb,
                                cfg.range_steps, Q)));
        }

        const Interval ab = ii == 0 ? az0 : detail::refine(az0, cur.az, az0.width() * scale);
        accept(cur.az, mean_arg(line_search_max_each(
                           [&](double az, double* out) { probe_all({cur.dof, az, cur.el}, out); }, ab,
                           cfg.angle_steps, Q)));

        const Interval el0 = detail::default_el(cfg, region, origin.z(), cur.dof);
        const Interval eb = ii == 0 ? el0 : detail::refine(el0, cur.el, el0.width() * scale);
        accept(cur.el, mean_arg(line_search_max_each(
                           [&](double el, double* out) { probe_all({cur.dof, cur.az, el}, out); }, eb,
                           cfg.angle_steps, Q)));

        if (cfg.monotone) {
            est.objective_trace.push_back(incumbent);
        } else {
            // Trace is diagnostic only and stays out of the tally.
            const OpTally before = ops;
            est.objective_trace.push_back(coherent(cur));
            ops = before;
        }
    }

    est.pose = cur;
    est.position = cartesian_from_spherical(cur, origin);
    return est;
}

struct TallyRatio {
    double steering_constructions = 0.0;
    double phase_rolls = 0.0;
    double distance_evals = 0.0;
    double inner_products = 0.0;
};

/// Per-counter NF / FF ratios.
///
/// The far-field run must have built steering vectors and correlated
/// something, otherwise the comparison is meaningless and this throws.
/// Counters the far-field estimator never touches (distance evaluations)
/// come back as +inf, or NaN when both sides are zero.
inline TallyRatio complexity_ratio(const OpTally& nf, const OpTally& ff) {
    if (ff.steering_constructions == 0 || ff.inner_products == 0)
        throw Error("complexity_ratio: zero denominator");
    auto ratio = [](std::uint64_t a, std::uint64_t b) {
        if (b == 0)
            return a == 0 ? std::nan("") : INFINITY;
        return double(a) / double(b);
    };
    return {ratio(nf.steering_constructions, ff.steering_constructions), ratio(nf.phase_rolls, ff.phase_rolls),
            ratio(nf.distance_evals, ff.distance_evals), ratio(nf.inner_products, ff.inner_products)};
}

} // namespace nfloc
