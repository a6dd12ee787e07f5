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

#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"

namespace nfloc {

using cd = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Which propagation model / signaling scheme an object belongs to.
enum class Scheme { far_field = 1, near_field = 2 };

inline std::string_view to_string(Scheme s) { return s == Scheme::far_field ? "FF" : "NF"; }

/// exp(j * phase)
inline cd unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

// ---------------------------------------------------------------------------
// OFDM numerology
// ---------------------------------------------------------------------------

struct OfdmGrid {
    int q_count = 1;
    double sub_bw = 0.0;      // W_o, occupied bandwidth of one subcarrier
    double sub_spacing = 0.0; // W_sub
    double carrier_freq = 0.0;
    double speed_of_light = kSpeedOfLight;
    std::vector<double> wavelengths; // lambda_q, q = 0 .. Q-1

    static OfdmGrid make(int q_count, double sub_bw, double sub_spacing, double carrier_freq,
                         double speed_of_light = kSpeedOfLight) {
        require(q_count >= 1, "ofdm: need at least one subcarrier");
        require(sub_bw > 0.0 && sub_spacing > 0.0 && carrier_freq > 0.0, "ofdm: bandwidths must be positive");
        OfdmGrid g{q_count, sub_bw, sub_spacing, carrier_freq, speed_of_light, {}};
        g.wavelengths.resize(static_cast<std::size_t>(q_count));
        for (int q = 0; q < q_count; ++q)
            g.wavelengths[q] = speed_of_light / g.frequency(q);
        return g;
    }

    [[nodiscard]] double frequency(int q) const { return carrier_freq + q * sub_spacing; }
    [[nodiscard]] double wavelength(int q) const { return wavelengths.at(static_cast<std::size_t>(q)); }
    [[nodiscard]] double carrier_wavelength() const { return speed_of_light / carrier_freq; }
    [[nodiscard]] double total_bandwidth() const { return (q_count - 1) * sub_spacing + sub_bw; }
    /// Largest range resolvable from the subcarrier phase roll.
    [[nodiscard]] double ambiguity_range() const { return speed_of_light / sub_spacing; }
};

/// Free-space loss plus synchronization phase offset.
struct PathGain {
    double dof = 0.0;
    double phase_offset = 0.0;
    cd value{};
};

struct ChannelMatrix {
    CMatrix entries; // N_BS x Q
    Scheme model = Scheme::near_field;
};

// ---------------------------------------------------------------------------
// Steering vectors
// ---------------------------------------------------------------------------

/// Cached element layout for repeated steering-vector construction.
///
/// The estimators build thousands of steering vectors per call; this keeps
/// the per-element offsets in flat arrays and evaluates the planar vector in
/// separable x / z form.
class SteeringModel {
public:
    SteeringModel(const ArrayGeometry& geom, const OfdmGrid& grid) : geom_(geom), grid_(grid) {
        geom.validate();
        ox_.resize(static_cast<std::size_t>(geom.n_x));
        oz_.resize(static_cast<std::size_t>(geom.n_z));
        for (int i = 0; i < geom.n_x; ++i)
            ox_[i] = geom.offset_x(i);
        for (int i = 0; i < geom.n_z; ++i)
            oz_[i] = geom.offset_z(i);
    }

    [[nodiscard]] const ArrayGeometry& geometry() const { return geom_; }
    [[nodiscard]] const OfdmGrid& grid() const { return grid_; }
    [[nodiscard]] int size() const { return geom_.size(); }

    /// Spherical-wave steering vector for subcarrier q toward point p.
    ///
    /// [a_q(p)]_n = (lambda_q d) / (lambda_o d_n) * exp(-j 2 pi d_n / lambda_q)
    /// with d the range from the array reference and d_n from element n.
    void near_field(int q, const Vec3& p, CVector& out) const {
        const Vec3 r = p - geom_.origin;
        const double d = r.norm();
        const double lq = grid_.wavelength(q);
        const double lo = geom_.wavelength();
        const double k = 2.0 * kPi / lq;
        const double amp0 = lq * d / lo;
        out.resize(size());
        const double ry2 = r.y() * r.y();
        for (int ix = 0; ix < geom_.n_x; ++ix) {
            const double dx = r.x() - ox_[ix];
            const double base = dx * dx + ry2;
            for (int iz = 0; iz < geom_.n_z; ++iz) {
                const double dz = r.z() - oz_[iz];
                const double dn = std::sqrt(base + dz * dz);
                if (!(dn > 1e-12))
                    throw Error("singular range");
                out[geom_.index(ix, iz)] = (amp0 / dn) * unit_phasor(-k * dn);
            }
        }
    }

    [[nodiscard]] CVector near_field(int q, const Vec3& p) const {
        CVector v;
        near_field(q, p, v);
        return v;
    }

    /// All Q spherical steering vectors toward p as the columns of an N_BS x Q matrix.
    ///
    /// Uses exp(-j 2 pi d_n f_q / c) = exp(-j 2 pi d_n f_o / c) * exp(-j 2 pi d_n W_sub / c)^q,
    /// so each element needs two phasors instead of Q.
    void near_field_band(const Vec3& p, CMatrix& out) const {
        const Vec3 r = p - geom_.origin;
        const double d = r.norm();
        const int Q = grid_.q_count;
        const double c = grid_.speed_of_light;
        const double k0 = 2.0 * kPi * grid_.carrier_freq / c;
        const double ks = 2.0 * kPi * grid_.sub_spacing / c;
        const double lo = geom_.wavelength();
        out.resize(size(), Q);
        amp_.resize(static_cast<std::size_t>(Q));
        for (int q = 0; q < Q; ++q)
            amp_[q] = grid_.wavelength(q) * d / lo;
        const double ry2 = r.y() * r.y();
        for (int ix = 0; ix < geom_.n_x; ++ix) {
            const double dx = r.x() - ox_[ix];
            const double base = dx * dx + ry2;
            for (int iz = 0; iz < geom_.n_z; ++iz) {
                const double dz = r.z() - oz_[iz];
                const double dn = std::sqrt(base + dz * dz);
                if (!(dn > 1e-12))
                    throw Error("singular range");
                const int n = geom_.index(ix, iz);
                const cd step = unit_phasor(-ks * dn);
                cd ph = unit_phasor(-k0 * dn);
                const double inv = 1.0 / dn;
                for (int q = 0; q < Q; ++q) {
                    out(n, q) = (amp_[q] * inv) * ph;
                    ph *= step;
                }
            }
        }
    }

    /// Planar-wave steering vector at the carrier wavelength.
    ///
    /// [a~(az, el)]_n = exp(+j 2 pi / lambda_o (p_n - p_BS) . u(az, el)); the sign
    /// matches the first-order expansion of the spherical phase.
    void far_field(double az, double el, CVector& out) const {
        const double k = 2.0 * kPi / geom_.wavelength();
        const double ux = std::cos(el) * std::sin(az);
        const double uz = std::sin(el);
        ax_.resize(ox_.size());
        az_.resize(oz_.size());
        for (std::size_t i = 0; i < ox_.size(); ++i)
            ax_[i] = unit_phasor(k * ox_[i] * ux);
        for (std::size_t i = 0; i < oz_.size(); ++i)
            az_[i] = unit_phasor(k * oz_[i] * uz);
        out.resize(size());
        for (int ix = 0; ix < geom_.n_x; ++ix)
            for (int iz = 0; iz < geom_.n_z; ++iz)
                out[geom_.index(ix, iz)] = ax_[ix] * az_[iz];
    }

    [[nodiscard]] CVector far_field(double az, double el) const {
        CVector v;
        far_field(az, el, v);
        return v;
    }

private:
    ArrayGeometry geom_;
    OfdmGrid grid_;
    std::vector<double> ox_, oz_;
    mutable std::vector<cd> ax_, az_; // scratch; a SteeringModel is not shared across threads
    mutable std::vector<double> amp_;
};

inline CVector nf_steering(const ArrayGeometry& geom, const OfdmGrid& grid, int q, const Vec3& p) {
    return SteeringModel(geom, grid).near_field(q, p);
}

inline CVector ff_steering(const ArrayGeometry& geom, double az, double el) {
    require(std::abs(el) < kPi / 2, "ff_steering: |el| must be below pi/2");
    const OfdmGrid carrier = OfdmGrid::make(1, 1.0, 1.0, geom.carrier_freq, geom.speed_of_light);
    return SteeringModel(geom, carrier).far_field(az, el);
}

/// [t(d)]_q = exp(-j 2 pi q W_sub d / c_o), q = 0 .. Q-1.
inline void subcarrier_phase_vector(const OfdmGrid& grid, double d, CVector& out) {
    out.resize(grid.q_count);
    const double step = -2.0 * kPi * grid.sub_spacing * d / grid.speed_of_light;
    for (int q = 0; q < grid.q_count; ++q)
        out[q] = unit_phasor(step * q);
}

inline CVector subcarrier_phase_vector(const OfdmGrid& grid, double d) {
    CVector t;
    subcarrier_phase_vector(grid, d, t);
    return t;
}

inline PathGain path_gain(const ArrayGeometry& geom, double d, double phase_offset) {
    if (!(d > 0.0))
        throw Error("path_gain: range must be positive");
    const double mag = geom.wavelength() / (4.0 * kPi * d);
    return {d, phase_offset, mag * unit_phasor(-phase_offset)};
}

// ---------------------------------------------------------------------------
// Channel matrices
// ---------------------------------------------------------------------------

/// Exact spherical-wavefront channel; column q is beta * a_q(p).
inline ChannelMatrix nf_channel(const SteeringModel& model, const Vec3& p, double phase_offset) {
    const double d = (p - model.geometry().origin).norm();
    const cd beta = path_gain(model.geometry(), d, phase_offset).value;
    const int Q = model.grid().q_count;
    ChannelMatrix h{CMatrix(model.size(), Q), Scheme::near_field};
    CVector col;
    for (int q = 0; q < Q; ++q) {
        model.near_field(q, p, col);
        h.entries.col(q) = beta * col;
    }
    return h;
}

inline ChannelMatrix nf_channel(const ArrayGeometry& geom, const OfdmGrid& grid, const Vec3& p,
                                double phase_offset) {
    return nf_channel(SteeringModel(geom, grid), p, phase_offset);
}

/// Planar-wave channel beta * a~(theta) t(d)^T; rank one by construction.
inline ChannelMatrix ff_channel(const SteeringModel& model, const Vec3& p, double phase_offset) {
    const SphericalPose pose = spherical_from_cartesian(p, model.geometry().origin);
    const cd beta = path_gain(model.geometry(), pose.dof, phase_offset).value;
    const CVector a = model.far_field(pose.az, pose.el);
    const CVector t = subcarrier_phase_vector(model.grid(), pose.dof);
    return {beta * a * t.transpose(), Scheme::far_field};
}

inline ChannelMatrix ff_channel(const ArrayGeometry& geom, const OfdmGrid& grid, const Vec3& p,
                                double phase_offset) {
    return ff_channel(SteeringModel(geom, grid), p, phase_offset);
}

/// ||a - b||_F / ||b||_F
inline double relative_gap(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / b.norm(); }

/// Relative Frobenius gap after removing the best common phase between a and b.
///
/// The synchronization offset already makes the absolute phase of a channel
/// unobservable, so this is the gap that matters for model comparison.
inline double phase_aligned_gap(const CMatrix& a, const CMatrix& b) {
    const double na2 = a.squaredNorm();
    const double nb2 = b.squaredNorm();
    const double cross = std::abs(a.cwiseProduct(b.conjugate()).sum());
    return std::sqrt(std::max(0.0, na2 + nb2 - 2.0 * cross)) / std::sqrt(nb2);
}

} // namespace nfloc
