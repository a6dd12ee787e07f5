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
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace nfloc {

using Vec3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 2.99792458e8;
// Rounded value that makes c/W_sub and 2D^2/lambda come out as round numbers.
inline constexpr double kRoundSpeedOfLight = 3.0e8;

inline constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Array geometry
// ---------------------------------------------------------------------------

enum class ApertureRule {
    max_side_diagonal, // sqrt(2) * max(n_x, n_z) * spacing
    true_diagonal,     // sqrt(n_x^2 + n_z^2) * spacing
};

/// Wall-mounted uniform planar array in the x-z plane, boresight along +y.
///
/// Element (i_x, i_z) sits at origin + [(i_x - (n_x-1)/2) d, 0, (i_z - (n_z-1)/2) d]
/// so the reference point is the array centroid.
struct ArrayGeometry {
    int n_x = 1;
    int n_z = 1;
    double spacing = 0.0; // meters
    Vec3 origin = Vec3::Zero();
    double carrier_freq = 0.0; // Hz
    double speed_of_light = kSpeedOfLight;

    [[nodiscard]] double wavelength() const { return speed_of_light / carrier_freq; }
    [[nodiscard]] int size() const { return n_x * n_z; }

    /// Flat element index; i_x is the slow (row) index.
    [[nodiscard]] int index(int i_x, int i_z) const { return i_x * n_z + i_z; }

    [[nodiscard]] double offset_x(int i_x) const { return (i_x - 0.5 * (n_x - 1)) * spacing; }
    [[nodiscard]] double offset_z(int i_z) const { return (i_z - 0.5 * (n_z - 1)) * spacing; }

    void validate() const {
        require(n_x >= 1 && n_z >= 1, "array: element counts must be >= 1");
        require(spacing > 0.0, "array: spacing must be positive");
        require(carrier_freq > 0.0 && speed_of_light > 0.0, "array: carrier frequency must be positive");
    }

    /// Half-wavelength spaced array at the given carrier.
    static ArrayGeometry half_wavelength(int n_x, int n_z, const Vec3& origin, double carrier_freq,
                                         double speed_of_light = kSpeedOfLight) {
        ArrayGeometry g;
        g.n_x = n_x;
        g.n_z = n_z;
        g.origin = origin;
        g.carrier_freq = carrier_freq;
        g.speed_of_light = speed_of_light;
        g.spacing = 0.5 * g.wavelength();
        g.validate();
        return g;
    }
};

/// Cylindrical serviced region around the array.
struct Region {
    double d_min = 1.0;
    double d_max = 30.0;
    double az_min = -kPi / 4;
    double az_max = kPi / 4;
    double z_min = 1.0;
    double z_max = 1.5;

    void validate() const {
        require(d_min > 0.0 && d_min < d_max, "region: need 0 < d_min < d_max");
        require(az_min < az_max, "region: need az_min < az_max");
        require(z_min <= z_max, "region: need z_min <= z_max");
    }

    /// Height displacement bounds relative to a reference height.
    [[nodiscard]] double dz_min(double ref_z) const { return z_min - ref_z; }
    [[nodiscard]] double dz_max(double ref_z) const { return z_max - ref_z; }
};

/// Range, azimuth (from +y toward +x) and elevation (above the x-y plane).
struct SphericalPose {
    double dof = 0.0;
    double az = 0.0;
    double el = 0.0;
};

/// Unit direction for (az, el).
inline Vec3 direction(double az, double el) {
    return {std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)};
}

inline std::vector<Vec3> element_positions(const ArrayGeometry& geom) {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(geom.size()));
    for (int ix = 0; ix < geom.n_x; ++ix)
        for (int iz = 0; iz < geom.n_z; ++iz)
            out.push_back(geom.origin + Vec3(geom.offset_x(ix), 0.0, geom.offset_z(iz)));
    return out;
}

inline Vec3 cartesian_from_spherical(const SphericalPose& pose, const Vec3& origin) {
    return origin + pose.dof * direction(pose.az, pose.el);
}

inline SphericalPose spherical_from_cartesian(const Vec3& p, const Vec3& origin) {
    const Vec3 r = p - origin;
    const double d = r.norm();
    if (!(d > 0.0))
        throw Error("zero range");
    // Clamp guards asin against |dz|/d exceeding 1 by rounding.
    const double s = std::clamp(r.z() / d, -1.0, 1.0);
    return {d, std::atan2(r.x(), r.y()), std::asin(s)};
}

/// True when the pose sits on the |el| = pi/2 boundary, where azimuth is undefined.
inline bool on_elevation_pole(const SphericalPose& pose, double tol = 1e-12) {
    return std::abs(std::abs(pose.el) - kPi / 2) <= tol;
}

inline double aperture(const ArrayGeometry& geom, ApertureRule rule = ApertureRule::max_side_diagonal) {
    if (rule == ApertureRule::true_diagonal)
        return std::hypot(double(geom.n_x), double(geom.n_z)) * geom.spacing;
    return std::sqrt(2.0) * std::max(geom.n_x, geom.n_z) * geom.spacing;
}

/// 2 D^2 / lambda for the chosen aperture convention.
inline double fraunhofer_distance(const ArrayGeometry& geom,
                                  ApertureRule rule = ApertureRule::max_side_diagonal) {
    if (rule == ApertureRule::true_diagonal) {
        const double n2 = double(geom.n_x) * geom.n_x + double(geom.n_z) * geom.n_z;
        return 2.0 * n2 * geom.spacing * geom.spacing / geom.wavelength();
    }
    // 2 * (sqrt(2) n s)^2 / lambda, written without the sqrt to avoid rounding.
    const double n = std::max(geom.n_x, geom.n_z);
    return 4.0 * n * n * geom.spacing * geom.spacing / geom.wavelength();
}

/// Elevation bracket of a region at range d (height bounds mapped through asin(dz/d)).
inline std::pair<double, double> elevation_bounds(const Region& region, double ref_z, double d) {
    const double lim = 1.0 - 1e-12;
    const double lo = std::asin(std::clamp(region.dz_min(ref_z) / d, -lim, lim));
    const double hi = std::asin(std::clamp(region.dz_max(ref_z) / d, -lim, lim));
    return {lo, hi};
}

inline bool inside(const Region& region, const Vec3& p, const Vec3& origin, double tol = 1e-9) {
    const Vec3 r = p - origin;
    const double d = r.norm();
    const double az = std::atan2(r.x(), r.y());
    return d >= region.d_min - tol && d <= region.d_max + tol && az >= region.az_min - tol &&
           az <= region.az_max + tol && p.z() >= region.z_min - tol && p.z() <= region.z_max + tol;
}

} // namespace nfloc
