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

#include <cmath>
#include <iomanip>
#include <ostream>
#include <vector>

#include "geometry.hpp"
#include "ofdm_channel.hpp"

namespace nfloc {

enum class ColumnNorm { unit, raw };

/// Precoding matrix F (N_BS x J) plus what each beam was designed for.
struct BeamBook {
    CMatrix matrix;
    Scheme scheme = Scheme::far_field;
    ColumnNorm column_norm = ColumnNorm::unit;
    std::vector<double> steer_az;    // FF: steering azimuth per beam
    std::vector<Vec3> focus_points;  // NF: focus point per beam
    std::vector<SphericalPose> focus_poses;

    [[nodiscard]] int beams() const { return static_cast<int>(matrix.cols()); }
    [[nodiscard]] int rows() const { return static_cast<int>(matrix.rows()); }
};

/// n points spread uniformly over [lo, hi], endpoints included; a single
/// point goes to the middle.
inline std::vector<double> uniform_points(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = 0.5 * (lo + hi);
        return out;
    }
    for (int i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * i / (n - 1);
    return out;
}

/// Geometric counterpart of uniform_points; a single point is the geometric mean.
inline std::vector<double> geometric_points(double lo, double hi, int n) {
    std::vector<double> out = uniform_points(std::log(lo), std::log(hi), n);
    for (double& v : out)
        v = std::exp(v);
    return out;
}

inline void normalize_columns(CMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        m.col(j).normalize();
}

/// Beam-steering book: J1 azimuths spread over the region at zero elevation.
inline BeamBook design_ff_beambook(const SteeringModel& model, const Region& region, int j1,
                                   ColumnNorm norm = ColumnNorm::unit) {
    require(j1 >= 2, "ff beambook: need at least two beams to span the azimuth interval");
    region.validate();
    BeamBook book;
    book.scheme = Scheme::far_field;
    book.column_norm = norm;
    book.steer_az = uniform_points(region.az_min, region.az_max, j1);
    book.matrix.resize(model.size(), j1);
    CVector a;
    for (int j = 0; j < j1; ++j) {
        model.far_field(book.steer_az[j], 0.0, a);
        book.matrix.col(j) = a;
    }
    if (norm == ColumnNorm::unit)
        normalize_columns(book.matrix);
    return book;
}

inline BeamBook design_ff_beambook(const ArrayGeometry& geom, const OfdmGrid& grid, const Region& region,
                                   int j1, ColumnNorm norm = ColumnNorm::unit) {
    return design_ff_beambook(SteeringModel(geom, grid), region, j1, norm);
}

/// Beam-focusing book on a range x azimuth x elevation grid of focus points.
///
/// Ranges are geometric over [d_min, d_max] so rings crowd toward the array;
/// elevations are spread per ring over asin(dz / d_j) for the region's height span.
/// Columns are first-subcarrier spherical steering vectors.
inline BeamBook design_nf_beambook(const SteeringModel& model, const Region& region, int n_range, int n_az,
                                   int n_el, ColumnNorm norm = ColumnNorm::unit) {
    require(n_range >= 1 && n_az >= 1 && n_el >= 1, "nf beambook: empty focus grid");
    region.validate();
    const Vec3& origin = model.geometry().origin;
    BeamBook book;
    book.scheme = Scheme::near_field;
    book.column_norm = norm;
    const auto ranges = geometric_points(region.d_min, region.d_max, n_range);
    const auto azs = uniform_points(region.az_min, region.az_max, n_az);
    const int J = n_range * n_az * n_el;
    book.matrix.resize(model.size(), J);
    CVector a;
    int j = 0;
    for (double d : ranges) {
        const auto [el_lo, el_hi] = elevation_bounds(region, origin.z(), d);
        const auto els = uniform_points(el_lo, el_hi, n_el);
        for (double az : azs) {
            for (double el : els) {
                const SphericalPose pose{d, az, el};
                const Vec3 p = cartesian_from_spherical(pose, origin);
                model.near_field(0, p, a);
                book.matrix.col(j++) = a;
                book.focus_points.push_back(p);
                book.focus_poses.push_back(pose);
            }
        }
    }
    if (norm == ColumnNorm::unit)
        normalize_columns(book.matrix);
    return book;
}

inline BeamBook design_nf_beambook(const ArrayGeometry& geom, const OfdmGrid& grid, const Region& region,
                                   int n_range, int n_az, int n_el, ColumnNorm norm = ColumnNorm::unit) {
    return design_nf_beambook(SteeringModel(geom, grid), region, n_range, n_az, n_el, norm);
}

/// One row per beam: scheme, index, steering azimuth or focus point.
inline void write_csv(std::ostream& os, const BeamBook& book) {
    os << "scheme,index,az,el,dof,x,y,z\n";
    os << std::setprecision(12);
    for (int j = 0; j < book.beams(); ++j) {
        os << to_string(book.scheme) << ',' << j << ',';
        if (book.scheme == Scheme::far_field) {
            os << book.steer_az[j] << ",0,,,,\n";
        } else {
            const auto& s = book.focus_poses[j];
            const auto& p = book.focus_points[j];
            os << s.az << ',' << s.el << ',' << s.dof << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
        }
    }
}

} // namespace nfloc
