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


#include <random>

#include <gtest/gtest.h>

#include "nfloc/geometry.hpp"
#include "nfloc/scenario.hpp"

using namespace nfloc;

namespace {

ArrayGeometry preset_geometry(const std::string& name) { return Scenario(scenario_preset(name)).geometry(); }

} // namespace

TEST(ElementPositions, SingleElementSitsAtOrigin) {
    ArrayGeometry g;
    g.spacing = 0.01;
    g.carrier_freq = 24e9;
    g.origin = Vec3(1, 2, 3);
    const auto p = element_positions(g);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0], g.origin);
}

TEST(ElementPositions, TwoElementsSymmetric) {
    ArrayGeometry g;
    g.n_x = 2;
    g.spacing = 0.00625;
    g.carrier_freq = 24e9;
    g.origin = Vec3(0, 0, 2);
    const auto p = element_positions(g);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NEAR((p[0] - Vec3(-0.003125, 0, 2)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((p[1] - Vec3(0.003125, 0, 2)).norm(), 0.0, 1e-15);
}

TEST(ElementPositions, CentroidAndRowMajorOrder) {
    const ArrayGeometry g = preset_geometry("A");
    const auto p = element_positions(g);
    ASSERT_EQ(p.size(), 576u);
    Vec3 sum = Vec3::Zero();
    for (const auto& v : p)
        sum += v;
    EXPECT_LT((sum / double(p.size()) - g.origin).norm(), 1e-12);
    // Flat index ix * n_z + iz: consecutive entries step along z.
    EXPECT_NEAR(p[1].z() - p[0].z(), g.spacing, 1e-15);
    EXPECT_NEAR(p[g.n_z].x() - p[0].x(), g.spacing, 1e-15);
    for (const auto& v : p)
        EXPECT_EQ(v.y(), g.origin.y());
}

TEST(Spherical, ForwardExamples) {
    const Vec3 o(0, 0, 2);
    EXPECT_LT((cartesian_from_spherical({5, 0, 0}, o) - Vec3(0, 5, 2)).norm(), 1e-12);
    EXPECT_LT((cartesian_from_spherical({7.0710678, kPi / 4, 0}, o) - Vec3(5, 5, 2)).norm(), 1e-6);
}

TEST(Spherical, InverseExamples) {
    const Vec3 o(0, 0, 2);
    const auto a = spherical_from_cartesian(Vec3(0, 5, 1), o);
    EXPECT_NEAR(a.dof, std::sqrt(26.0), 1e-12);
    EXPECT_NEAR(a.el, std::asin(-1 / std::sqrt(26.0)), 1e-12);
    EXPECT_NEAR(a.el, -0.19740, 1e-5);
    EXPECT_NEAR(a.az, 0.0, 1e-15);
    const auto b = spherical_from_cartesian(Vec3(0, 5, 2), o);
    EXPECT_DOUBLE_EQ(b.dof, 5.0);
    EXPECT_DOUBLE_EQ(b.az, 0.0);
    EXPECT_DOUBLE_EQ(b.el, 0.0);
}

TEST(Spherical, PoleIsFlagged) {
    const Vec3 o(0, 0, 2);
    const auto p = spherical_from_cartesian(Vec3(0, 0, 5), o);
    EXPECT_DOUBLE_EQ(p.el, kPi / 2);
    EXPECT_TRUE(on_elevation_pole(p));
    EXPECT_FALSE(on_elevation_pole(spherical_from_cartesian(Vec3(0, 1, 5), o)));
}

TEST(Spherical, CoincidentPointThrows) {
    try {
        (void)spherical_from_cartesian(Vec3(0, 0, 2), Vec3(0, 0, 2));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("zero range"), std::string::npos);
    }
}

TEST(Spherical, RoundTripOverRegion) {
    const Region r;
    const Vec3 o(0, 0, 2);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(r.d_min, r.d_max), az(r.az_min, r.az_max), z(r.z_min, r.z_max);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double dd = d(rng);
        const double zz = std::clamp(z(rng), o.z() - 0.99 * dd, o.z() + 0.99 * dd);
        const Vec3 p = place_ue(o, dd, az(rng), zz);
        worst = std::max(worst, (cartesian_from_spherical(spherical_from_cartesian(p, o), o) - p).norm());
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Fraunhofer, PresetValues) {
    EXPECT_DOUBLE_EQ(fraunhofer_distance(preset_geometry("A")), 7.2);
    EXPECT_DOUBLE_EQ(fraunhofer_distance(preset_geometry("B")), 3.2);
    EXPECT_DOUBLE_EQ(fraunhofer_distance(preset_geometry("C")), 3.2);
}

TEST(Fraunhofer, TrueDiagonalRuleForRectangularArray) {
    EXPECT_NEAR(fraunhofer_distance(preset_geometry("C"), ApertureRule::true_diagonal), 2.0, 1e-12);
}

TEST(Fraunhofer, QuadraticInElementCount) {
    for (int n : {1, 3, 8, 12}) {
        const auto g1 = ArrayGeometry::half_wavelength(n, n, Vec3(0, 0, 2), 24e9);
        const auto g2 = ArrayGeometry::half_wavelength(2 * n, 2 * n, Vec3(0, 0, 2), 24e9);
        EXPECT_NEAR(fraunhofer_distance(g2) / fraunhofer_distance(g1), 4.0, 1e-12);
    }
}

TEST(RegionTest, ValidationAndMembership) {
    Region r;
    EXPECT_NO_THROW(r.validate());
    r.d_min = 0.0;
    EXPECT_THROW(r.validate(), Error);
    r = Region{};
    r.az_min = r.az_max;
    EXPECT_THROW(r.validate(), Error);
    r = Region{};
    const Vec3 o(0, 0, 2);
    EXPECT_TRUE(inside(r, place_ue(o, 10, 0.1, 1.2), o));
    EXPECT_FALSE(inside(r, place_ue(o, 40, 0.1, 1.2), o));
    EXPECT_FALSE(inside(r, place_ue(o, 10, 1.0, 1.2), o));
    EXPECT_FALSE(inside(r, place_ue(o, 10, 0.1, 1.8), o));
}

TEST(RegionTest, ElevationBoundsFollowHeightSpan) {
    const Region r;
    const auto [lo, hi] = elevation_bounds(r, 2.0, 10.0);
    EXPECT_NEAR(lo, std::asin(-1.0 / 10.0), 1e-15);
    EXPECT_NEAR(hi, std::asin(-0.5 / 10.0), 1e-15);
}
