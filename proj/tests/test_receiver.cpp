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
#include <sstream>

#include <gtest/gtest.h>

#include "nfloc/receiver.hpp"
#include "nfloc/scenario.hpp"

using namespace nfloc;

namespace {

const Scenario& scenario_a() {
    static const Scenario s(scenario_preset("A"));
    return s;
}

} // namespace

TEST(NoiseVariance, PresetValue) {
    const double w = noise_variance(scenario_a().grid(), 10.0, -174.0);
    EXPECT_NEAR(watts_to_dbm(w), -174.0 + 10 * std::log10(15e3) + 10.0, 1e-12);
    EXPECT_NEAR(watts_to_dbm(w), -122.24, 5e-3);
    EXPECT_NEAR(w, 5.97e-16, 0.01e-16);
}

TEST(NoiseVariance, DensityAndBandwidthScaling) {
    const OfdmGrid one_hz = OfdmGrid::make(1, 1.0, 1.0, 24e9);
    EXPECT_NEAR(watts_to_dbm(noise_variance(one_hz, 0.0, -174.0)), -174.0, 1e-12);
    const OfdmGrid a = OfdmGrid::make(12, 15e3, 750e3, 24e9), b = OfdmGrid::make(12, 30e3, 750e3, 24e9);
    EXPECT_NEAR(watts_to_dbm(noise_variance(b, 10, -174)) - watts_to_dbm(noise_variance(a, 10, -174)), 3.0103, 1e-4);
}

TEST(SimulateRx, ZeroChannelZeroNoise) {
    const auto& s = scenario_a();
    const ChannelMatrix h{CMatrix::Zero(576, 12), Scheme::near_field};
    const RxSnapshot rx = simulate_rx(h, s.book(Scheme::far_field), 0.1, 0.0, 1);
    EXPECT_EQ(rx.y.rows(), 21);
    EXPECT_EQ(rx.y.cols(), 12);
    EXPECT_EQ(rx.y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SimulateRx, MatchesDefinitionWithoutNoise) {
    const auto& s = scenario_a();
    const BeamBook& b = s.book(Scheme::near_field);
    const ChannelMatrix h = nf_channel(s.model(), place_ue(s.geometry().origin, 5, 0.1, 1.2), 0.4);
    const RxSnapshot rx = simulate_rx(h, b, 0.1, 0.0, 1);
    for (int j : {0, 40, 83})
        for (int q : {0, 11})
            EXPECT_LT(std::abs(rx.y(j, q) - std::sqrt(0.1) * b.matrix.col(j).dot(h.entries.col(q))), 1e-18);
}

TEST(SimulateRx, MatchedFocusRowIsStrongest) {
    const auto& s = scenario_a();
    const BeamBook& b = s.book(Scheme::near_field);
    for (int j : {5, 30, 63}) {
        const RxSnapshot rx = simulate_rx(nf_channel(s.model(), b.focus_points[j], 0.9), b, s.tx_power(), 0.0, 2);
        Eigen::Index best = 0;
        const Eigen::VectorXd norms = rx.y.rowwise().norm();
        norms.maxCoeff(&best);
        EXPECT_EQ(best, j);
        for (int i = 0; i < b.beams(); ++i)
            if (i != j)
                EXPECT_LT(norms[i], norms[j]);
    }
}

TEST(SimulateRx, NoiseOnlyMoment) {
    const auto& s = scenario_a();
    const ChannelMatrix h{CMatrix::Zero(576, 12), Scheme::near_field};
    const double var = 2.5e-3;
    double acc = 0.0;
    long n = 0;
    std::mt19937_64 rng(77);
    while (n < 100000) {
        const RxSnapshot rx = simulate_rx(h, s.book(Scheme::near_field), 0.0, var, rng);
        acc += rx.y.cwiseAbs2().sum();
        n += rx.y.size();
    }
    EXPECT_NEAR(acc / double(n) / var, 1.0, 0.05);
}

TEST(SimulateRx, AmplitudeIsLinearInSqrtPower) {
    const auto& s = scenario_a();
    const ChannelMatrix h = nf_channel(s.model(), place_ue(s.geometry().origin, 8, -0.3, 1.0), 0.2);
    const RxSnapshot a = simulate_rx(h, s.book(Scheme::far_field), 0.05, 0.0, 1);
    const RxSnapshot b = simulate_rx(h, s.book(Scheme::far_field), 0.2, 0.0, 1);
    EXPECT_LT((b.y - 2.0 * a.y).cwiseAbs().maxCoeff(), 1e-15 * a.y.cwiseAbs().maxCoeff() + 1e-30);
}

TEST(SimulateRx, SeedReproducibility) {
    const auto& s = scenario_a();
    const ChannelMatrix h = nf_channel(s.model(), place_ue(s.geometry().origin, 8, -0.3, 1.0), 0.2);
    const RxSnapshot a = simulate_rx(h, s.book(Scheme::far_field), s.tx_power(), s.noise_var(), 123);
    const RxSnapshot b = simulate_rx(h, s.book(Scheme::far_field), s.tx_power(), s.noise_var(), 123);
    const RxSnapshot c = simulate_rx(h, s.book(Scheme::far_field), s.tx_power(), s.noise_var(), 124);
    EXPECT_EQ(a.y, b.y);
    EXPECT_NE(a.y, c.y);
    std::ostringstream oa, ob;
    write_csv(oa, a);
    write_csv(ob, b);
    EXPECT_EQ(oa.str(), ob.str());
}

TEST(SimulateRx, DimensionMismatchThrows) {
    const auto& s = scenario_a();
    const ChannelMatrix h{CMatrix::Zero(100, 12), Scheme::near_field};
    EXPECT_THROW((void)simulate_rx(h, s.book(Scheme::far_field), 1.0, 0.0, 1), Error);
}

TEST(SnapshotCsv, RoundTripIsExact) {
    const auto& s = scenario_a();
    const ChannelMatrix h = nf_channel(s.model(), place_ue(s.geometry().origin, 3, 0.2, 1.4), 1.0);
    const RxSnapshot a = simulate_rx(h, s.book(Scheme::near_field), s.tx_power(), s.noise_var(), 5);
    std::stringstream ss;
    write_csv(ss, a);
    const RxSnapshot b = read_rx_csv(ss);
    EXPECT_EQ(b.scheme, Scheme::near_field);
    EXPECT_EQ(b.noise_var, a.noise_var);
    EXPECT_EQ(b.tx_power, a.tx_power);
    EXPECT_EQ(b.y, a.y);
}

TEST(SnapshotCsv, RejectsTruncatedInput) {
    std::istringstream is("# scheme=FF noise_var=0 tx_power=1 rows=2 cols=2\nj,q,re,im\n0,0,1,0\n");
    EXPECT_THROW((void)read_rx_csv(is), Error);
    std::istringstream no_meta("j,q,re,im\n");
    EXPECT_THROW((void)read_rx_csv(no_meta), Error);
}
