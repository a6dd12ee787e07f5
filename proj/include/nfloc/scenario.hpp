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

#include <cstdint>
#include <random>
#include <string>

#include "beambook.hpp"
#include "estimators.hpp"
#include "geometry.hpp"
#include "ofdm_channel.hpp"
#include "receiver.hpp"

namespace nfloc {

/// Constants of one simulated deployment (array size, numerology, region).
struct ScenarioPreset {
    std::string name = "A";
    int n_x = 24;
    int n_z = 24;
    double fd = 7.2; // tabulated Fraunhofer distance, m
    double z_min = 1.0;
    double z_max = 1.5;
    double d_min = 1.0;
    double d_max = 30.0;

    int j1 = 21;
    int j2 = 84;
    int q_count = 12;
    double sub_bw = 15e3;
    double sub_spacing = 750e3;
    double total_bw = 8.265e6;
    double carrier_freq = 24e9;
    double spacing_in_wavelengths = 0.5;
    double az_min = -kPi / 4;
    double az_max = kPi / 4;
    double noise_figure_db = 10.0;
    double noise_density_dbm_hz = -174.0;
    Vec3 bs_position{0.0, 0.0, 2.0};
    double speed_of_light = kRoundSpeedOfLight;
    double tx_power_dbm = 20.0;

    // Focus-grid factorization of the beam-focusing book (n_range * n_az * n_el = J2).
    int nf_rings = 4;
    int nf_az = 21;
    int nf_el = 1;
};

inline ScenarioPreset scenario_preset(const std::string& name) {
    ScenarioPreset p;
    p.name = name;
    if (name == "A")
        return p;
    if (name == "B") {
        p.n_x = p.n_z = 16;
        p.fd = 3.2;
        p.d_min = 0.5;
        p.d_max = 15.0;
        return p;
    }
    if (name == "C") {
        p.n_x = 16;
        p.n_z = 8;
        p.fd = 3.2;
        p.z_min = 1.0;
        p.z_max = 2.0;
        p.d_min = 0.5;
        p.d_max = 15.0;
        return p;
    }
    throw UsageError("unknown scenario '" + name + "' (expected A, B or C)");
}

/// Everything needed to simulate and estimate in one scenario.
class Scenario {
public:
    explicit Scenario(ScenarioPreset preset, SearchConfig search = {})
        : preset_(std::move(preset)),
          geom_(make_geometry(preset_)),
          grid_(OfdmGrid::make(preset_.q_count, preset_.sub_bw, preset_.sub_spacing, preset_.carrier_freq,
                               preset_.speed_of_light)),
          region_{preset_.d_min, preset_.d_max, preset_.az_min, preset_.az_max, preset_.z_min, preset_.z_max},
          model_(geom_, grid_),
          ff_book_(design_ff_beambook(model_, region_, preset_.j1)),
          nf_book_(design_nf_beambook(model_, region_, preset_.nf_rings, preset_.nf_az, preset_.nf_el)),
          search_(search),
          noise_var_(noise_variance(grid_, preset_.noise_figure_db, preset_.noise_density_dbm_hz)),
          tx_power_(dbm_to_watts(preset_.tx_power_dbm)) {
        region_.validate();
        require(nf_book_.beams() == preset_.j2 || preset_.j2 <= 0,
                "scenario: focus grid " + std::to_string(preset_.nf_rings) + "x" + std::to_string(preset_.nf_az) +
                    "x" + std::to_string(preset_.nf_el) + " does not give J2 = " + std::to_string(preset_.j2));
    }

    [[nodiscard]] const ScenarioPreset& preset() const { return preset_; }
    [[nodiscard]] const ArrayGeometry& geometry() const { return geom_; }
    [[nodiscard]] const OfdmGrid& grid() const { return grid_; }
    [[nodiscard]] const Region& region() const { return region_; }
    [[nodiscard]] const SteeringModel& model() const { return model_; }
    [[nodiscard]] const BeamBook& book(Scheme s) const { return s == Scheme::far_field ? ff_book_ : nf_book_; }
    [[nodiscard]] const SearchConfig& search() const { return search_; }
    [[nodiscard]] double noise_var() const { return noise_var_; }
    [[nodiscard]] double tx_power() const { return tx_power_; }
    [[nodiscard]] double fraunhofer() const { return fraunhofer_distance(geom_); }

    void set_noise_var(double v) { noise_var_ = v; }
    void set_tx_power(double w) { tx_power_ = w; }

    /// Simulate one sweep of scheme `s` against the exact channel at `p`.
    template <class Rng>
    RxSnapshot sweep(Scheme s, const Vec3& p, Rng& rng) const {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
        const ChannelMatrix h = nf_channel(model_, p, phase(rng));
        return simulate_rx(h, book(s), tx_power_, noise_var_, rng);
    }

    [[nodiscard]] PositionEstimate localize(Scheme s, const RxSnapshot& rx) const {
        return s == Scheme::far_field ? localize_ff(rx, ff_book_, search_, model_, region_)
                                      : localize_nf(rx, nf_book_, search_, model_, region_);
    }

    /// Sweep and estimate with a generator seeded from `seed`.
    [[nodiscard]] PositionEstimate run(Scheme s, const Vec3& p, std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        return localize(s, sweep(s, p, rng));
    }

private:
    static ArrayGeometry make_geometry(const ScenarioPreset& p) {
        ArrayGeometry g;
        g.n_x = p.n_x;
        g.n_z = p.n_z;
        g.origin = p.bs_position;
        g.carrier_freq = p.carrier_freq;
        g.speed_of_light = p.speed_of_light;
        g.spacing = p.spacing_in_wavelengths * g.wavelength();
        g.validate();
        return g;
    }

    ScenarioPreset preset_;
    ArrayGeometry geom_;
    OfdmGrid grid_;
    Region region_;
    SteeringModel model_;
    BeamBook ff_book_;
    BeamBook nf_book_;
    SearchConfig search_;
    double noise_var_;
    double tx_power_;
};

/// Deterministic per-stream seed from a master seed and a counter path.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{std::uint32_t(master), std::uint32_t(master >> 32), std::uint32_t(stream),
                      std::uint32_t(stream >> 32), std::uint32_t(index), std::uint32_t(index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (std::uint64_t(out[0]) << 32) | out[1];
}

/// UE placement at 3-D range d with the given azimuth and height.
inline Vec3 place_ue(const Vec3& bs, double d, double az, double z) {
    const double dz = z - bs.z();
    const double horiz = std::sqrt(std::max(0.0, d * d - dz * dz));
    return bs + Vec3(horiz * std::sin(az), horiz * std::cos(az), dz);
}

} // namespace nfloc
