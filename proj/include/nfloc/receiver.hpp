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
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "beambook.hpp"
#include "ofdm_channel.hpp"

namespace nfloc {

/// Received pilot matrix Y (J x Q) for one beam sweep.
struct RxSnapshot {
    CMatrix y;
    Scheme scheme = Scheme::far_field;
    double noise_var = 0.0; // W
    double tx_power = 0.0;  // W
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Thermal noise power over one subcarrier's occupied bandwidth W_o.
inline double noise_variance(const OfdmGrid& grid, double noise_figure_db, double noise_density_dbm_hz) {
    return dbm_to_watts(noise_density_dbm_hz + 10.0 * std::log10(grid.sub_bw) + noise_figure_db);
}

/// y[j,q] = sqrt(P) f_j^H h_q + z with unit pilots and z ~ CN(0, noise_var).
template <class Rng>
RxSnapshot simulate_rx(const ChannelMatrix& channel, const BeamBook& book, double tx_power, double noise_var,
                       Rng& rng) {
    if (channel.entries.rows() != book.matrix.rows())
        throw Error("simulate_rx: channel has " + std::to_string(channel.entries.rows()) +
                    " antenna rows but the beam book has " + std::to_string(book.matrix.rows()));
    require(tx_power >= 0.0 && noise_var >= 0.0, "simulate_rx: power and noise must be non-negative");
    RxSnapshot rx;
    rx.scheme = book.scheme;
    rx.noise_var = noise_var;
    rx.tx_power = tx_power;
    rx.y = std::sqrt(tx_power) * (book.matrix.adjoint() * channel.entries);
    if (noise_var > 0.0) {
        std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * noise_var));
        for (Eigen::Index q = 0; q < rx.y.cols(); ++q)
            for (Eigen::Index j = 0; j < rx.y.rows(); ++j) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                rx.y(j, q) += cd(re, im);
            }
    }
    return rx;
}

inline RxSnapshot simulate_rx(const ChannelMatrix& channel, const BeamBook& book, double tx_power,
                              double noise_var, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return simulate_rx(channel, book, tx_power, noise_var, rng);
}

/// Text dump: a comment line with metadata, then "j,q,re,im" rows.
inline void write_csv(std::ostream& os, const RxSnapshot& rx) {
    os << "# scheme=" << to_string(rx.scheme) << " noise_var=" << std::setprecision(17) << rx.noise_var
       << " tx_power=" << rx.tx_power << " rows=" << rx.y.rows() << " cols=" << rx.y.cols() << '\n';
    os << "j,q,re,im\n";
    for (Eigen::Index j = 0; j < rx.y.rows(); ++j)
        for (Eigen::Index q = 0; q < rx.y.cols(); ++q)
            os << j << ',' << q << ',' << rx.y(j, q).real() << ',' << rx.y(j, q).imag() << '\n';
}

inline RxSnapshot read_rx_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
        throw Error("snapshot csv: missing metadata line");
    RxSnapshot rx;
    long rows = -1, cols = -1;
    std::istringstream meta(line.substr(2));
    std::string kv;
    while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw Error("snapshot csv: bad metadata field '" + kv + "'");
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "scheme")
            rx.scheme = val == "NF" ? Scheme::near_field : Scheme::far_field;
        else if (key == "noise_var")
            rx.noise_var = std::stod(val);
        else if (key == "tx_power")
            rx.tx_power = std::stod(val);
        else if (key == "rows")
            rows = std::stol(val);
        else if (key == "cols")
            cols = std::stol(val);
    }
    if (rows <= 0 || cols <= 0)
        throw Error("snapshot csv: missing dimensions");
    rx.y = CMatrix::Zero(rows, cols);
    std::getline(is, line); // column header
    long count = 0;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        long j = 0, q = 0;
        double re = 0, im = 0;
        char c1, c2, c3;
        std::istringstream row(line);
        if (!(row >> j >> c1 >> q >> c2 >> re >> c3 >> im) || j < 0 || j >= rows || q < 0 || q >= cols)
            throw Error("snapshot csv: bad row '" + line + "'");
        rx.y(j, q) = cd(re, im);
        ++count;
    }
    if (count != rows * cols)
        throw Error("snapshot csv: expected " + std::to_string(rows * cols) + " entries");
    return rx;
}

} // namespace nfloc
