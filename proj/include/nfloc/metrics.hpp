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
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "ofdm_channel.hpp"

namespace nfloc {

/// |s(p)^H t(d)| / (N_BS Q) with s^T = f^H A(p) for an arbitrary beam f.
inline double compatibility_metric(const SteeringModel& model, const Vec3& p, const CVector& beam) {
    require(beam.size() == model.size(), "compatibility_metric: beam length does not match the array");
    CMatrix A;
    model.near_field_band(p, A);
    const CVector s = (beam.adjoint() * A).transpose(); // s_q = f^H a_q
    const double d = (p - model.geometry().origin).norm();
    const CVector t = subcarrier_phase_vector(model.grid(), d);
    return std::abs(s.dot(t)) / (double(model.size()) * model.grid().q_count);
}

/// FF-compatibility of point p for the boresight beam f_o = 1.
inline double compatibility_metric(const SteeringModel& model, const Vec3& p) {
    return compatibility_metric(model, p, CVector::Ones(model.size()));
}

inline double compatibility_metric(const ArrayGeometry& geom, const OfdmGrid& grid, const Vec3& p) {
    return compatibility_metric(SteeringModel(geom, grid), p);
}

inline double rmse(std::span<const double> errors) {
    if (errors.empty())
        throw Error("rmse: empty input");
    double s = 0.0;
    for (double e : errors)
        s += e * e;
    return std::sqrt(s / double(errors.size()));
}

/// Linear-interpolation sample quantile (Hyndman-Fan type 7).
inline double quantile(std::vector<double> v, double p) {
    if (v.empty())
        throw Error("quantile: empty input");
    require(p >= 0.0 && p <= 1.0, "quantile: p must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = (double(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

/// Right-continuous empirical CDF with missing samples counted as censored.
struct EmpiricalCdf {
    std::vector<std::pair<double, double>> steps; // (value, fraction <= value), value strictly increasing
    double censored_fraction = 0.0;
    std::size_t total = 0;
    std::size_t observed = 0;

    /// Fraction of observed samples <= x.
    [[nodiscard]] double at(double x) const {
        double f = 0.0;
        for (const auto& [v, frac] : steps) {
            if (v > x)
                break;
            f = frac;
        }
        return f;
    }
};

inline EmpiricalCdf empirical_cdf(std::span<const std::optional<double>> samples) {
    if (samples.empty())
        throw Error("empirical_cdf: empty input");
    std::vector<double> v;
    for (const auto& s : samples)
        if (s)
            v.push_back(*s);
    EmpiricalCdf cdf;
    cdf.total = samples.size();
    cdf.observed = v.size();
    cdf.censored_fraction = double(samples.size() - v.size()) / double(samples.size());
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double frac = double(i + 1) / double(v.size());
        if (!cdf.steps.empty() && cdf.steps.back().first == v[i])
            cdf.steps.back().second = frac;
        else
            cdf.steps.emplace_back(v[i], frac);
    }
    return cdf;
}

inline EmpiricalCdf empirical_cdf(std::span<const double> samples) {
    std::vector<std::optional<double>> o(samples.begin(), samples.end());
    return empirical_cdf(std::span<const std::optional<double>>(o));
}

/// One labeled curve.
struct MetricSeries {
    std::string label;
    std::vector<double> abscissa;
    std::vector<double> values;

    void validate() const {
        require(abscissa.size() == values.size(), "series '" + label + "': abscissa and values differ in length");
        require(std::is_sorted(abscissa.begin(), abscissa.end()), "series '" + label + "': abscissa not sorted");
    }
};

/// Metadata line every harness CSV starts with.
struct CsvHeader {
    std::string kind;
    std::string scenario;
    std::uint64_t seed = 0;
    std::string version;
    std::string extra; // free-form key=value pairs
};

inline void write_header(std::ostream& os, const CsvHeader& h) {
    os << "# kind=" << h.kind << " scenario=" << h.scenario << " seed=" << h.seed << " version=" << h.version;
    if (!h.extra.empty())
        os << ' ' << h.extra;
    os << '\n';
}

/// Series sharing one abscissa, written side by side; empty cells for NaN.
inline void write_csv(std::ostream& os, const CsvHeader& h, const std::string& abscissa_name,
                      std::span<const MetricSeries> series) {
    require(!series.empty(), "write_csv: no series");
    for (const auto& s : series) {
        s.validate();
        require(s.abscissa == series.front().abscissa, "write_csv: series '" + s.label + "' uses another abscissa");
    }
    write_header(os, h);
    os << abscissa_name;
    for (const auto& s : series)
        os << ',' << s.label;
    os << '\n' << std::setprecision(10);
    for (std::size_t i = 0; i < series.front().abscissa.size(); ++i) {
        os << series.front().abscissa[i];
        for (const auto& s : series) {
            os << ',';
            if (std::isfinite(s.values[i]))
                os << s.values[i];
        }
        os << '\n';
    }
}

inline std::vector<double> log_space(double lo, double hi, int n) {
    require(lo > 0.0 && hi >= lo && n >= 1, "log_space: bad interval");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[i] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
    if (n > 1)
        out.back() = hi;
    return out;
}

} // namespace nfloc
