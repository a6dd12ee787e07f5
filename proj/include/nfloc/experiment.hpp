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
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "tracking.hpp"

namespace nfloc {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { pos_rmse, dof_aod_rmse, g_sweep, tracking, switch_cdf, complexity };

inline const std::vector<std::pair<ExperimentKind, std::string>>& experiment_kinds() {
    static const std::vector<std::pair<ExperimentKind, std::string>> k{
        {ExperimentKind::pos_rmse, "pos-rmse"},     {ExperimentKind::dof_aod_rmse, "dof-aod-rmse"},
        {ExperimentKind::g_sweep, "g-sweep"},       {ExperimentKind::tracking, "tracking"},
        {ExperimentKind::switch_cdf, "switch-cdf"}, {ExperimentKind::complexity, "complexity"}};
    return k;
}

inline std::string to_string(ExperimentKind k) {
    for (const auto& [kind, name] : experiment_kinds())
        if (kind == k)
            return name;
    return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
    for (const auto& [kind, name] : experiment_kinds())
        if (name == s)
            return kind;
    throw UsageError("unknown experiment kind '" + s + "'");
}

/// Override keys accepted by every kind that runs the estimators.
inline const std::vector<std::string>& estimator_override_keys() {
    static const std::vector<std::string> k{"tx_power_dbm",   "rssi_floor",  "outer_iters",  "range_steps",
                                            "angle_steps",    "refine_factor", "nf_grid",    "nf_normalized",
                                            "nf_coherent_range", "monotone", "nf_seed", "jobs"};
    return k;
}

inline std::vector<std::string> allowed_overrides(ExperimentKind kind) {
    std::vector<std::string> keys;
    auto add = [&](std::initializer_list<const char*> l) { keys.insert(keys.end(), l.begin(), l.end()); };
    switch (kind) {
    case ExperimentKind::pos_rmse:
    case ExperimentKind::dof_aod_rmse:
        keys = estimator_override_keys();
        add({"distances", "points"});
        break;
    case ExperimentKind::g_sweep:
        add({"scenarios", "dz", "points", "d_lo", "d_hi"});
        break;
    case ExperimentKind::tracking:
        keys = estimator_override_keys();
        add({"direction", "d_near", "d_far", "speed", "step_period", "eps_th", "xi", "bin_width", "memory_window",
             "poly_degree", "nf_limit", "flush", "logs"});
        break;
    case ExperimentKind::switch_cdf:
        keys = estimator_override_keys();
        add({"scenarios", "eps_th", "d_near", "d_far", "speed", "step_period", "memory_window", "poly_degree",
             "nf_limit", "flush"});
        break;
    case ExperimentKind::complexity:
        keys = estimator_override_keys();
        add({"sizes", "ratios", "distance"});
        break;
    }
    return keys;
}

inline int default_trials(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::pos_rmse:
    case ExperimentKind::dof_aod_rmse:
        return 50;
    case ExperimentKind::tracking:
        return 100;
    case ExperimentKind::switch_cdf:
        return 200;
    default:
        return 1;
    }
}

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::pos_rmse;
    std::string scenario = "A";
    int trials = 0; // 0: the kind's default
    std::uint64_t seed = 1;
    std::map<std::string, std::string> overrides;

    /// Fill defaults and check every field; throws UsageError.
    void resolve() {
        if (trials == 0)
            trials = default_trials(kind);
        if (trials < 1)
            throw UsageError("trials must be >= 1");
        (void)scenario_preset(scenario);
        const auto allowed = allowed_overrides(kind);
        for (const auto& [key, value] : overrides)
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                throw UsageError("override '" + key + "' is not accepted by " + to_string(kind));
    }
};

// ---------------------------------------------------------------------------
// Override parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t[]");
    const auto e = s.find_last_not_of(" \t[]");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw UsageError("override '" + key + "': '" + v + "' is not a number");
    }
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

} // namespace detail

class Overrides {
public:
    explicit Overrides(const std::map<std::string, std::string>& m) : m_(m) {}

    [[nodiscard]] bool has(const std::string& k) const { return m_.count(k) != 0; }

    [[nodiscard]] double num(const std::string& k, double def) const {
        return has(k) ? detail::to_double(k, detail::trim(m_.at(k))) : def;
    }

    [[nodiscard]] int integer(const std::string& k, int def) const {
        const double x = num(k, def);
        if (x != std::floor(x))
            throw UsageError("override '" + k + "' must be an integer");
        return static_cast<int>(x);
    }

    [[nodiscard]] bool flag(const std::string& k, bool def) const {
        if (!has(k))
            return def;
        const std::string v = detail::trim(m_.at(k));
        if (v == "1" || v == "true" || v == "yes" || v == "on")
            return true;
        if (v == "0" || v == "false" || v == "no" || v == "off")
            return false;
        throw UsageError("override '" + k + "' must be a boolean");
    }

    [[nodiscard]] std::string str(const std::string& k, const std::string& def) const {
        return has(k) ? detail::trim(m_.at(k)) : def;
    }

    [[nodiscard]] std::vector<double> list(const std::string& k, std::vector<double> def) const {
        if (!has(k))
            return def;
        std::vector<double> out;
        for (const auto& item : detail::split(m_.at(k)))
            out.push_back(detail::to_double(k, item));
        if (out.empty())
            throw UsageError("override '" + k + "' is an empty list");
        return out;
    }

    [[nodiscard]] std::vector<std::string> words(const std::string& k, std::vector<std::string> def) const {
        if (!has(k))
            return def;
        auto out = detail::split(m_.at(k));
        if (out.empty())
            throw UsageError("override '" + k + "' is an empty list");
        return out;
    }

private:
    const std::map<std::string, std::string>& m_;
};

/// Preset with the focus-grid and power overrides applied.
inline ScenarioPreset resolve_preset(const std::string& name, const Overrides& o) {
    ScenarioPreset p = scenario_preset(name);
    p.tx_power_dbm = o.num("tx_power_dbm", p.tx_power_dbm);
    if (o.has("nf_grid")) {
        int r = 0, a = 0, e = 0;
        char x1 = 0, x2 = 0;
        std::istringstream is(o.str("nf_grid", ""));
        if (!(is >> r >> x1 >> a >> x2 >> e) || x1 != 'x' || x2 != 'x' || r < 1 || a < 1 || e < 1)
            throw UsageError("override 'nf_grid' must look like 4x21x1");
        p.nf_rings = r;
        p.nf_az = a;
        p.nf_el = e;
        p.j2 = r * a * e;
    }
    return p;
}

inline SearchConfig resolve_search(const Overrides& o) {
    SearchConfig c;
    c.rssi_floor = o.num("rssi_floor", c.rssi_floor);
    c.outer_iters = o.integer("outer_iters", c.outer_iters);
    c.range_steps = o.integer("range_steps", c.range_steps);
    c.angle_steps = o.integer("angle_steps", c.angle_steps);
    c.refine_factor = o.num("refine_factor", c.refine_factor);
    c.nf_normalized = o.flag("nf_normalized", c.nf_normalized);
    c.nf_coherent_range = o.flag("nf_coherent_range", c.nf_coherent_range);
    c.monotone = o.flag("monotone", c.monotone);
    if (o.has("nf_seed")) {
        int r = 0, e = 0;
        char x = 0;
        std::istringstream is(o.str("nf_seed", ""));
        if (!(is >> r >> x >> e) || x != 'x' || r < 0 || e < 0)
            throw UsageError("override 'nf_seed' must look like 16x6 (0x0 disables)");
        c.nf_seed_ranges = r;
        c.nf_seed_elevations = e;
    }
    try {
        c.validate(std::numeric_limits<double>::infinity());
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return c;
}

/// Random UE at 3-D range d: azimuth uniform over the region, height uniform
/// over the part of the z-range with |dz| <= 0.95 d.
template <class Rng>
Vec3 sample_ue(const Scenario& s, double d, Rng& rng) {
    const Region& r = s.region();
    const double zb = s.geometry().origin.z();
    const double lo = std::max(r.z_min, zb - 0.95 * d);
    const double hi = std::min(r.z_max, zb + 0.95 * d);
    if (lo > hi)
        throw UsageError("no admissible UE height at range " + std::to_string(d) + " m");
    std::uniform_real_distribution<double> az(r.az_min, r.az_max);
    std::uniform_real_distribution<double> z(lo, hi);
    const double a = az(rng);
    const double zz = lo == hi ? lo : z(rng);
    return place_ue(s.geometry().origin, d, a, zz);
}

/// Runs fn(i) for i in [0, n) on `jobs` threads; fn must only write slot i of its output.
inline void parallel_for(int n, int jobs, const std::function<void(int, int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i)
            fn(0, i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += jobs)
                    fn(w, i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& t : pool)
        t.join();
    for (auto& e : errs)
        if (e)
            std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct Artifact {
    std::string name;
    std::string content;
};

struct ExperimentResult {
    std::vector<Artifact> artifacts;
    std::vector<std::pair<std::string, std::string>> summary;

    [[nodiscard]] const Artifact& artifact(const std::string& name) const {
        for (const auto& a : artifacts)
            if (a.name == name)
                return a;
        throw Error("no artifact named '" + name + "'");
    }

    [[nodiscard]] std::string value(const std::string& key) const {
        for (const auto& [k, v] : summary)
            if (k == key)
                return v;
        throw Error("no summary entry '" + key + "'");
    }
};

inline void write_artifacts(const ExperimentResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& a : r.artifacts) {
        std::ofstream f(dir / a.name, std::ios::binary);
        if (!(f << a.content))
            throw Error("cannot write " + (dir / a.name).string());
    }
    std::ofstream f(dir / "summary.csv", std::ios::binary);
    f << "key,value\n";
    for (const auto& [k, v] : r.summary)
        f << k << ',' << v << '\n';
    if (!f)
        throw Error("cannot write " + (dir / "summary.csv").string());
}

namespace detail {

inline CsvHeader header_for(const ExperimentSpec& spec, const std::string& scenario, std::string extra = {}) {
    return {to_string(spec.kind), scenario, spec.seed, kVersion, std::move(extra)};
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

inline double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

// ---- pos-rmse / dof-aod-rmse ----------------------------------------------

struct TrialRecord {
    int trial = 0;
    double d = 0.0;
    Scheme scheme = Scheme::far_field;
    Vec3 truth = Vec3::Zero();
    SphericalPose true_pose;
    PositionEstimate est;
    bool failed = false;
};

inline ExperimentResult run_mc_sweep(const ExperimentSpec& spec) {
    const Overrides o(spec.overrides);
    const ScenarioPreset preset = resolve_preset(spec.scenario, o);
    const SearchConfig search = resolve_search(o);
    const int jobs = o.integer("jobs", 1);
    const Scenario base(preset, search);
    const auto distances = o.list(
        "distances", log_space(std::max(preset.d_min, 1.0), preset.d_max, o.integer("points", 12)));
    for (double d : distances)
        if (d < preset.d_min || d > preset.d_max)
            throw UsageError("distance " + fmt(d) + " m lies outside the serviced region");

    const int T = spec.trials;
    const int D = static_cast<int>(distances.size());
    std::vector<TrialRecord> recs(static_cast<std::size_t>(D) * T * 2);
    std::vector<std::optional<Scenario>> workers(static_cast<std::size_t>(std::max(1, jobs)));
    parallel_for(D * T, jobs, [&](int w, int i) {
        if (!workers[w])
            workers[w].emplace(preset, search);
        const Scenario& sc = *workers[w];
        const int di = i / T, t = i % T;
        std::mt19937_64 rng(derive_seed(spec.seed, std::uint64_t(di), std::uint64_t(t)));
        const Vec3 p = sample_ue(sc, distances[di], rng);
        const std::uint64_t seeds[2] = {rng(), rng()};
        for (int s = 0; s < 2; ++s) {
            TrialRecord& r = recs[static_cast<std::size_t>(i) * 2 + s];
            r.trial = t;
            r.d = distances[di];
            r.scheme = s == 0 ? Scheme::far_field : Scheme::near_field;
            r.truth = p;
            r.true_pose = spherical_from_cartesian(p, sc.geometry().origin);
            try {
                r.est = sc.run(r.scheme, p, seeds[s]);
            } catch (const Error&) {
                r.failed = true;
            }
        }
    });

    // Per-distance error aggregates; failed trials are excluded and counted.
    std::vector<double> pos[2], dof[2], az[2], el[2];
    for (auto* v : {pos, dof, az, el})
        for (int s = 0; s < 2; ++s)
            v[s].assign(static_cast<std::size_t>(D), std::nan(""));
    int failures = 0;
    for (int di = 0; di < D; ++di)
        for (int s = 0; s < 2; ++s) {
            std::vector<double> ep, ed, ea, ee;
            for (int t = 0; t < T; ++t) {
                const auto& r = recs[(static_cast<std::size_t>(di) * T + t) * 2 + s];
                if (r.failed) {
                    ++failures;
                    continue;
                }
                ep.push_back((r.est.position - r.truth).norm());
                ed.push_back(r.est.pose.dof - r.true_pose.dof);
                ea.push_back(wrap_angle(r.est.pose.az - r.true_pose.az));
                ee.push_back(r.est.pose.el - r.true_pose.el);
            }
            if (ep.empty())
                continue;
            pos[s][di] = rmse(ep);
            dof[s][di] = rmse(ed);
            az[s][di] = rmse(ea);
            el[s][di] = rmse(ee);
        }

    ExperimentResult res;
    const std::string extra = "fd=" + fmt(base.fraunhofer()) + " trials=" + std::to_string(T);
    std::ostringstream main;
    if (spec.kind == ExperimentKind::pos_rmse) {
        const MetricSeries cols[] = {{"rmse_ff", distances, pos[0]}, {"rmse_nf", distances, pos[1]}};
        write_csv(main, header_for(spec, spec.scenario, extra), "d", cols);
        res.artifacts.push_back({"pos_rmse.csv", main.str()});
    } else {
        const MetricSeries cols[] = {{"dof_ff", distances, dof[0]}, {"dof_nf", distances, dof[1]},
                                     {"az_ff", distances, az[0]},   {"az_nf", distances, az[1]},
                                     {"el_ff", distances, el[0]},   {"el_nf", distances, el[1]}};
        write_csv(main, header_for(spec, spec.scenario, extra), "d", cols);
        res.artifacts.push_back({"dof_aod_rmse.csv", main.str()});
    }

    std::ostringstream rows;
    write_header(rows, header_for(spec, spec.scenario, extra));
    rows << "trial,d,scheme,true_x,true_y,true_z,est_x,est_y,est_z,pos_err,dof_err,az_err,el_err,"
            "steering_constructions,phase_rolls,distance_evals,inner_products\n"
         << std::setprecision(10);
    for (const auto& r : recs) {
        rows << r.trial << ',' << r.d << ',' << to_string(r.scheme) << ',' << r.truth.x() << ',' << r.truth.y()
             << ',' << r.truth.z() << ',';
        if (r.failed) {
            rows << ",,,,,,,,,,\n";
            continue;
        }
        const auto& e = r.est;
        rows << e.position.x() << ',' << e.position.y() << ',' << e.position.z() << ','
             << (e.position - r.truth).norm() << ',' << e.pose.dof - r.true_pose.dof << ','
             << wrap_angle(e.pose.az - r.true_pose.az) << ',' << e.pose.el - r.true_pose.el << ','
             << e.ops.steering_constructions << ',' << e.ops.phase_rolls << ',' << e.ops.distance_evals << ','
             << e.ops.inner_products << '\n';
    }
    res.artifacts.push_back({"estimates.csv", rows.str()});

    res.summary.push_back({"fd", fmt(base.fraunhofer())});
    res.summary.push_back({"failures", std::to_string(failures)});
    for (int di = 0; di < D; ++di) {
        const std::string tag = "d=" + fmt(distances[di]);
        res.summary.push_back({"rmse_ff@" + tag, fmt(pos[0][di])});
        res.summary.push_back({"rmse_nf@" + tag, fmt(pos[1][di])});
    }
    return res;
}

// ---- g-sweep ----------------------------------------------------------------

inline ExperimentResult run_g_sweep(const ExperimentSpec& spec) {
    const Overrides o(spec.overrides);
    const auto names = o.words("scenarios", {"A", "B"});
    const auto dzs = o.list("dz", {0.0, 0.5, 1.0});
    const auto ds = log_space(o.num("d_lo", 1.0), o.num("d_hi", 100.0), o.integer("points", 40));
    std::vector<MetricSeries> cols;
    std::string extra;
    ExperimentResult res;
    for (const auto& name : names) {
        const ScenarioPreset p = resolve_preset(name, o);
        const Scenario sc(p);
        extra += "fd_" + name + "=" + fmt(sc.fraunhofer()) + ' ';
        for (double dz : dzs) {
            MetricSeries s{"g_" + name + "_dz" + fmt(dz), ds, {}};
            for (double d : ds) {
                // Boresight azimuth, UE dz below the array reference.
                s.values.push_back(d < dz ? std::nan("")
                                          : compatibility_metric(sc.model(), place_ue(sc.geometry().origin, d, 0.0,
                                                                                      sc.geometry().origin.z() - dz)));
            }
            res.summary.push_back({s.label + "@d=" + fmt(ds.back()), fmt(s.values.back())});
            cols.push_back(std::move(s));
        }
    }
    if (!extra.empty())
        extra.pop_back();
    std::ostringstream os;
    std::string joined;
    for (const auto& n : names)
        joined += (joined.empty() ? "" : "+") + n;
    write_csv(os, header_for(spec, joined, extra), "d", cols);
    res.artifacts.push_back({"g_sweep.csv", os.str()});
    return res;
}

// ---- tracking / switch-cdf -------------------------------------------------

inline TrackConfig resolve_track(const Overrides& o, const Scenario& sc) {
    TrackConfig c;
    c.memory_window = o.integer("memory_window", c.memory_window);
    c.poly_degree = o.integer("poly_degree", c.poly_degree);
    c.nf_limit = o.num("nf_limit", sc.fraunhofer());
    c.step_period = o.num("step_period", c.step_period);
    c.flush_on_switch = o.flag("flush", c.flush_on_switch);
    try {
        c.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return c;
}

struct PathEnds {
    double d_near = 2.0;
    double d_far = 20.0;
    double speed = 2.0;
};

inline PathEnds resolve_ends(const Overrides& o, const ScenarioPreset& p) {
    PathEnds e;
    e.d_near = o.num("d_near", std::max(p.d_min, 2.0));
    e.d_far = o.num("d_far", std::min(p.d_max, 20.0));
    e.speed = o.num("speed", e.speed);
    if (!(e.d_near >= p.d_min && e.d_far <= p.d_max && e.d_near < e.d_far && e.speed > 0.0))
        throw UsageError("track path must satisfy d_min <= d_near < d_far <= d_max with positive speed");
    return e;
}

/// Azimuth and height of one track, drawn so the whole path is admissible.
template <class Rng>
std::pair<double, double> sample_track_pose(const Scenario& sc, double d_near, Rng& rng) {
    const Vec3 p = sample_ue(sc, d_near, rng);
    return {spherical_from_cartesian(p, sc.geometry().origin).az, p.z()};
}

struct Variant {
    std::string label;
    TrackMode mode = TrackMode::adaptive;
    Scheme xi = Scheme::far_field;
    double eps = 4.0;
};

inline ExperimentResult run_tracking_kind(const ExperimentSpec& spec) {
    const Overrides o(spec.overrides);
    const ScenarioPreset preset = resolve_preset(spec.scenario, o);
    const SearchConfig search = resolve_search(o);
    const int jobs = o.integer("jobs", 1);
    const Scenario base(preset, search);
    const TrackConfig tc = resolve_track(o, base);
    const PathEnds ends = resolve_ends(o, preset);
    const double bw = o.num("bin_width", 2.0);
    if (!(bw > 0.0))
        throw UsageError("bin_width must be positive");
    const std::string dir = o.str("direction", "both");
    std::vector<std::string> dirs;
    if (dir == "both")
        dirs = {"inbound", "outbound"};
    else if (dir == "inbound" || dir == "outbound")
        dirs = {dir};
    else
        throw UsageError("direction must be inbound, outbound or both");

    std::vector<Variant> variants{{"ff_only", TrackMode::ff_only}, {"nf_only", TrackMode::nf_only}};
    for (double xi : o.list("xi", {1, 2})) {
        if (xi != 1 && xi != 2)
            throw UsageError("xi entries must be 1 or 2");
        for (double eps : o.list("eps_th", {2, 4})) {
            if (!(eps > 0.0))
                throw UsageError("eps_th entries must be positive");
            variants.push_back({"adaptive_xi" + fmt(xi) + "_eps" + fmt(eps), TrackMode::adaptive,
                                xi == 1 ? Scheme::far_field : Scheme::near_field, eps});
        }
    }
    const int logs = o.integer("logs", 1);

    ExperimentResult res;
    const int T = spec.trials;
    const std::size_t V = variants.size();
    for (std::size_t di = 0; di < dirs.size(); ++di) {
        const bool inbound = dirs[di] == "inbound";
        std::vector<TrackLog> out(static_cast<std::size_t>(T) * V);
        std::vector<std::optional<Scenario>> workers(static_cast<std::size_t>(std::max(1, jobs)));
        parallel_for(T, jobs, [&](int w, int t) {
            if (!workers[w])
                workers[w].emplace(preset, search);
            const Scenario& sc = *workers[w];
            std::mt19937_64 rng(derive_seed(spec.seed, 100 + di, std::uint64_t(t)));
            const auto [az, z] = sample_track_pose(sc, ends.d_near, rng);
            const auto [path, steps] =
                inbound ? radial_path(sc.geometry().origin, ends.d_far, ends.d_near, az, z, ends.speed, tc.step_period)
                        : radial_path(sc.geometry().origin, ends.d_near, ends.d_far, az, z, ends.speed, tc.step_period);
            EstimateCache cache(sc, rng());
            for (std::size_t v = 0; v < V; ++v) {
                TrackConfig c = tc;
                c.horizon = steps;
                c.initial_scheme = variants[v].xi;
                c.error_threshold = variants[v].eps;
                out[static_cast<std::size_t>(t) * V + v] =
                    run_tracking(sc, path, c, cache, {variants[v].mode, false});
            }
        });

        // RMSE per true-range bin.
        std::map<long, std::vector<std::vector<double>>> bins;
        for (int t = 0; t < T; ++t)
            for (std::size_t v = 0; v < V; ++v)
                for (const auto& s : out[static_cast<std::size_t>(t) * V + v].steps) {
                    if (s.unreliable)
                        continue;
                    auto& b = bins[static_cast<long>(std::floor(s.true_range / bw))];
                    b.resize(V);
                    b[v].push_back((s.estimate - s.truth).norm());
                }
        std::vector<double> centers;
        std::vector<MetricSeries> cols;
        for (const auto& v : variants)
            cols.push_back({"rmse_" + v.label, {}, {}});
        for (const auto& [b, errs] : bins) {
            centers.push_back((double(b) + 0.5) * bw);
            for (std::size_t v = 0; v < V; ++v)
                cols[v].values.push_back(errs[v].empty() ? std::nan("") : rmse(errs[v]));
        }
        for (auto& c : cols)
            c.abscissa = centers;
        std::ostringstream os;
        const std::string extra = "direction=" + dirs[di] + " fd=" + fmt(base.fraunhofer()) +
                                  " d_nf=" + fmt(tc.nf_limit) + " step_period=" + fmt(tc.step_period) +
                                  " trials=" + std::to_string(T);
        write_csv(os, header_for(spec, spec.scenario, extra), "range_bin", cols);
        res.artifacts.push_back({"tracking_" + dirs[di] + ".csv", os.str()});

        std::ostringstream us;
        write_header(us, header_for(spec, spec.scenario, extra));
        us << "variant,nf_fraction,steps\n";
        for (std::size_t v = 0; v < V; ++v) {
            std::size_t nf = 0, total = 0;
            for (int t = 0; t < T; ++t)
                for (const auto& s : out[static_cast<std::size_t>(t) * V + v].steps) {
                    nf += s.used_nf;
                    ++total;
                }
            const double frac = total ? double(nf) / double(total) : std::nan("");
            us << variants[v].label << ',' << fmt(frac) << ',' << total << '\n';
            res.summary.push_back({"nf_fraction_" + dirs[di] + "_" + variants[v].label, fmt(frac)});
        }
        res.artifacts.push_back({"tracking_" + dirs[di] + "_usage.csv", us.str()});

        for (int t = 0; t < std::min(logs, T); ++t)
            for (std::size_t v = 0; v < V; ++v) {
                std::ostringstream ls;
                write_header(ls, header_for(spec, spec.scenario, extra + " trial=" + std::to_string(t)));
                write_csv(ls, out[static_cast<std::size_t>(t) * V + v]);
                res.artifacts.push_back(
                    {"track_" + dirs[di] + "_" + variants[v].label + "_" + std::to_string(t) + ".csv", ls.str()});
            }
    }
    return res;
}

inline ExperimentResult run_switch_cdf(const ExperimentSpec& spec) {
    const Overrides o(spec.overrides);
    const auto names = o.words("scenarios", {"A", "B", "C"});
    const auto epss = o.list("eps_th", {4, 2});
    const SearchConfig search = resolve_search(o);
    const int jobs = o.integer("jobs", 1);
    const int T = spec.trials;

    ExperimentResult res;
    std::ostringstream cdf_os, sum_os;
    std::string joined;
    for (const auto& n : names)
        joined += (joined.empty() ? "" : "+") + n;
    write_header(cdf_os, header_for(spec, joined, "trials=" + std::to_string(T)));
    cdf_os << "scenario,eps_th,distance,fraction\n";
    write_header(sum_os, header_for(spec, joined, "trials=" + std::to_string(T)));
    sum_os << "scenario,eps_th,fd,runs,censored_fraction,q25,median,q75,iqr\n";

    for (std::size_t si = 0; si < names.size(); ++si) {
        const ScenarioPreset preset = resolve_preset(names[si], o);
        const Scenario base(preset, search);
        const TrackConfig tc = resolve_track(o, base);
        const PathEnds ends = resolve_ends(o, preset);
        std::vector<std::optional<double>> dist(static_cast<std::size_t>(T) * epss.size());
        std::vector<std::optional<Scenario>> workers(static_cast<std::size_t>(std::max(1, jobs)));
        parallel_for(T, jobs, [&](int w, int t) {
            if (!workers[w])
                workers[w].emplace(preset, search);
            const Scenario& sc = *workers[w];
            std::mt19937_64 rng(derive_seed(spec.seed, 200 + si, std::uint64_t(t)));
            const auto [az, z] = sample_track_pose(sc, ends.d_near, rng);
            const auto [path, steps] =
                radial_path(sc.geometry().origin, ends.d_far, ends.d_near, az, z, ends.speed, tc.step_period);
            EstimateCache cache(sc, rng());
            for (std::size_t e = 0; e < epss.size(); ++e) {
                TrackConfig c = tc;
                c.horizon = steps;
                c.initial_scheme = Scheme::far_field;
                c.error_threshold = epss[e];
                dist[static_cast<std::size_t>(t) * epss.size() + e] =
                    switching_distance(run_tracking(sc, path, c, cache, {TrackMode::adaptive, true}));
            }
        });
        for (std::size_t e = 0; e < epss.size(); ++e) {
            std::vector<std::optional<double>> d;
            for (int t = 0; t < T; ++t)
                d.push_back(dist[static_cast<std::size_t>(t) * epss.size() + e]);
            const auto cdf = empirical_cdf(std::span<const std::optional<double>>(d));
            for (const auto& [x, f] : cdf.steps)
                cdf_os << names[si] << ',' << fmt(epss[e]) << ',' << fmt(x) << ',' << fmt(f) << '\n';
            std::vector<double> seen;
            for (const auto& x : d)
                if (x)
                    seen.push_back(*x);
            const std::string tag = names[si] + "_eps" + fmt(epss[e]);
            sum_os << names[si] << ',' << fmt(epss[e]) << ',' << fmt(base.fraunhofer()) << ',' << T << ','
                   << fmt(cdf.censored_fraction) << ',';
            if (seen.empty()) {
                sum_os << ",,,\n";
                continue;
            }
            const double q25 = quantile(seen, 0.25), q50 = quantile(seen, 0.5), q75 = quantile(seen, 0.75);
            sum_os << fmt(q25) << ',' << fmt(q50) << ',' << fmt(q75) << ',' << fmt(q75 - q25) << '\n';
            res.summary.push_back({"median_" + tag, fmt(q50)});
            res.summary.push_back({"iqr_" + tag, fmt(q75 - q25)});
            res.summary.push_back({"censored_" + tag, fmt(cdf.censored_fraction)});
        }
    }
    res.artifacts.push_back({"switch_cdf.csv", cdf_os.str()});
    res.artifacts.push_back({"switch_summary.csv", sum_os.str()});
    return res;
}

// ---- complexity -------------------------------------------------------------

inline ExperimentResult run_complexity(const ExperimentSpec& spec) {
    const Overrides o(spec.overrides);
    const auto sizes = o.list("sizes", {8, 12, 16, 20, 24});
    const auto ratios = o.list("ratios", {1, 2, 4});
    SearchConfig search = resolve_search(o);
    search.order = ProductOrder::beam_space;
    const double d = o.num("distance", 10.0);

    struct Row {
        int n = 0;
        double ratio = 0.0;
        OpTally ff, nf;
    };
    std::vector<Row> rows;
    for (double n : sizes) {
        if (n < 1 || n != std::floor(n))
            throw UsageError("sizes must be positive integers");
        ScenarioPreset p = resolve_preset(spec.scenario, o);
        p.n_x = p.n_z = static_cast<int>(n);
        for (double r : ratios) {
            if (r < 1 || r != std::floor(r))
                throw UsageError("ratios must be positive integers");
            p.nf_rings = static_cast<int>(r);
            p.nf_az = p.j1;
            p.nf_el = 1;
            p.j2 = p.nf_rings * p.nf_az;
            const Scenario sc(p, search);
            std::mt19937_64 rng(derive_seed(spec.seed, std::uint64_t(n), std::uint64_t(r)));
            const Vec3 ue = sample_ue(sc, std::clamp(d, p.d_min, p.d_max), rng);
            const std::uint64_t s1 = rng(), s2 = rng();
            rows.push_back({static_cast<int>(n), r, sc.run(Scheme::far_field, ue, s1).ops,
                            sc.run(Scheme::near_field, ue, s2).ops});
        }
    }
    double peak = 0.0;
    for (const auto& r : rows)
        peak = std::max({peak, double(r.ff.inner_products), double(r.nf.inner_products)});

    ExperimentResult res;
    std::ostringstream os;
    write_header(os, header_for(spec, spec.scenario, "order=beam_space"));
    os << "n_bs,j2_over_j1,ff_inner_products,nf_inner_products,ff_relative,nf_relative,ratio_inner_products,"
          "ratio_steering,ff_steering,nf_steering,nf_distance_evals\n";
    for (const auto& r : rows) {
        const auto q = complexity_ratio(r.nf, r.ff);
        os << r.n * r.n << ',' << fmt(r.ratio) << ',' << r.ff.inner_products << ',' << r.nf.inner_products << ','
           << fmt(r.ff.inner_products / peak) << ',' << fmt(r.nf.inner_products / peak) << ','
           << fmt(q.inner_products) << ',' << fmt(q.steering_constructions) << ',' << r.ff.steering_constructions
           << ',' << r.nf.steering_constructions << ',' << r.nf.distance_evals << '\n';
        res.summary.push_back({"ratio_inner@n=" + std::to_string(r.n * r.n) + ",j2/j1=" + fmt(r.ratio),
                               fmt(q.inner_products)});
    }
    res.artifacts.push_back({"complexity.csv", os.str()});
    return res;
}

} // namespace detail

/// Dispatch on the experiment kind. Same spec and seed give byte-identical artifacts.
inline ExperimentResult run_experiment(ExperimentSpec spec) {
    spec.resolve();
    switch (spec.kind) {
    case ExperimentKind::pos_rmse:
    case ExperimentKind::dof_aod_rmse:
        return detail::run_mc_sweep(spec);
    case ExperimentKind::g_sweep:
        return detail::run_g_sweep(spec);
    case ExperimentKind::tracking:
        return detail::run_tracking_kind(spec);
    case ExperimentKind::switch_cdf:
        return detail::run_switch_cdf(spec);
    case ExperimentKind::complexity:
        return detail::run_complexity(spec);
    }
    throw UsageError("unhandled experiment kind");
}

} // namespace nfloc
