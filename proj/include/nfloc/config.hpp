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

// YAML experiment files. Needs yaml-cpp; the rest of the library does not.
//
//   kind: pos-rmse
//   scenario: A
//   trials: 50
//   seed: 7
//   overrides:
//     distances: [1, 2, 5, 10]
//     rssi_floor: 0.05

#pragma once

#include <string>

#include <yaml-cpp/yaml.h>

#include "error.hpp"
#include "experiment.hpp"

namespace nfloc {

namespace detail {

inline std::string where(const std::string& source, const YAML::Node& n) {
    const auto m = n.Mark();
    return m.line < 0 ? source : source + ":" + std::to_string(m.line + 1);
}

inline std::string scalar_text(const std::string& source, const std::string& key, const YAML::Node& n) {
    if (n.IsScalar())
        return n.Scalar();
    if (n.IsSequence()) {
        std::string out;
        for (const auto& item : n) {
            if (!item.IsScalar())
                throw UsageError(where(source, item) + ": '" + key + "' must be a flat list of scalars");
            out += (out.empty() ? "" : ",") + item.Scalar();
        }
        return out;
    }
    throw UsageError(where(source, n) + ": '" + key + "' must be a scalar or a list");
}

} // namespace detail

/// Parse and resolve an experiment description; throws UsageError with the offending line.
inline ExperimentSpec parse_config(const std::string& text, const std::string& source = "<config>") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw UsageError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root.IsMap())
        throw UsageError(source + ": top level must be a mapping");

    ExperimentSpec spec;
    bool have_kind = false;
    for (const auto& kv : root) {
        const std::string key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        const std::string at = detail::where(source, kv.first);
        try {
            if (key == "kind") {
                spec.kind = parse_kind(detail::scalar_text(source, key, v));
                have_kind = true;
            } else if (key == "scenario") {
                spec.scenario = detail::scalar_text(source, key, v);
            } else if (key == "trials") {
                spec.trials = v.as<int>();
                if (spec.trials < 1)
                    throw UsageError("trials must be >= 1");
            } else if (key == "seed") {
                spec.seed = v.as<std::uint64_t>();
            } else if (key == "overrides") {
                if (v.IsNull())
                    continue;
                if (!v.IsMap())
                    throw UsageError("overrides must be a mapping");
                for (const auto& o : v) {
                    const std::string name = o.first.as<std::string>();
                    spec.overrides[name] = detail::scalar_text(source, name, o.second);
                }
            } else {
                throw UsageError("unknown key '" + key + "'");
            }
        } catch (const YAML::Exception& e) {
            throw UsageError(at + ": bad value for '" + key + "': " + e.msg);
        } catch (const UsageError& e) {
            const std::string msg = e.what();
            throw UsageError(msg.rfind(source, 0) == 0 ? msg : at + ": " + msg);
        }
    }
    if (!have_kind)
        throw UsageError(source + ": missing required key 'kind'");

    // Point unknown override keys at their own line.
    if (const auto ov = root["overrides"]; ov && ov.IsMap()) {
        const auto allowed = allowed_overrides(spec.kind);
        for (const auto& o : ov) {
            const std::string name = o.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
                throw UsageError(detail::where(source, o.first) + ": override '" + name + "' is not accepted by " +
                                 to_string(spec.kind));
        }
    }
    try {
        spec.resolve();
    } catch (const UsageError& e) {
        throw UsageError(source + ": " + e.what());
    }
    return spec;
}

inline ExperimentSpec load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw UsageError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace nfloc
