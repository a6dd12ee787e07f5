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

// nfloc <kind> [--scenario S] [--trials N] [--seed K] [--out DIR]
//              [--config FILE] [--set key=value ...]
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nfloc/config.hpp"
#include "nfloc/nfloc.hpp"

namespace {

struct Flags {
    std::string scenario;
    int trials = 0;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string config;
    std::vector<std::string> sets;
    bool quiet = false;
    CLI::Option* scenario_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
};

nfloc::ExperimentSpec build_spec(nfloc::ExperimentKind kind, const Flags& f) {
    nfloc::ExperimentSpec spec;
    if (!f.config.empty()) {
        spec = nfloc::load_config(f.config);
        if (spec.kind != kind)
            throw nfloc::UsageError("config '" + f.config + "' describes " + nfloc::to_string(spec.kind) +
                                    ", not " + nfloc::to_string(kind));
    }
    spec.kind = kind;
    if (f.scenario_opt->count())
        spec.scenario = f.scenario;
    if (f.trials_opt->count())
        spec.trials = f.trials;
    if (f.seed_opt->count())
        spec.seed = f.seed;
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw nfloc::UsageError("--set expects key=value, got '" + s + "'");
        spec.overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (f.trials_opt->count() && f.trials < 1)
        throw nfloc::UsageError("--trials must be >= 1");
    spec.resolve();
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field / far-field downlink localization experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nfloc::kVersion));

    Flags flags;
    std::vector<std::pair<nfloc::ExperimentKind, CLI::App*>> subs;
    for (const auto& [kind, name] : nfloc::experiment_kinds()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        flags.scenario_opt = sub->add_option("--scenario", flags.scenario, "preset A, B or C");
        flags.trials_opt = sub->add_option("--trials", flags.trials, "Monte-Carlo trials or runs");
        flags.seed_opt = sub->add_option("--seed", flags.seed, "master seed");
        sub->add_option("--out", flags.out, "output directory")->capture_default_str();
        sub->add_option("--config", flags.config, "YAML experiment file")->check(CLI::ExistingFile);
        sub->add_option("--set", flags.sets, "override key=value (repeatable)");
        sub->add_flag("-q,--quiet", flags.quiet, "do not print the summary");
        subs.emplace_back(kind, sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (const auto& [kind, sub] : subs) {
        if (!sub->parsed())
            continue;
        // Each subcommand registered its own options; re-bind to the parsed one.
        flags.scenario_opt = sub->get_option("--scenario");
        flags.trials_opt = sub->get_option("--trials");
        flags.seed_opt = sub->get_option("--seed");
        try {
            const auto spec = build_spec(kind, flags);
            const auto result = nfloc::run_experiment(spec);
            nfloc::write_artifacts(result, flags.out);
            if (!flags.quiet)
                for (const auto& [k, v] : result.summary)
                    std::cout << k << ' ' << v << '\n';
            return 0;
        } catch (const nfloc::UsageError& e) {
            std::cerr << "nfloc: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "nfloc: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}
