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


#include <gtest/gtest.h>

#include "nfloc/config.hpp"

using namespace nfloc;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "exp.yaml");
    } catch (const UsageError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Config, MinimalFileGetsDefaults) {
    const auto s = parse_config("kind: tracking\n");
    EXPECT_EQ(s.kind, ExperimentKind::tracking);
    EXPECT_EQ(s.scenario, "A");
    EXPECT_EQ(s.trials, 100);
    EXPECT_EQ(s.seed, 1u);
    EXPECT_TRUE(s.overrides.empty());
}

TEST(Config, FieldsAndOverrides) {
    const auto s = parse_config("kind: switch-cdf\nscenario: B\ntrials: 12\nseed: 9\n"
                                "overrides:\n  eps_th: [2, 4]\n  scenarios: [A, B]\n  flush: false\n");
    EXPECT_EQ(s.kind, ExperimentKind::switch_cdf);
    EXPECT_EQ(s.scenario, "B");
    EXPECT_EQ(s.trials, 12);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(s.overrides.at("eps_th"), "2,4");
    EXPECT_EQ(s.overrides.at("scenarios"), "A,B");
    EXPECT_EQ(s.overrides.at("flush"), "false");
}

TEST(Config, UnknownKeysCarryLineNumbers) {
    EXPECT_NE(error_of("kind: pos-rmse\ntrails: 5\n").find("exp.yaml:2"), std::string::npos);
    const auto e = error_of("kind: pos-rmse\noverrides:\n  distances: [1, 2]\n  eps_th: 2\n");
    EXPECT_NE(e.find("exp.yaml:4"), std::string::npos) << e;
    EXPECT_NE(e.find("eps_th"), std::string::npos);
}

TEST(Config, InvalidDocuments) {
    EXPECT_FALSE(error_of("scenario: A\n").empty());
    EXPECT_FALSE(error_of("kind: fig9\n").empty());
    EXPECT_FALSE(error_of("kind: pos-rmse\ntrials: 0\n").empty());
    EXPECT_FALSE(error_of("kind: pos-rmse\ntrials: many\n").empty());
    EXPECT_FALSE(error_of("kind: pos-rmse\nscenario: Q\n").empty());
    EXPECT_FALSE(error_of("- a\n- b\n").empty());
    EXPECT_FALSE(error_of("kind: [pos-rmse\n").empty());
    EXPECT_FALSE(error_of("kind: pos-rmse\noverrides:\n  distances: {a: 1}\n").empty());
}

TEST(Config, MissingFile) {
    EXPECT_THROW(load_config("/nonexistent/exp.yaml"), UsageError);
}
