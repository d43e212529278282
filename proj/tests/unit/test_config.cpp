#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "nlsfgr/config.hpp"
#include "nlsfgr/errors.hpp"

using namespace nlsfgr;
using nlohmann::json;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const auto dir = std::filesystem::temp_directory_path() / "nlsfgr_config_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path.string();
}

}  // namespace

TEST(Config, DefaultsResolveAndParse) {
    const json c = resolve_config("", {});
    EXPECT_EQ(c, default_config());
    const RunConfig r = parse_run_config(c);
    EXPECT_EQ(r.n, 1999);
    EXPECT_DOUBLE_EQ(r.lambda, 1.6);
    EXPECT_EQ(r.scenario.kind, ScenarioKind::resonance);
}

TEST(Config, OverridesAreTyped) {
    const json c = resolve_config("", {"evolve.T=250", "cap.enabled=true", "scenario.kind=radiation",
                                       "fgr.eps_schedule=[0.1,0.05]", "grid.n=999"});
    const RunConfig r = parse_run_config(c);
    EXPECT_DOUBLE_EQ(r.evolve.T, 250.0);
    EXPECT_TRUE(c["evolve"]["T"].is_number_float());
    EXPECT_TRUE(r.cap.enabled);
    EXPECT_EQ(r.scenario.kind, ScenarioKind::radiation);
    ASSERT_EQ(r.resolvent.eps_schedule.size(), 2u);
    EXPECT_EQ(r.n, 999);
}

TEST(Config, RejectsUnknownKeysWrongTypesAndBadRanges) {
    EXPECT_THROW(resolve_config("", {"evolve.TT=1"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"nosuch.key=1"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"grid.n=1.5"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"cap.enabled=maybe"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"evolve.dt=-0.1"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"scenario.kind=chaotic"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"frame.beta=1"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"evolve.T"}), ConfigError);
    EXPECT_THROW(resolve_config("", {"grid=3"}), ConfigError);
}

TEST(Config, MissingFileNamesThePath) {
    try {
        resolve_config("/nonexistent/run.toml", {});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/run.toml"), std::string::npos);
    }
}

TEST(Config, TomlAndJsonFilesAgree) {
    const std::string toml_path = write_temp("a.toml",
                                             "[grid]\nr_max = 80.0\nn = 799\n[evolve]\nT = 5\n"
                                             "[scenario]\nkind = \"branch_tracking\"\na0 = 0.01\n");
    const json from_toml = resolve_config(toml_path, {"evolve.dt=0.02"});
    const std::string json_path = write_temp("a.json", from_toml.dump());
    const json from_json = resolve_config(json_path, {});
    EXPECT_EQ(from_toml, from_json);
    EXPECT_DOUBLE_EQ(from_json["evolve"]["T"].get<double>(), 5.0);
    EXPECT_EQ(parse_run_config(from_json).scenario.kind, ScenarioKind::branch_tracking);
}

TEST(Config, MalformedTomlIsAConfigError) {
    EXPECT_THROW(resolve_config(write_temp("bad.toml", "[grid\nn = 3\n"), {}), ConfigError);
    EXPECT_THROW(resolve_config(write_temp("bad.json", "{\"grid\": "), {}), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
    for (const char* name : {"default.toml", "resonance.toml", "radiation.toml", "branch_tracking.toml"}) {
        const std::string path = std::string(NLSFGR_CONFIG_DIR) + "/" + name;
        EXPECT_NO_THROW(parse_run_config(resolve_config(path, {}))) << name;
    }
}
