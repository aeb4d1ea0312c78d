#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "sdwave/cli/config.hpp"

using namespace sdwave;
using namespace sdwave::cli;

namespace {

const char* kMinimal = R"({
  "domain": {"dim": 3, "length": "pi"},
  "model": {"gamma": 4},
  "initial": {"amplitude": 0.05}
})";

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParseConfig, MinimalFillsDefaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.domain.dim, 3);
  EXPECT_DOUBLE_EQ(c.domain.length, std::numbers::pi);
  EXPECT_EQ(c.domain.modes_per_dim, 8);
  EXPECT_EQ(c.domain.oversample, 2);
  EXPECT_DOUBLE_EQ(c.model.gamma, 4.0);
  EXPECT_FALSE(c.model.unsafe_gamma);
  EXPECT_TRUE(c.model.source_enabled);
  EXPECT_DOUBLE_EQ(c.solver.dt, 1e-3);
  EXPECT_DOUBLE_EQ(c.solver.t_end, 20.0);
  EXPECT_EQ(c.solver.scheme, Scheme::IMEX2);
  EXPECT_DOUBLE_EQ(c.solver.blowup_threshold, 1e8);
  EXPECT_EQ(c.solver.report_every, 10);
  EXPECT_EQ(c.initial.type, InitialType::Eigenmode);
  EXPECT_DOUBLE_EQ(c.initial.amplitude, 0.05);
  EXPECT_EQ(c.initial.seed, 1u);
  EXPECT_EQ(c.well.trial_count, 32);
  EXPECT_DOUBLE_EQ(c.well.safety, 0.5);
  EXPECT_EQ(c.outputs.csv_path, "trajectory.csv");
  EXPECT_EQ(c.outputs.json_path, "summary.json");
  EXPECT_EQ(c.converge.m_list, (std::vector<int>{4, 8, 16}));
}

TEST(ParseConfig, GammaBelowWindowRejected) {
  const auto msg = config_error(R"({
  "domain": {"dim": 3, "length": "pi"},
  "model": {"gamma": 3.5},
  "initial": {"amplitude": 0.05}
})");
  EXPECT_NE(msg.find("[4, 6)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("config line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("model.gamma"), std::string::npos) << msg;
}

TEST(ParseConfig, UpperSubcriticalAccepted) {
  const auto c = parse_config(R"({"domain": {"dim": 3, "length": 3.14159}, "model": {"gamma": 5.9},
                                  "initial": {"amplitude": 0.01}})");
  EXPECT_DOUBLE_EQ(c.model.gamma, 5.9);
}

TEST(ParseConfig, CriticalExponentRejected) {
  EXPECT_FALSE(config_error(R"({"domain": {"dim": 3, "length": "pi"}, "model": {"gamma": 6},
                                "initial": {"amplitude": 0.01}})").empty());
}

TEST(ParseConfig, LowDimensionNeedsUnsafeFlag) {
  const std::string base = R"({"domain": {"dim": 1, "length": "pi"}, "model": {"gamma": 4%s},
                               "initial": {"amplitude": 0.01}})";
  const auto with = [&](const std::string& extra) {
    auto s = base;
    s.replace(s.find("%s"), 2, extra);
    return s;
  };
  EXPECT_FALSE(config_error(with("")).empty());
  EXPECT_EQ(parse_config(with(", \"unsafe_gamma\": true")).model.dim, 1);
}

TEST(ParseConfig, LengthForms) {
  const auto len = [](const std::string& v) {
    return parse_config(R"({"domain": {"dim": 3, "length": )" + v +
                        R"(}, "model": {"gamma": 4}, "initial": {"amplitude": 0.01}})")
        .domain.length;
  };
  EXPECT_DOUBLE_EQ(len("\"2pi\""), 2 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(len("\"0.5*pi\""), 0.5 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(len("1.5"), 1.5);
  EXPECT_THROW(len("\"tau\""), ConfigError);
  EXPECT_THROW(len("-1"), ConfigError);
}

TEST(ParseConfig, UnknownKeyNamesLine) {
  const auto msg = config_error(R"({
  "domain": {"dim": 3, "length": "pi"},
  "model": {"gamma": 4},
  "initial": {"amplitude": 0.05},
  "solver": {
    "dtt": 0.001
  }
})");
  EXPECT_NE(msg.find("config line 6"), std::string::npos) << msg;
  EXPECT_NE(msg.find("solver.dtt"), std::string::npos) << msg;
}

TEST(ParseConfig, MissingRequiredKeys) {
  EXPECT_NE(config_error(R"({"domain": {"dim": 3}, "model": {"gamma": 4}, "initial": {"amplitude": 1}})")
                .find("domain.length"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"domain": {"dim": 3, "length": "pi"}, "initial": {"amplitude": 1}})").find("model"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"domain": {"dim": 3, "length": "pi"}, "model": {"gamma": 4}, "initial": {}})")
                .find("initial.amplitude"),
            std::string::npos);
}

TEST(ParseConfig, TypeErrors) {
  EXPECT_FALSE(config_error(R"({"domain": {"dim": "3", "length": "pi"}, "model": {"gamma": 4},
                                "initial": {"amplitude": 1}})").empty());
  EXPECT_FALSE(config_error(R"({"domain": {"dim": 3, "length": "pi"}, "model": {"gamma": 4},
                                "initial": {"amplitude": 1}, "solver": {"scheme": "RK4"}})").empty());
  EXPECT_FALSE(config_error(R"({"domain": {"dim": 3, "length": "pi"}, "model": {"gamma": 4},
                                "initial": {"amplitude": 1, "mode": [1, 9, 1]}})").empty());
  EXPECT_FALSE(config_error(R"({"domain": {"dim": 3, "length": "pi"}, "model": {"gamma": 4},
                                "initial": {"amplitude": 1}, "converge": {"m_list": [8, 4]}})").empty());
  EXPECT_FALSE(config_error(R"({"domain": {"dim": 3, "length": "pi"}, "model": {"gamma": 4},
                                "initial": {"amplitude": 1}, "well": {"safety": 0}})").empty());
}

TEST(ParseConfig, MalformedDocumentReportsLine) {
  const auto msg = config_error("{\n  \"domain\": {\"dim\": 3,,}\n}");
  EXPECT_NE(msg.find("config line 2"), std::string::npos) << msg;
  EXPECT_FALSE(config_error("[1, 2]").empty());
}

TEST(ParseConfig, SeedOverride) {
  auto c = parse_config(kMinimal);
  c.override_seed(77);
  EXPECT_EQ(c.initial.seed, 77u);
  EXPECT_EQ(c.well.seed, 77u);
  EXPECT_EQ(c.depend.seed, 77u);
}

TEST(BuildInitial, EigenmodeWithVelocity) {
  auto c = parse_config(R"({"domain": {"dim": 3, "length": "pi", "modes_per_dim": 4}, "model": {"gamma": 4},
                            "initial": {"amplitude": 0.2, "mode": [1, 2, 1], "velocity_amplitude": -0.1}})");
  const auto d = make_domain(c.domain);
  const auto [u0, u1] = build_initial(c, d);
  const auto k = d->flat_index({1, 2, 1});
  for (std::size_t i = 0; i < u0.size(); ++i) {
    EXPECT_EQ(u0.coeffs[i], i == k ? 0.2 : 0.0);
    EXPECT_EQ(u1.coeffs[i], i == k ? -0.1 : 0.0);
  }
}

TEST(BuildInitial, RandomIsSeeded) {
  const std::string text = R"({"domain": {"dim": 2, "length": "pi", "modes_per_dim": 4},
                               "model": {"gamma": 4, "unsafe_gamma": true},
                               "initial": {"type": "random", "amplitude": 0.3, "seed": 5}})";
  const auto c = parse_config(text);
  const auto d = make_domain(c.domain);
  EXPECT_EQ(build_initial(c, d).first.coeffs, build_initial(parse_config(text), d).first.coeffs);
  auto c2 = c;
  c2.initial.seed = 6;
  EXPECT_NE(build_initial(c, d).first.coeffs, build_initial(c2, d).first.coeffs);
}

TEST(BuildInitial, FromFile) {
  const auto dir = std::filesystem::temp_directory_path() / "sdwave_config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "init.json";
  std::ofstream(path) << R"({"u0": [1, 0, 0, 0.5], "u1": [0, 0, 1, 0]})";
  auto c = parse_config(R"({"domain": {"dim": 1, "length": "pi", "modes_per_dim": 4},
                            "model": {"gamma": 4, "unsafe_gamma": true},
                            "initial": {"type": "file", "amplitude": 2, "path": ")" +
                        path.string() + R"("}})");
  const auto d = make_domain(c.domain);
  const auto [u0, u1] = build_initial(c, d);
  EXPECT_EQ(u0.coeffs, (std::vector<double>{2, 0, 0, 1}));
  EXPECT_EQ(u1.coeffs, (std::vector<double>{0, 0, 2, 0}));

  std::ofstream(path) << R"({"u0": [1, 0]})";
  EXPECT_THROW(build_initial(c, d), ConfigError);
  c.initial.path = (dir / "missing.json").string();
  EXPECT_THROW(build_initial(c, d), ConfigError);
}

TEST(LoadConfig, MissingFile) { EXPECT_THROW(load_config("/nonexistent/sdwave.json"), ConfigError); }
