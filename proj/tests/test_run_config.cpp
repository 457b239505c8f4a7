#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "squintsense/run_config.hpp"

using namespace squint;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(RunConfig, EmptyInputGivesDefaults) {
  const RunConfig cfg = parse("");
  const SystemConfig sys = cfg.resolved();
  EXPECT_EQ(sys.carrier_hz, 30e9);
  EXPECT_EQ(sys.bandwidth_hz, 6e9);
  EXPECT_EQ(sys.subcarriers, 128);
  EXPECT_EQ(sys.elements_h, 64);
  EXPECT_EQ(sys.elements_v, 64);
  EXPECT_EQ(sys.bs_height_m, 40.0);
  EXPECT_DOUBLE_EQ(sys.theta_min, deg_to_rad(15.0));
  EXPECT_DOUBLE_EQ(sys.phi_max, deg_to_rad(150.0));
  EXPECT_EQ(cfg.method, Method::proposed);
}

TEST(RunConfig, CommentsWhitespaceAndOverrides) {
  const RunConfig cfg = parse("# header\n  subcarriers = 32   # inline\n\nelements_h=16\nelements_v = 16\n"
                              "method = exhaustive\nsweep_var = tau_c_db\nsweep_values = 5, 10 ,15\n"
                              "include_clutter = false\ncandidate_spacing = uniform_angle\n");
  EXPECT_EQ(cfg.system.subcarriers, 32);
  EXPECT_EQ(cfg.system.elements_h, 16);
  EXPECT_EQ(cfg.method, Method::exhaustive);
  ASSERT_EQ(cfg.sweep_values.size(), 3u);
  EXPECT_EQ(cfg.sweep_values[2], 15.0);
  EXPECT_FALSE(cfg.system.include_clutter);
  EXPECT_EQ(cfg.system.candidate_spacing, CandidateSpacing::uniform_angle);
}

TEST(RunConfig, OrderedBoundsNameBothKeys) {
  const std::string msg = error_of("theta_min_deg = 80\n");
  EXPECT_NE(msg.find("theta_min_deg"), std::string::npos);
  EXPECT_NE(msg.find("theta_max_deg"), std::string::npos);
  EXPECT_NE(error_of("phi_min_deg = 160\n").find("phi_max_deg"), std::string::npos);
}

TEST(RunConfig, RejectsSingleSubcarrier) { EXPECT_FALSE(error_of("subcarriers = 1\n").empty()); }

TEST(RunConfig, UnknownKeyReportsLine) {
  const std::string msg = error_of("subcarriers = 32\n\nbogus_key = 3\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos);
  EXPECT_NE(msg.find("bogus_key"), std::string::npos);
}

TEST(RunConfig, BadValuesReportLine) {
  EXPECT_NE(error_of("trials = ten\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("\ninclude_noise = maybe\n").find("line 2"), std::string::npos);
  EXPECT_FALSE(error_of("method = music\n").empty());
  EXPECT_FALSE(error_of("subcarriers\n").empty());
  EXPECT_FALSE(error_of("trials = 0\n").empty());
  EXPECT_FALSE(error_of("sweep_values = 3, 1\n").empty());
  EXPECT_FALSE(error_of("sweep_var = frequency\n").empty());
}

TEST(RunConfig, EchoRoundTripsExactly) {
  const RunConfig a = parse("theta_min_deg = 17.3\nphi_max_deg = 141.7\nnoise_psd_dbm_hz = -173.9\n"
                            "seed = 18446744073709551615\nsweep_var = L\nsweep_values = 128,512\n"
                            "output_dir = out dir\n");
  std::string text;
  for (const auto& line : a.echo()) text += line + "\n";
  const RunConfig b = parse(text);
  EXPECT_EQ(a.echo(), b.echo());
  EXPECT_EQ(a.resolved().theta_min, b.resolved().theta_min);
  EXPECT_EQ(b.seed, 18446744073709551615ULL);
  EXPECT_EQ(b.output_dir, "out dir");
}

TEST(RunConfig, ProvenanceCarriesVersionSeedAndConfig) {
  const RunConfig cfg = parse("seed = 42\n");
  const auto lines = provenance_lines(cfg);
  EXPECT_NE(lines[0].find(kVersion), std::string::npos);
  EXPECT_EQ(lines[1], "master_seed=42");
  EXPECT_EQ(lines.size(), 2 + cfg.echo().size());
}

TEST(RunConfig, ExperimentCarriesRunFields) {
  const RunConfig cfg = parse("trials = 7\ntargets = 3\nusers = 1\nseed = 9\ninclude_noise = false\n");
  const ExperimentSpec spec = cfg.experiment();
  EXPECT_EQ(spec.trials, 7);
  EXPECT_EQ(spec.targets, 3);
  EXPECT_EQ(spec.users, 1);
  EXPECT_EQ(spec.master_seed, 9u);
  EXPECT_FALSE(spec.include_noise);
}
