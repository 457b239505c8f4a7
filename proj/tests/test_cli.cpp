#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "squintsense/beamforming.hpp"
#include "squintsense/config.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(SQUINTSENSE_CLI) + "' " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path test_dir(const std::string& name) {
  const fs::path p = fs::path(SQUINTSENSE_TEST_DIR) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

struct Csv {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Checks the documented header and that every row has one field per column;
// columns listed in `numeric` must parse as finite numbers when non-empty.
Csv validate_csv(const std::string& text, const std::string& header,
                 const std::vector<std::string>& numeric) {
  Csv csv;
  std::stringstream ss(text);
  std::string line;
  bool have_header = false;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (!have_header && line[0] == '#') {
      csv.comments.push_back(line);
      continue;
    }
    if (!have_header) {
      EXPECT_EQ(line, header);
      csv.header = split(line);
      have_header = true;
      continue;
    }
    auto fields = split(line);
    EXPECT_EQ(fields.size(), csv.header.size()) << line;
    csv.rows.push_back(fields);
  }
  EXPECT_TRUE(have_header);
  for (const auto& col : numeric) {
    std::size_t idx = 0;
    while (idx < csv.header.size() && csv.header[idx] != col) ++idx;
    EXPECT_LT(idx, csv.header.size()) << col;
    for (const auto& r : csv.rows) {
      if (idx >= r.size() || r[idx].empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(r[idx].c_str(), &end);
      EXPECT_EQ(*end, '\0') << col << "=" << r[idx];
      EXPECT_TRUE(std::isfinite(v)) << col;
    }
  }
  return csv;
}

const std::string kAggregateHeader =
    "sweep_var,sweep_value,method,mean_distance_error_m,stderr_m,mean_total_sensing_energy,"
    "mean_avg_transmit_power,mean_sum_rate,mean_ee,trials_ok,trials_failed";
const std::string kTrialsHeader =
    "sweep_var,sweep_value,trial,seed,method,targets,users,ok,distance_error_m,grid_bound_m,"
    "total_sensing_energy,avg_transmit_power,sum_rate,energy_efficiency,stage_count,"
    "symbol_counts,min_tau_c_db,failure";

const std::string kSmall =
    "--set subcarriers=16 --set elements_h=8 --set elements_v=8 --set candidates=64 --set trials=2 ";

}  // namespace

TEST(Cli, NoSubcommandIsUsageError) {
  const CliResult r = run("");
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run("transmogrify").code, 1); }

TEST(Cli, ConfigErrorsExitOne) {
  EXPECT_EQ(run("simulate --set bogus=1").code, 1);
  EXPECT_EQ(run("simulate --set theta_min_deg=80").code, 1);
  EXPECT_EQ(run("simulate -c /nonexistent/file.cfg").code, 1);
  EXPECT_EQ(run("beampattern --stage sideways").code, 1);
}

TEST(Cli, InfeasibleExitsTwo) {
  EXPECT_EQ(run("power " + kSmall + "--set users=3 --set tau_c_db=90").code, 2);
}

TEST(Cli, SimulateWritesValidCsv) {
  const fs::path dir = test_dir("simulate");
  const CliResult r = run("simulate " + kSmall + "--set sweep_var=tau_s_db --set sweep_values=15,20 -o " +
                    dir.string());
  ASSERT_EQ(r.code, 0);
  const std::vector<std::string> agg_num{"sweep_value", "mean_distance_error_m", "stderr_m",
                                         "mean_total_sensing_energy", "mean_avg_transmit_power",
                                         "mean_sum_rate", "mean_ee", "trials_ok", "trials_failed"};
  const Csv agg = validate_csv(read_file(dir / "aggregate.csv"), kAggregateHeader, agg_num);
  EXPECT_EQ(agg.rows.size(), 2u);
  EXPECT_FALSE(agg.comments.empty());
  EXPECT_NE(agg.comments[0].find("squintsense"), std::string::npos);
  validate_csv(r.out, kAggregateHeader, agg_num);
  const Csv trials = validate_csv(read_file(dir / "trials.csv"), kTrialsHeader,
                                  {"sweep_value", "trial", "seed", "targets", "users", "ok",
                                   "distance_error_m", "grid_bound_m", "total_sensing_energy",
                                   "avg_transmit_power", "sum_rate", "energy_efficiency",
                                   "stage_count", "min_tau_c_db"});
  EXPECT_EQ(trials.rows.size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "effective_config.txt"));
}

TEST(Cli, EffectiveConfigReproducesRun) {
  const fs::path a = test_dir("echo_a");
  const fs::path b = test_dir("echo_b");
  ASSERT_EQ(run("simulate " + kSmall + "--set seed=77 -o " + a.string()).code, 0);
  ASSERT_EQ(run("simulate -c " + (a / "effective_config.txt").string() + " -o " + b.string()).code, 0);
  EXPECT_EQ(read_file(a / "aggregate.csv"), read_file(b / "aggregate.csv"));
  EXPECT_EQ(read_file(a / "trials.csv"), read_file(b / "trials.csv"));
}

TEST(Cli, OutputDirectoryPrecedence) {
  const fs::path env_dir = test_dir("env");
  const fs::path flag_dir = test_dir("flag");
  const fs::path cfg_dir = test_dir("cfg");
  const std::string env = "SQUINTSENSE_OUTPUT_DIR='" + env_dir.string() + "'";
  ASSERT_EQ(run("simulate " + kSmall + "--set output_dir=" + cfg_dir.string(), env).code, 0);
  EXPECT_TRUE(fs::exists(env_dir / "aggregate.csv"));
  EXPECT_FALSE(fs::exists(cfg_dir / "aggregate.csv"));
  ASSERT_EQ(run("simulate " + kSmall + "-o " + flag_dir.string(), env).code, 0);
  EXPECT_TRUE(fs::exists(flag_dir / "aggregate.csv"));
  ASSERT_EQ(run("simulate " + kSmall + "--set output_dir=" + cfg_dir.string()).code, 0);
  EXPECT_TRUE(fs::exists(cfg_dir / "aggregate.csv"));
}

TEST(Cli, SimulateIsDeterministic) {
  const fs::path a = test_dir("det_a");
  const fs::path b = test_dir("det_b");
  ASSERT_EQ(run("simulate " + kSmall + "-o " + a.string()).code, 0);
  ASSERT_EQ(run("simulate " + kSmall + "-o " + b.string()).code, 0);
  EXPECT_EQ(read_file(a / "aggregate.csv"), read_file(b / "aggregate.csv"));
  EXPECT_EQ(read_file(a / "trials.csv"), read_file(b / "trials.csv"));
}

TEST(Cli, DetectTrace) {
  const CliResult r = run("detect " + kSmall + "--set targets=2 --trial 3");
  ASSERT_EQ(r.code, 0);
  const Csv csv = validate_csv(r.out, "stage,iteration,candidate_index,candidate_deg,correlation,residual_norm",
                               {"stage", "iteration", "candidate_index", "candidate_deg", "correlation",
                                "residual_norm"});
  int stage0 = 0;
  for (const auto& row : csv.rows) stage0 += row[0] == "0";
  EXPECT_EQ(stage0, 2);
  EXPECT_GE(csv.rows.size(), 4u);
}

TEST(Cli, PowerPlanOnDefaultConfig) {
  const CliResult r = run("power");
  ASSERT_EQ(r.code, 0);
  const Csv csv = validate_csv(r.out, "record,stage,user,subcarrier,value",
                               {"stage", "user", "subcarrier", "value"});
  std::map<std::string, std::map<std::string, int>> count;  // stage -> record -> rows
  for (const auto& row : csv.rows) ++count[row[1]][row[0]];
  ASSERT_GE(count.size(), 2u);  // stage 0 plus at least one AAS stage
  for (auto& [stage, recs] : count) {
    EXPECT_EQ(recs["symbols"], 1) << stage;
    EXPECT_EQ(recs["tau_c_db"], 1) << stage;
    EXPECT_EQ(recs["sensing_power"], 128) << stage;
    EXPECT_EQ(recs["comm_power"], 2 * 128) << stage;
  }
  for (const auto& row : csv.rows) {
    if (row[0] == "symbols") {
      EXPECT_GE(std::stoi(row[4]), 1);
    } else if (row[0] == "sensing_power" || row[0] == "comm_power") {
      EXPECT_GT(std::stod(row[4]), 0.0);
    }
  }
}

TEST(Cli, AasBeampatternPeaksOnGrid) {
  const CliResult r = run("beampattern --stage aas --theta-hat 45 --subcarriers 1,64,128");
  ASSERT_EQ(r.code, 0);
  const Csv csv = validate_csv(r.out, "subcarrier,angle_deg,gain_abs,gain_db",
                               {"subcarrier", "angle_deg", "gain_abs", "gain_db"});
  std::map<int, std::pair<double, double>> peak;  // subcarrier -> (gain, angle)
  double step = 0.0;
  double prev = -1.0;
  for (const auto& row : csv.rows) {
    const int s = std::stoi(row[0]);
    const double ang = std::stod(row[1]);
    const double g = std::stod(row[2]);
    if (prev >= 0.0 && ang > prev && step == 0.0) step = ang - prev;
    prev = ang;
    if (!peak.count(s) || g > peak[s].first) peak[s] = {g, ang};
  }
  ASSERT_EQ(peak.size(), 3u);
  squint::SystemConfig cfg;
  const auto grid = squint::aas_azimuth_grid(cfg);
  for (int s : {1, 64, 128}) {
    EXPECT_NEAR(peak[s].second, squint::rad_to_deg(grid[s - 1]), step + 1e-9) << "subcarrier " << s;
  }
}

TEST(Cli, EasAndCommBeampatterns) {
  const CliResult eas = run("beampattern --stage eas --subcarriers 1,128 --points 501");
  ASSERT_EQ(eas.code, 0);
  EXPECT_EQ(validate_csv(eas.out, "subcarrier,angle_deg,gain_abs,gain_db", {"gain_abs"}).rows.size(), 1002u);
  const CliResult comm = run("beampattern --stage comm --theta-hat 40 --phi 100 --subcarriers 1,128 --points 1201");
  ASSERT_EQ(comm.code, 0);
  const Csv csv = validate_csv(comm.out, "subcarrier,angle_deg,gain_abs,gain_db", {"gain_abs"});
  for (const auto& row : csv.rows) {
    if (std::abs(std::stod(row[1]) - 100.0) < 1e-9) {
      EXPECT_NEAR(std::stod(row[2]), 1.0, 1e-9);
    }
  }
}
