#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("epibt_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

Result cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const std::string cmd = std::string("\"") + EPIBT_CLI + "\" " + args + " > \"" + out.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out)};
}

std::string data(const std::string& rel) { return std::string(EPIBT_DATA_DIR) + "/" + rel; }

const std::string kToyRun = "run --map " + data("maps/open-2-2.map") + " --scenario " + data("scenarios/open-2-2-1.scen");

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, RunOnToyWritesMetrics) {
  const fs::path out = scratch() / "toy";
  const Result r = cli(kToyRun + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("throughput"), std::string::npos);
  EXPECT_NE(r.out.find("mean_step_ms"), std::string::npos);
  EXPECT_NE(slurp(out / "metrics.txt").find("throughput="), std::string::npos);
  for (const char* f : {"actions.log", "metrics.json", "step_times.csv", "heatmap.csv", "heatmap.pgm"}) EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST(Cli, Pibt5RejectsOtherLengths) {
  EXPECT_EQ(cli(kToyRun + " --mode pibt5 --op-len 4 --out " + (scratch() / "bad").string()).code, 2);
  EXPECT_EQ(cli(kToyRun + " --mode pibt5 --out " + (scratch() / "p5").string()).code, 0);
}

TEST(Cli, IdenticalRunsGiveIdenticalLogs) {
  const std::string common = "run --map " + data("maps/random-32-32-20.map") + " --scenario " +
                             data("scenarios/random-32-32-20-200.scen") + " --horizon 40 --lns-iterations 200 --tiebreak RND --seed 3";
  ASSERT_EQ(cli(common + " --out " + (scratch() / "det_a").string()).code, 0);
  ASSERT_EQ(cli(common + " --out " + (scratch() / "det_b").string()).code, 0);
  const std::string a = slurp(scratch() / "det_a" / "actions.log");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(scratch() / "det_b" / "actions.log"));
}

TEST(Cli, AnalyzeOperations) {
  const Result r = cli("analyze --ops rotation 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("cells / states / sequences: 11 / 23 / 17\n", 0), 0u) << r.out;
  EXPECT_EQ(count_lines(r.out), 18u);
  EXPECT_NE(cli("analyze --ops omni 2").out.find(": 13 / 13 / 25\n"), std::string::npos);
  EXPECT_EQ(cli("analyze --ops rotation 9").code, 2);
}

TEST(Cli, AnalyzeMaps) {
  const Result r = cli("analyze --map " + data("maps/random-32-32-20.map"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("|V| 819\n"), std::string::npos);
  EXPECT_EQ(r.out.find("cycle_condition_violations 0\n"), std::string::npos);
  EXPECT_GT(count_lines(r.out), 3u);

  const fs::path open = scratch() / "open3.map";
  put(open, "type octile\nheight 3\nwidth 3\nmap\n...\n...\n...\n");
  const Result o = cli("analyze --map " + open.string());
  ASSERT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("cycle_condition_violations 0\n"), std::string::npos);
  EXPECT_EQ(count_lines(o.out), 3u);
}

TEST(Cli, ValidateRunLog) {
  const fs::path out = scratch() / "val";
  ASSERT_EQ(cli(kToyRun + " --out " + out.string()).code, 0);
  const Result r = cli("validate --log " + (out / "actions.log").string() + " --map " + data("maps/open-2-2.map") +
                       " --scenario " + data("scenarios/open-2-2-1.scen"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("ok:", 0), 0u);
}

TEST(Cli, ValidateReportsSwap) {
  const fs::path map = scratch() / "corridor.map", log = scratch() / "swap.log";
  put(map, "type octile\nheight 1\nwidth 4\nmap\n....\n");
  put(log, "# epibt action log\nmodel rotation\nagents 2\nstart 0 1 E\nstart 0 2 W\nsteps 2\nWW\nFF\n");
  const Result r = cli("validate --log " + log.string() + " --map " + map.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(count_lines(r.out), 1u) << r.out;
  EXPECT_NE(r.out.find("swap"), std::string::npos);
  EXPECT_NE(r.out.find("t=1"), std::string::npos);
}

TEST(Cli, TruncatedLogIsParseError) {
  const fs::path out = scratch() / "trunc";
  ASSERT_EQ(cli(kToyRun + " --out " + out.string()).code, 0);
  std::string text = slurp(out / "actions.log");
  text.resize(text.size() - 4);
  const fs::path cut = scratch() / "cut.log";
  put(cut, text);
  EXPECT_EQ(cli("validate --log " + cut.string() + " --map " + data("maps/open-2-2.map")).code, 3);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli(kToyRun + " --no-such-flag").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("run --map " + data("maps/open-2-2.map")).code, 2);
  EXPECT_EQ(cli(kToyRun + " --tiebreak XYZ --out " + (scratch() / "tb").string()).code, 2);
  const Result help = cli("run --help");
  EXPECT_EQ(help.code, 0);
  for (const char* flag : {"--op-len", "--revisit-limit", "--tiebreak", "--lns-iterations", "--guidance-file", "--seed", "--sweep"})
    EXPECT_NE(help.out.find(flag), std::string::npos) << flag;
}

TEST(Cli, SweepWritesOneRowPerCell) {
  const fs::path out = scratch() / "sweep";
  const Result r = cli(kToyRun + " --sweep --sweep-op-len 2 3 --sweep-revisit-limit 1 10 --sweep-tiebreak FRW NONE --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_lines(slurp(out / "sweep.csv")), 1u + 8u);
}
