#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "idscale_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome run(const std::string& args, const std::string& env = "") {
  const fs::path err_file = work_dir() / "stderr.txt";
  const std::string cmd =
      env + " '" IDSCALE_BINARY "' " + args + " 2>'" + err_file.string() + "'";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_file);
  return r;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

const std::string& sine_csv() {
  static const std::string p = [] {
    const std::string file = path("sine.csv");
    run("generate --generator sine_toy --n 1000 --sigma-eps 0.025 --seed 1 --output " + file);
    return file;
  }();
  return p;
}

}  // namespace

TEST(Cli, HelpAndUnknownOptions) {
  EXPECT_EQ(run("--help").exit_code, 0);
  const Outcome bad = run("estimate --input x.csv --bogus 1");
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_EQ(json::parse(bad.err).at("error"), "invalid-argument");
  EXPECT_NE(run("").exit_code, 0);
}

TEST(Cli, GenerateWritesCsvAndSidecar) {
  const std::string out = path("gen_sine.csv");
  const Outcome r = run("generate --generator sine_toy --n 1000 --seed 3 --output " + out);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::ifstream in(out);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 1);
  }
  EXPECT_EQ(rows, 1000u);
  const json side = json::parse(slurp(out + ".json"));
  EXPECT_EQ(side.at("rows"), 1000);
  EXPECT_EQ(side.at("generator").at("seed"), 3);

  const std::string again = path("gen_sine_again.csv");
  ASSERT_EQ(run("generate --from-sidecar " + out + ".json --output " + again).exit_code, 0);
  EXPECT_EQ(json::parse(slurp(again + ".json")).at("file_hash"), side.at("file_hash"));
  EXPECT_EQ(slurp(again), slurp(out));
}

TEST(Cli, GenerateMoebiusShape) {
  const std::string out = path("moebius.csv");
  ASSERT_EQ(run("generate --generator moebius --n 2000 --D 20 --seed 4 --output " + out).exit_code, 0);
  const json side = json::parse(slurp(out + ".json"));
  EXPECT_EQ(side.at("rows"), 2000);
  EXPECT_EQ(side.at("columns"), 20);
}

TEST(Cli, EstimateAbideOnSine) {
  const Outcome r = run("estimate --input " + sine_csv() + " --method abide");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report.at("schema_version"), 1);
  const double d = report.at("estimate").at("d");
  EXPECT_GE(d, 0.9);
  EXPECT_LE(d, 1.2);
  EXPECT_TRUE(report.at("converged").get<bool>());
  EXPECT_GE(report.at("estimate").at("trace").size(), 2u);
  EXPECT_TRUE(report.at("k_star").contains("mean"));
  EXPECT_TRUE(report.at("timing").contains("graph_seconds"));
  EXPECT_EQ(report.at("dataset").at("n"), 1000);
}

TEST(Cli, EstimateWritesFileAndIsReproducible) {
  const std::string a = path("report_a.json"), b = path("report_b.json");
  ASSERT_EQ(run("estimate --input " + sine_csv() + " --method babide --seed 5 --output " + a).exit_code, 0);
  ASSERT_EQ(run("estimate --input " + sine_csv() + " --method babide --seed 5 --output " + b,
                "IDSCALE_THREADS=2")
                .exit_code,
            0);
  const json ja = json::parse(slurp(a)), jb = json::parse(slurp(b));
  EXPECT_EQ(ja.at("estimate"), jb.at("estimate"));
  EXPECT_EQ(ja.at("config"), jb.at("config"));
}

TEST(Cli, TinyRadiusGivesDegenerateScaleExit) {
  const Outcome r = run("estimate --input " + sine_csv() + " --method bide-r --tb 1e-9");
  EXPECT_EQ(r.exit_code, 6);
  EXPECT_EQ(json::parse(r.err).at("error"), "degenerate-scale");
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ParseErrorExit) {
  const std::string bad = path("ragged.csv");
  std::ofstream(bad) << "1,2\n3\n";
  const Outcome r = run("estimate --input " + bad + " --method twonn");
  EXPECT_EQ(r.exit_code, 3);
  const json e = json::parse(r.err);
  EXPECT_EQ(e.at("error"), "parse-error");
  EXPECT_NE(e.at("message").get<std::string>().find("line 2"), std::string::npos);
}

TEST(Cli, BadMethodIsInvalidArgument) {
  EXPECT_EQ(run("estimate --input " + sine_csv() + " --method danco").exit_code, 2);
  EXPECT_EQ(run("estimate --input " + sine_csv() + " --threshold-mode holm").exit_code, 2);
}

TEST(Cli, PeriodicInput) {
  const std::string out = path("torus.csv");
  ASSERT_EQ(run("generate --generator hypercube --n 2000 --d 2 --seed 6 --output " + out).exit_code, 0);
  const Outcome r = run("estimate --input " + out + " --periodic 1 --method twonn");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report.at("dataset").at("metric"), "periodic");
  EXPECT_NEAR(report.at("estimate").at("d").get<double>(), 2.0, 0.15);
}

TEST(Cli, ScanJsonAndCsv) {
  const Outcome j = run("scan --input " + sine_csv() + " --mode k --k-list 2,5,10,20 --no-validate");
  ASSERT_EQ(j.exit_code, 0) << j.err;
  const json out = json::parse(j.out);
  EXPECT_EQ(out.at("entries").size(), 4u);
  EXPECT_TRUE(out.at("reference").contains("d_star"));

  const Outcome c = run("scan --input " + sine_csv() +
                    " --mode radius --tb-min 1e-9 --tb-max 0.5 --points 5 --no-reference --format csv");
  ASSERT_EQ(c.exit_code, 0) << c.err;
  EXPECT_EQ(c.out.rfind("scale,d,lower,upper,mean_kb,validation_p,error", 0), 0u);
  EXPECT_NE(c.out.find("degenerate-scale"), std::string::npos);
}

TEST(Cli, BenchmarkSummary) {
  const Outcome r = run(
      "benchmark --generator hypercube --n 300 --d 2 --gen-seed 7 --replicas 4 "
      "--method twonn,abide --kmax 50 --no-validate --normality");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json out = json::parse(r.out);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& s : out) {
    EXPECT_EQ(s.at("replicas"), 4);
    EXPECT_EQ(s.at("estimates").size(), 4u);
    EXPECT_EQ(s.at("quantiles").size(), 3u);
    EXPECT_EQ(s.at("normality").at("z").size(), 4u);
  }
}

TEST(Cli, FetchWithoutNetworkFailsCleanly) {
  const Outcome r = run("fetch-optdigits --output " + path("od.csv") + " --url http://127.0.0.1:9/none");
  EXPECT_NE(r.exit_code, 0);
  // curl reports on stderr first; the error object is the last line.
  std::string last;
  std::istringstream lines(r.err);
  for (std::string line; std::getline(lines, line);)
    if (!line.empty()) last = line;
  EXPECT_TRUE(json::parse(last).contains("error"));
}
