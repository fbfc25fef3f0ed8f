#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sys/wait.h>

#include "support/synthetic.hpp"

using namespace musicking;
namespace mt = musicking::testing;
using report::Json;

namespace {

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(MUSICKING_LAB_EXE) + " " + args +
                            " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string grid() { return (mt::data_dir() / "backing_track_grid.json").string(); }

fs::path corpus(const std::string& name) {
    const auto dir = mt::scratch_dir(name);
    mt::write_session(dir, mt::corpus_session(mt::fixture_grid(), "alpha", 1));
    mt::write_session(dir, mt::corpus_session(mt::fixture_grid(), "beta", 2));
    return dir;
}

} // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("analyze"), 1);
    EXPECT_EQ(run("cluster --session x --k-range banana --dataset /tmp"), 1);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, ValidateExitCodes) {
    const auto data = corpus("cli_validate");
    const auto out = mt::scratch_dir("cli_validate_out");
    EXPECT_EQ(run("validate --dataset " + data.string() + " --out " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "dataset_summary.json"));
    report::write_text(data / "broken.json", "[");
    EXPECT_EQ(run("validate --dataset " + data.string() + " --out " + out.string()), 2);
    EXPECT_EQ(run("validate --dataset /nonexistent --out " + out.string()), 1);
}

TEST(Cli, EnvironmentDatasetAndFlagPrecedence) {
    const auto data = corpus("cli_env");
    const auto out = mt::scratch_dir("cli_env_out");
    EXPECT_EQ(run("validate --out " + out.string(), "MUSICKING_DATASET=" + data.string()), 0);
    EXPECT_EQ(Json::parse(mt::slurp(out / "dataset_summary.json"))["session_count"], 2);
    // the flag wins over the environment
    EXPECT_EQ(run("validate --dataset " + data.string() + " --out " + out.string(), "MUSICKING_DATASET=/nonexistent"),
              0);
}

TEST(Cli, ConfigFileBelowFlags) {
    const auto data = corpus("cli_config");
    const auto out = mt::scratch_dir("cli_config_out");
    const auto other = mt::scratch_dir("cli_config_other");
    const auto conf = mt::scratch_dir("cli_config_file") / "lab.conf";
    report::write_text(conf, "dataset=" + data.string() + "\nout=" + other.string() + "\ngrid=" + grid() +
                                 "\nk_range=2..3\nseed=5\n");
    EXPECT_EQ(run("cluster --config " + conf.string() + " --session alpha --out " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "cluster" / "alpha_hardware_bitalino_eda.json"));
    EXPECT_FALSE(fs::exists(other / "cluster"));
    const auto doc = Json::parse(mt::slurp(out / "cluster" / "alpha_hardware_bitalino_eda.json"));
    EXPECT_EQ(doc["result"]["seed"], 5);
    EXPECT_EQ(doc["diagnostics"].size(), 2u);

    EXPECT_EQ(run("cluster --config " + conf.string() + " --session alpha --seed 9 --out " + out.string()), 0);
    EXPECT_EQ(Json::parse(mt::slurp(out / "cluster" / "alpha_hardware_bitalino_eda.json"))["result"]["seed"], 9);
    EXPECT_EQ(run("cluster --config /nonexistent.conf --session alpha"), 1);
}

TEST(Cli, AnalyzeCompareCluster) {
    const auto data = corpus("cli_all");
    const auto out = mt::scratch_dir("cli_all_out");
    const std::string common = " --dataset " + data.string() + " --out " + out.string();
    EXPECT_EQ(run("analyze --session alpha --window-seconds 5 --svg" + common), 0);
    EXPECT_EQ(Json::parse(mt::slurp(out / "analyze" / "alpha.json"))["rolling"]["window_samples"], 38);
    EXPECT_EQ(run("compare --include-nonperformance --iqr-k 3" + common), 0);
    EXPECT_FALSE(Json::parse(mt::slurp(out / "compare.json"))["exclude_nonperformance"].get<bool>());
    EXPECT_EQ(run("cluster --session beta --column eda --grid " + grid() + " --k-range 2..4" + common), 0);
    EXPECT_EQ(run("cluster --session beta --grid /nonexistent.json" + common), 1);
    EXPECT_EQ(run("analyze --session gamma" + common), 1);
    EXPECT_EQ(run("analyze --session alpha --confidence-threshold 2" + common), 1);
}

TEST(Cli, LogsGoToStderrOnly) {
    const auto data = corpus("cli_stderr");
    const auto out = mt::scratch_dir("cli_stderr_out");
    const auto captured = out / "stdout.txt";
    const std::string cmd = std::string(MUSICKING_LAB_EXE) + " validate --dataset " + data.string() + " --out " +
                            out.string() + " >" + captured.string() + " 2>/dev/null";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(mt::slurp(captured).empty());
}
