#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / "graspinf_cli_test";
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        const CliResult g = run("gen-data --n 200 --seed 7 --out " + path("data.bin"));
        ASSERT_EQ(g.code, 0) << g.err;
        const CliResult t = run("train --data " + path("data.bin") + " --arch patch-net --iters 60 --out " + path("patch.ckpt"));
        ASSERT_EQ(t.code, 0) << t.err;
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static std::string path(const std::string& name) { return (dir_ / name).string(); }

    static CliResult run(const std::string& args) {
        const std::string out = path("stdout.txt"), err = path("stderr.txt");
        const std::string cmd = std::string(GRASPINF_CLI) + " " + args + " >" + out + " 2>" + err;
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, GenDataSummaryAndByteIdentity) {
    const CliResult a = run("gen-data --n 150 --seed 3 --out " + path("a.bin"));
    const CliResult b = run("gen-data --n 150 --seed 3 --out " + path("b.bin"));
    ASSERT_EQ(a.code, 0);
    EXPECT_NE(a.out.find("150 records"), std::string::npos) << a.out;
    EXPECT_NE(a.out.find("positive"), std::string::npos);
    EXPECT_EQ(slurp(path("a.bin")), slurp(path("b.bin")));
    EXPECT_NE(a.err.find("# resolved config"), std::string::npos);
    EXPECT_NE(a.err.find("seed=3  (flag)"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("gen-data --n 0 --out " + path("x.bin")).code, 2);
    EXPECT_FALSE(fs::exists(path("x.bin")));
    EXPECT_EQ(run("gen-data --bogus 1").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("train --data " + path("data.bin") + " --arch resnet --out " + path("x.ckpt")).code, 2);
    EXPECT_EQ(run("eval --data " + path("data.bin") + " --folds 1").code, 2);
    EXPECT_EQ(run("bench --model " + path("patch.ckpt") + " --methods teleport").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, DataErrorsExitThreeWithoutPartialOutput) {
    EXPECT_EQ(run("train --data " + path("missing.bin") + " --out " + path("y.ckpt")).code, 3);
    EXPECT_FALSE(fs::exists(path("y.ckpt")));
    const CliResult bad = run("gen-data --n 10 --out " + path("no/such/dir/d.bin"));
    EXPECT_EQ(bad.code, 3);
    std::ofstream(path("garbage.ckpt")) << "not a checkpoint\n";
    EXPECT_EQ(run("plan --model " + path("garbage.ckpt")).code, 3);
}

TEST_F(Cli, ConfigFilePrecedence) {
    std::ofstream(path("run.cfg")) << "# comment\nn=120\nseed=5\nout=" << path("from_file.bin") << "\n";
    const CliResult r = run("gen-data --config " + path("run.cfg") + " --seed 6");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("120 records"), std::string::npos);
    EXPECT_NE(r.err.find("seed=6  (flag)"), std::string::npos);
    EXPECT_NE(r.err.find("n=120  (file"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("workers=1  (default)"), std::string::npos);
    std::ofstream(path("bad.cfg")) << "n=10\nwarp=9\n";
    const CliResult bad = run("gen-data --config " + path("bad.cfg"));
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find(":2"), std::string::npos) << bad.err;
}

TEST_F(Cli, TrainRegressionFiltersPositives) {
    const CliResult r = run("train --data " + path("data.bin") + " --arch regression --iters 20 --out " + path("reg.ckpt"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("positives only"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("of 200"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("reg.ckpt.loss")));
    EXPECT_EQ(run("eval --data " + path("data.bin") + " --model " + path("reg.ckpt")).code, 2);
    EXPECT_EQ(run("plan --model " + path("reg.ckpt")).code, 2);
}

TEST_F(Cli, TrainDeterministic) {
    const std::string base = "train --data " + path("data.bin") + " --arch config-net --iters 15 --seed 4 --out ";
    ASSERT_EQ(run(base + path("c1.ckpt")).code, 0);
    ASSERT_EQ(run(base + path("c2.ckpt")).code, 0);
    EXPECT_EQ(slurp(path("c1.ckpt")), slurp(path("c2.ckpt")));
    EXPECT_EQ(slurp(path("c1.ckpt.loss")), slurp(path("c2.ckpt.loss")));
}

TEST_F(Cli, EvalReportsFolds) {
    const CliResult r = run("eval --data " + path("data.bin") + " --arch patch-net --iters 20 --folds 2 --scores-out " +
                      path("scores.txt"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("mean"), std::string::npos) << r.out;
    const CliResult p = run("plot-data --scores " + path("scores.txt"));
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_NE(p.out.find("# curve pooled"), std::string::npos);
}

TEST_F(Cli, PlanEmitsThreeRecordsAndChoice) {
    const CliResult r = run("plan --model " + path("patch.ckpt") + " --scene-seed 3 --planner.max-iterations 5");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    int records = 0;
    bool chosen = false;
    while (std::getline(lines, line)) {
        records += line.rfind("init=", 0) == 0;
        chosen |= line.rfind("chosen=", 0) == 0;
    }
    EXPECT_EQ(records, 3);
    EXPECT_TRUE(chosen);
}

TEST_F(Cli, PlanFullChainOnFixedPatchNotesEquivalence) {
    ASSERT_EQ(run("train --data " + path("data.bin") + " --arch config-net --iters 5 --out " + path("fixed.ckpt")).code, 0);
    const CliResult r = run("plan --model " + path("fixed.ckpt") + " --mode full-chain --planner.max-iterations 3");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("equal config-only"), std::string::npos) << r.err;
    const CliResult p = run("plan --model " + path("patch.ckpt") + " --mode full-chain --planner.max-iterations 3");
    EXPECT_EQ(p.err.find("equal config-only"), std::string::npos);
}

TEST_F(Cli, PlanInitFile) {
    std::ofstream(path("inits.txt")) << "0.5 0.5 0.0 0.08\n0.45,0.5,1.2,0.1\n";
    const CliResult ok = run("plan --model " + path("patch.ckpt") + " --inits file --init-file " + path("inits.txt") +
                       " --planner.max-iterations 3");
    ASSERT_EQ(ok.code, 0) << ok.err;
    std::ofstream(path("bad_inits.txt")) << "0.5 0.5 0.0 0.08\n0.5 0.5 x 0.1\n";
    const CliResult bad = run("plan --model " + path("patch.ckpt") + " --inits file --init-file " + path("bad_inits.txt"));
    EXPECT_EQ(bad.code, 3);
    EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;
}

TEST_F(Cli, BenchMethodsDeterminismAndPlotData) {
    const std::string base = "bench --model " + path("patch.ckpt") +
                             " --scenes 4 --samples 10 --planner.max-iterations 5 --methods inference,heuristic";
    const CliResult a = run(base + " --log " + path("log1.txt") + " --out " + path("rep1.txt"));
    const CliResult b = run(base + " --log " + path("log2.txt") + " --out " + path("rep2.txt"));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(slurp(path("log1.txt")), slurp(path("log2.txt")));
    EXPECT_EQ(slurp(path("rep1.txt")), slurp(path("rep2.txt")));
    EXPECT_NE(a.out.find("inference"), std::string::npos);
    EXPECT_EQ(a.out.find("sampling"), std::string::npos);
    EXPECT_EQ(a.out.find("max-eval"), std::string::npos);
    const CliResult p = run("plot-data --log " + path("log1.txt"));
    ASSERT_EQ(p.code, 0);
    EXPECT_NE(p.out.find("# success-rate"), std::string::npos);
}
