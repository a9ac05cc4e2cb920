// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Workspace {
public:
    Workspace() : dir_(fs::temp_directory_path() / ("bpx_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Workspace() { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    Run bpx(const std::string& args) const {
        const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && '" BPX_CLI_PATH "' " + args + " > '" + out.string() +
                                "' 2> '" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        Run r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

private:
    fs::path dir_;
};

const Workspace& planted() {
    static Workspace ws;
    static bool ready = false;
    if (!ready) {
        const auto r = ws.bpx("synth --q-true 3 --instances-per-block 60 --test-instances-per-block 20 "
                              "--labels-per-block 8 --popular 2 --d 60 --seed 4 --out pl");
        REQUIRE(r.code == 0);
        ready = true;
    }
    return ws;
}

}  // namespace

TEST_CASE("synth writes train, test and truth") {
    const auto& ws = planted();
    CHECK(fs::exists(ws.path("pl_train.txt")));
    CHECK(fs::exists(ws.path("pl_test.txt")));
    CHECK(fs::exists(ws.path("pl_truth.bpxp")));
    CHECK(slurp(ws.path("pl_train.txt")).rfind("180 60 26\n", 0) == 0);
}

TEST_CASE("partition with automatic q finds the planted blocks") {
    const auto& ws = planted();
    const auto r = ws.bpx("partition pl_train.txt --q auto --lambda 1 --out auto");
    CHECK(r.code == 0);
    CHECK(r.out == "q = 3\n");
    CHECK(r.err.find("data partitioning:") != std::string::npos);
    for (const char* f : {"auto.bpxp", "auto.json", "auto_trace.csv", "auto_qsearch.csv", "auto.pgm", "auto_rows.csv",
                          "auto_cols.csv"}) {
        CHECK_MESSAGE(fs::exists(ws.path(f)), f);
    }
    CHECK(slurp(ws.path("auto.pgm")).rfind("P5\n", 0) == 0);
}

TEST_CASE("a single cluster runs with a warning") {
    const auto r = planted().bpx("partition pl_train.txt --q 1 --out one");
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
}

TEST_CASE("input errors exit with 1") {
    const auto& ws = planted();
    CHECK(ws.bpx("partition missing.txt").code == 1);
    {
        std::ofstream bad(ws.path("bad.txt"));
        bad << "2 3 2\n0 7:1\n1 0:1\n";
    }
    const auto r = ws.bpx("partition bad.txt --q 2");
    CHECK(r.code == 1);
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(ws.bpx("partition pl_train.txt --q banana").code == 1);
    CHECK(ws.bpx("frobnicate").code == 1);
}

TEST_CASE("training is deterministic and reports both phases") {
    const auto& ws = planted();
    const auto a = ws.bpx("train pl_train.txt --q 3 --lambda 1 --out a.bpxm");
    REQUIRE(a.code == 0);
    CHECK(a.err.find("data partitioning:") != std::string::npos);
    CHECK(a.err.find("training:") != std::string::npos);
    REQUIRE(ws.bpx("train pl_train.txt --q 3 --lambda 1 --threads 3 --out b.bpxm").code == 0);
    CHECK(slurp(ws.path("a.bpxm")) == slurp(ws.path("b.bpxm")));
}

TEST_CASE("a partition that does not fit the data exits with 2") {
    const auto& ws = planted();
    REQUIRE(ws.bpx("synth --q-true 2 --instances-per-block 10 --labels-per-block 4 --out small").code == 0);
    REQUIRE(ws.bpx("partition small_train.txt --q 2 --out small_part").code == 0);
    const auto r = ws.bpx("train pl_train.txt --partition small_part.bpxp --out x.bpxm");
    CHECK(r.code == 2);
}

TEST_CASE("predict and eval") {
    const auto& ws = planted();
    REQUIRE(ws.bpx("train pl_train.txt --q 3 --lambda 1 --out m.bpxm").code == 0);
    REQUIRE(ws.bpx("predict m.bpxm pl_test.txt --k 5 --out p1").code == 0);
    REQUIRE(ws.bpx("predict m.bpxm pl_test.txt --k 5 --threads 4 --out p4").code == 0);
    CHECK(slurp(ws.path("p1.txt")) == slurp(ws.path("p4.txt")));
    CHECK(slurp(ws.path("p1_mults.csv")) == slurp(ws.path("p4_mults.csv")));

    const auto r = ws.bpx("eval p1.txt pl_test.txt --train pl_train.txt --mults p1_mults.csv --k 1,3 --out m.csv");
    CHECK(r.code == 0);
    CHECK(r.out.find("P@1") != std::string::npos);
    CHECK(r.out.find("Speedup") != std::string::npos);
    const auto csv = slurp(ws.path("m.csv"));
    CHECK(csv.rfind("metric,k,value\n", 0) == 0);
    CHECK(csv.find("PSP,3,") != std::string::npos);

    REQUIRE(ws.bpx("train pl_train.txt --naive --out naive.bpxm").code == 0);
    REQUIRE(ws.bpx("predict naive.bpxm pl_test.txt --k 3 --out np").code == 0);
    const auto mults = slurp(ws.path("np_mults.csv"));
    CHECK(mults.find("0,-1,26\n") != std::string::npos);

    CHECK(ws.bpx("predict m.bpxm pl_train.txt --k 0").code == 1);
    CHECK(ws.bpx("eval p1.txt pl_train.txt").code == 2);
}

TEST_CASE("sweep") {
    const auto& ws = planted();
    const auto one = ws.bpx("sweep pl_train.txt pl_test.txt --lambdas 1 --q 3");
    REQUIRE(one.code == 0);
    std::istringstream lines(one.out);
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 2);

    const auto r = ws.bpx("sweep pl_train.txt pl_test.txt --lambdas 0.01,0.1,1,10,100 --q 3 --out sweep.csv");
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(ws.path("sweep.csv")));
    std::getline(csv, line);
    CHECK(line == "lambda,q,P@1,P@3,P@5,speedup");
    double previous = 0.0;
    while (std::getline(csv, line)) {
        const double s = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(s >= previous);
        previous = s;
    }
}

TEST_CASE("config file supplies defaults and flags win") {
    const auto& ws = planted();
    {
        std::ofstream cfg(ws.path("run.toml"));
        cfg << "[partition]\nq = \"1\"\nlambda = \"1\"\nout = \"from_config\"\n";
    }
    const auto a = ws.bpx("--config run.toml partition pl_train.txt");
    CHECK(a.code == 0);
    CHECK(a.out == "q = 1\n");
    CHECK(fs::exists(ws.path("from_config.bpxp")));
    const auto b = ws.bpx("--config run.toml partition pl_train.txt --q 3");
    CHECK(b.out == "q = 3\n");
}

TEST_CASE("cross-validated lambda writes the selection table") {
    const auto& ws = planted();
    const auto r =
        ws.bpx("partition pl_train.txt --q 3 --lambda cv --cv-lambdas 0.1,1,10 --cv-folds 3 --cv-k 8 --out cv");
    CHECK(r.code == 0);
    CHECK(r.err.find("lambda interval") != std::string::npos);
    CHECK(slurp(ws.path("cv_lambda.csv")).rfind("fold,lambda,accuracy,speedup,in_interval\n", 0) == 0);
}

TEST_CASE("disjoint lambda intervals exit with 2 and keep the table") {
    const auto& ws = planted();
    // P@1 on small folds is noisy enough that no candidate is good everywhere
    const auto r = ws.bpx("partition pl_train.txt --q 3 --lambda cv --cv-lambdas 0.1,1,10 --cv-folds 3 --out nocv");
    CHECK(r.code == 2);
    CHECK(r.err.find("do not intersect") != std::string::npos);
    CHECK(fs::exists(ws.path("nocv_lambda.csv")));
}
