#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fabernet/constructors.hpp"
#include "fabernet/corpus.hpp"
#include "fabernet/error.hpp"
#include "fabernet/network_io.hpp"
#include "fabernet/verify.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace fabernet;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

std::string binary() {
    const char* env = std::getenv("FABER_RELU_BIN");
    return env ? env : "faber-relu";
}

Run run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("faber_relu_test_" + std::to_string(::getpid())) / name;
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("network file round trip is bit exact") {
    const ApproxConfig cfg{2, 2.0, 3.0, 2.0, 0.2};
    const auto f = make_corpus("lacunary", 2, 2.0);
    const auto c = compile(f.oracle(), cfg);
    std::stringstream buf;
    write_network(buf, c.net);
    const auto back = read_network(buf);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::array<double, 2> x{u(rng), u(rng)};
        const double a = c.net.eval(x), b = back.eval(x);
        mismatches += std::memcmp(&a, &b, sizeof a) != 0;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("compile subcommand writes a loadable network") {
    const auto dir = scratch("compile");
    const auto path = dir / "net.json";
    const auto r = run("compile --func poly_tent --dim 2 --alpha 2 --beta 3 --p 2 --eps 0.2 --out " + path.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("m=", 0) == 0);
    CHECK(r.out.find(" W=") != std::string::npos);
    CHECK(r.out.find(" eps0=0.25") != std::string::npos);
    const auto loaded = load_network(path.string());
    const auto f = make_corpus("poly_tent", 2, 2.0);
    const auto mem = compile(f.oracle(), ApproxConfig{2, 2.0, 3.0, 2.0, 0.2});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::array<double, 2> x{u(rng), u(rng)};
        const double a = mem.net.eval(x), b = loaded.eval(x);
        mismatches += std::memcmp(&a, &b, sizeof a) != 0;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("grid subcommand output") {
    auto r = run("grid --dim 1 --beta 2 --m 0 --points");
    CHECK(r.code == 0);
    CHECK(r.out == "0\n1/2^1\n1\n");
    r = run("grid --dim 2 --beta 2 --m 3");
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 8);
    r = run("grid --dim 2 --beta 1 --m 3");
    CHECK(r.code == 2);
}

TEST_CASE("sample and measure subcommands") {
    const auto dir = scratch("sample");
    const auto path = dir / "R.txt";
    auto r = run("sample --func poly_tent --dim 2 --alpha 2 --beta 3 --p 2 --m 4 --out " + path.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("terms=", 0) == 0);
    CHECK(r.out.find(" grid=") != std::string::npos);
    CHECK(r.out.find(" bound=0.157") != std::string::npos);
    CHECK(fs::file_size(path) > 0);

    r = run("measure --lhs func:poly_tent --rhs expansion:" + path.string() + " --dim 2 --p 2 --scheme tensor --n 64");
    REQUIRE(r.code == 0);
    std::vector<std::string> fields;
    std::stringstream row(r.out);
    for (std::string f; std::getline(row, f, ',');)
        fields.push_back(f);
    REQUIRE(fields.size() == 7);
    CHECK(fields[3] == "tensor");
    const double value = std::stod(fields[4]);
    CHECK(value > 0.0);
    CHECK(value < 0.1577);

    r = run("measure --lhs func:poly_tent --rhs func:poly_tent --dim 2 --p inf --scheme mc --N 2000");
    REQUIRE(r.code == 0);
    CHECK(r.out.find(",inf,mc,0,0,") != std::string::npos);
}

TEST_CASE("corpus list") {
    const auto r = run("corpus list");
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 7);
    CHECK(r.out.find("lacunary") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run("verify --criteria 4 --alphas 2 --betas 2 --out-dir " + scratch("bad").string()).code == 2);
    CHECK(run("compile --dim 2 --eps 0.3").code == 2);
    CHECK(run("compile --dim 2 --alpha 2.5").code == 2);
    CHECK(run("no-such-command").code == 2);
    CHECK(run("sample --func nope").code == 2);
    const auto dir = scratch("ok");
    const auto r = run("verify --criteria 4 --out-dir " + dir.string());
    CHECK(r.code == 0);
    CHECK(r.out.rfind("PASS criterion 4", 0) == 0);
    const auto csv = slurp(dir / "verify.csv");
    CHECK(csv.rfind("criterion,cell,measured,bound,status\n", 0) == 0);
}

TEST_CASE("outputs are deterministic") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    REQUIRE(run("sweep --no-measure --sweep-eps 0.2,0.1,0.3 --out " + (a / "sweep.csv").string()).code == 0);
    REQUIRE(run("sweep --no-measure --sweep-eps 0.2,0.1,0.3 --out " + (b / "sweep.csv").string()).code == 0);
    const auto sa = slurp(a / "sweep.csv");
    CHECK(sa == slurp(b / "sweep.csv"));
    CHECK(sa.find("SKIP") != std::string::npos);
    REQUIRE(run("verify --criteria 10 --out-dir " + a.string()).code == 0);
    REQUIRE(run("verify --criteria 10 --out-dir " + b.string()).code == 0);
    CHECK(slurp(a / "verify.csv") == slurp(b / "verify.csv"));
}

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.betas = {2.0};
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
    cfg = ExperimentConfig{};
    cfg.compile_betas = {2.0};
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
    cfg = ExperimentConfig{};
    cfg.criteria = {11};
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
}

TEST_CASE("eps at or above eps0 is skipped") {
    ExperimentConfig cfg;
    cfg.eps = {0.3};
    const auto r = check_end_to_end(cfg);
    CHECK(r.status == Status::skip);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].status == Status::skip);
    CHECK(r.rows[0].cell.find("eps0=0.25") != std::string::npos);
}

TEST_CASE("fits") {
    const auto f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(fit_through_origin({1, 2}, {2, 4}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(linear_fit({1}, {1}), InvalidParameter);
}
