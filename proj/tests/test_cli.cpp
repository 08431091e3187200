#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "commands.hpp"
#include "oracles.hpp"

using namespace lbrc;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "lbrc");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "lbrc_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string slurp(const fs::path& p) { return lbrc::detail::read_file(p.string()); }

// Value column of a curve file at t.
double curve_at(const fs::path& p, double t) {
    std::istringstream in(slurp(p));
    std::string line;
    double value = NAN;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        const auto comma = line.find(',');
        const double x = std::stod(line.substr(0, comma));
        if (x <= t) value = std::stod(line.substr(comma + 1));
    }
    return value;
}

}  // namespace

TEST_CASE("estimate on the one-row file") {
    const auto in = scratch("one.csv");
    write(in, "a,v,delta\n1.0,2.0,1\n");
    const auto out = scratch("one_out");
    fs::remove_all(out);
    const auto r = run({"estimate", in.string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(out)) files += e.path().extension() == ".csv";
    CHECK(files == 5);
    CHECK(curve_at(out / "f_bar.csv", 3.0) == 0.5);
    CHECK(slurp(out / "f_bar.csv").find("# estimator: f_bar") == 0);
    CHECK_THAT(slurp(out / "f_bar.csv"), ContainsSubstring("# config_hash: "));
}

TEST_CASE("estimate errors") {
    const auto empty = scratch("empty.csv");
    write(empty, "");
    auto r = run({"estimate", empty.string(), "--out", scratch("e_out").string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("no observations"));
    const auto bad = scratch("bad.csv");
    write(bad, "a,v,delta\n1,2,1\n0,1,1\n");
    r = run({"estimate", bad.string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("row 2"));
    r = run({"estimate", bad.string(), "--estimator", "magic"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("--estimator"));
    r = run({"estimate", bad.string(), "--grid", "n:x"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("--grid"));
}

TEST_CASE("estimate --estimator tjw without truncation equals Kaplan-Meier") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 4.0);
    std::vector<double> y;
    std::vector<int> delta;
    std::string csv = "a,y,delta\n";
    for (int i = 0; i < 60; ++i) {
        y.push_back(u(rng));
        delta.push_back(u(rng) < 3.0 ? 1 : 0);
        csv += format_double(1e-9) + "," + format_double(y.back()) + "," + std::to_string(delta.back()) + "\n";
    }
    const auto in = scratch("km.csv");
    write(in, csv);
    const auto out = scratch("km_out");
    fs::remove_all(out);
    REQUIRE(run({"estimate", in.string(), "--estimator", "tjw", "--grid", "n:20", "--out", out.string()}).code == 0);
    CHECK_FALSE(fs::exists(out / "f_tilde.csv"));
    std::istringstream lines(slurp(out / "f_tjw.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
        if (line[0] == '#' || line[0] == 't') continue;
        const auto comma = line.find(',');
        const double t = std::stod(line.substr(0, comma));
        CHECK(std::stod(line.substr(comma + 1)) == oracle::kaplan_meier(y, delta, t));
        ++rows;
    }
    CHECK(rows >= 20);
}

TEST_CASE("simulate is reproducible") {
    const auto a = scratch("sim_a.csv");
    const auto b = scratch("sim_b.csv");
    REQUIRE(run({"simulate", "--n", "5", "--seed", "42", "--out", a.string()}).code == 0);
    REQUIRE(run({"simulate", "--n", "5", "--seed", "42", "--out", b.string()}).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(parse_dataset(a.string()) == sample_lbrc(TruthModel::exponential(1.0, 0.5), 5, 42));
    const auto r = run({"simulate", "--n", "200", "--censor-rate", "none", "--seed", "1"});
    REQUIRE(r.code == 0);
    CHECK(parse_dataset_text(r.out).event_count() == 200);
    CHECK(run({"simulate", "--rate", "-1"}).code == 1);
    CHECK(run({"simulate", "--censor-rate", "abc"}).code == 1);
    CHECK(run({"simulate", "--family", "gamma"}).code == 1);
    CHECK(run({"simulate", "--family", "weibull", "--shape", "1.5", "--scale", "2", "--n", "10"}).code == 0);
}

TEST_CASE("rate-experiment config handling") {
    const auto cfg = scratch("one_size.cfg");
    write(cfg, "sizes = [100]\nreps = 50\n");
    auto r = run({"rate-experiment", cfg.string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("need ≥ 2 sizes"));

    write(cfg, "sizes = 100, 200\nreps = fifty\n");
    r = run({"rate-experiment", cfg.string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("reps"));

    write(cfg, "colour = blue\n");
    r = run({"rate-experiment", cfg.string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("colour"));

    write(cfg, "which = Rn9\n");
    r = run({"rate-experiment", cfg.string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("which"));

    write(cfg, "grid = h-quantiles:10:0.1:0.999\nsizes = 100, 200\nreps = 50\n");
    r = run({"rate-experiment", cfg.string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("window too wide"));
}

TEST_CASE("rate-experiment reports are deterministic") {
    const auto cfg = scratch("small.cfg");
    const auto out1 = scratch("rep1.csv");
    const auto out2 = scratch("rep2.csv");
    write(cfg, "which = Rn2\nsizes = 100, 200\nreps = 50\nseed = 5\nout = " + out1.string() + "\n");
    auto r1 = run({"rate-experiment", cfg.string(), "--threads", "1"});
    REQUIRE(r1.code == 0);
    auto r2 = run({"rate-experiment", cfg.string(), "--threads", "2", "--out", out2.string()});
    REQUIRE(r2.code == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(r1.out == r2.out);
    CHECK_THAT(slurp(out1), ContainsSubstring("# slope: "));
    CHECK_THAT(r1.out, ContainsSubstring("slope="));
}

TEST_CASE("influence command") {
    const auto one = scratch("inf_one.csv");
    write(one, "a,v,delta\n1.0,2.0,1\n");
    auto r = run({"influence", one.string()});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("t,f_tilde,se,ci_low,ci_high,d,v,v_alt"));
    CHECK_THAT(r.out, ContainsSubstring("\n3,1,0,1,1,"));
    CHECK(run({"influence", one.string(), "--level", "1.5"}).code == 1);
    CHECK(run({"influence", one.string(), "--grid", "bogus"}).code == 1);

    const auto sim = scratch("inf_sim.csv");
    REQUIRE(run({"simulate", "--n", "300", "--seed", "3", "--out", sim.string()}).code == 0);
    r = run({"influence", sim.string(), "--grid", "n:10", "--level", "0.9"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line[0] == '#' || line[0] == 't') continue;
        std::vector<double> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(std::stod(cell));
        REQUIRE(f.size() == 8);
        CHECK(f[3] >= 0.0);
        CHECK(f[4] <= 1.0);
        CHECK(f[3] <= f[1]);
        CHECK(f[1] <= f[4]);
        ++rows;
    }
    CHECK(rows == 10);
}

TEST_CASE("help and unknown commands") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"estimate", "--help"}).code == 0);
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("installed binary exit codes") {
    const char* exe = std::getenv("LBRC_CLI");
    if (exe == nullptr) SKIP("LBRC_CLI not set");
    const auto in = scratch("bin_one.csv");
    write(in, "a,v,delta\n1.0,2.0,1\n");
    CHECK(std::system((std::string(exe) + " influence " + in.string() + " > /dev/null").c_str()) == 0);
    const int bad = std::system((std::string(exe) + " influence " + in.string() + " --level 1.5 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(bad) == 1);
}
