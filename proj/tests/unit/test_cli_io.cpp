#include "doctest.h"

#include "preproc/cli_io.hpp"
#include "preproc/errors.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace preproc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("preproc_cli_io_" + std::to_string(std::rand()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
    std::string read(const std::string& name) const {
        std::ifstream f(path / name);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
};

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args, const std::string& input = "") {
    args.insert(args.begin(), "preproc");
    std::istringstream in(input);
    std::ostringstream out, err;
    Outcome o;
    o.code = run_cli(args, in, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

const char* kGrid = R"({"dims":[{"lower":-4,"upper":4,"nodes":9,"spacing":"linear"},
                                {"lower":0.3,"upper":2.5,"nodes":6,"spacing":"linear"}]})";

std::string test_config(const std::string& null = R"({"class":"gaussian"})") {
    return std::string(R"({"family":"gaussian","grid":)") + kGrid + R"(,"null":)" + null + "}";
}

std::string lines(const std::vector<double>& x) {
    std::ostringstream os;
    os.precision(17);
    for (double v : x) os << v << '\n';
    return os.str();
}

std::vector<double> normal_data(std::size_t n, double mean, std::uint64_t seed) {
    Rng rng(seed);
    return sample_n(Distribution::normal(mean, 1.0), n, rng);
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("observation parsing") {
    CHECK(parse_observation("  1.5 ", 1) == 1.5);
    CHECK(parse_observation("-2e-3\r", 1) == -2e-3);
    for (const char* bad : {"", "abc", "1.0 2.0", "nan", "inf", "1,5"}) {
        try {
            parse_observation(bad, 7);
            FAIL("accepted " << bad);
        } catch (const InputError& e) {
            CHECK(e.line() == 7);
            CHECK(std::string(e.what()).find("line 7") != std::string::npos);
        }
    }
    std::istringstream in("1\n2\n\n3\n");
    try {
        read_all_observations(in);
        FAIL("blank line accepted");
    } catch (const InputError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("test command") {
    TempDir dir;
    const auto cfg = dir.write("c.json", test_config(R"({"class":"simple","density":{"type":"normal","mean":0,"sd":1}})"));

    SUBCASE("empty input gives the n = 0 row") {
        const auto o = run({"test", "-c", cfg});
        CHECK(o.code == kExitOk);
        CHECK(o.out == "n,log_num,log_den,log_e,anytime_p,flag\n0,0,0,0,1,ok\n");
        CHECK(o.err.find("crossing alpha=0.050000000000000003 n=none") != std::string::npos);
    }
    SUBCASE("a shifted stream crosses") {
        const auto o = run({"test", "-c", cfg, "--alpha", "0.05", "--alpha", "0.01"}, lines(normal_data(300, 1.0, 1)));
        CHECK(o.code == kExitOk);
        CHECK(count_lines(o.out) == 302);
        CHECK(o.err.find("crossing alpha=0.050000000000000003 n=") != std::string::npos);
        CHECK(o.err.find("n=none") == std::string::npos);
    }
    SUBCASE("stride thins the output") {
        const auto o = run({"test", "-c", cfg, "--stride", "100"}, lines(normal_data(300, 0.0, 2)));
        CHECK(o.code == kExitOk);
        CHECK(count_lines(o.out) == 5); // header, 0, 100, 200, 300
    }
    SUBCASE("resume reproduces the uninterrupted output") {
        const auto data = normal_data(200, 0.5, 3);
        const std::vector<double> head(data.begin(), data.begin() + 80), tail(data.begin() + 80, data.end());
        const auto full = run({"test", "-c", cfg}, lines(data));
        const auto ckpt = (dir.path / "ck.json").string();
        const auto first = run({"test", "-c", cfg, "--checkpoint", ckpt}, lines(head));
        REQUIRE(first.code == kExitOk);
        const auto second = run({"test", "-c", cfg, "--resume", ckpt}, lines(tail));
        REQUIRE(second.code == kExitOk);
        CHECK(second.out == full.out);
    }
    SUBCASE("output file") {
        const auto o = run({"test", "-c", cfg, "-o", (dir.path / "out.csv").string()}, "0.5\n");
        CHECK(o.code == kExitOk);
        CHECK(o.out.empty());
        CHECK(count_lines(dir.read("out.csv")) == 3);
    }
}

TEST_CASE("exit codes") {
    TempDir dir;
    const auto cfg = dir.write("c.json", test_config());
    CHECK(run({"test", "-c", dir.write("bad.json", R"({"family":"gaussian"})")}).code == kExitConfig);
    CHECK(run({"test", "-c", dir.write("junk.json", "{not json")}).code == kExitConfig);
    CHECK(run({"test", "-c", dir.write("k.json", R"({"family":"gaussian","bogus":1})")}).code == kExitConfig);
    CHECK(run({"test", "-c", (dir.path / "missing.json").string()}).code == kExitConfig);
    CHECK(run({"test"}).code == kExitConfig);
    CHECK(run({"frobnicate"}).code == kExitConfig);
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run({"test", "-c", cfg, "--alpha", "2"}).code == kExitConfig);
    const auto data_err = run({"test", "-c", cfg}, "1.0\n2.0\nxyz\n");
    CHECK(data_err.code == kExitData);
    CHECK(data_err.err.find("line 3") != std::string::npos);
    CHECK(run({"test", "-c", cfg}, "1.0\n1e300\n").code == kExitNumerical);
    const auto gamma_cfg = dir.write("g.json", R"({"family":"gamma","grid":{"dims":[{"lower":1,"upper":15,"nodes":5,"spacing":"linear"},
        {"lower":0.01,"upper":5,"nodes":5,"spacing":"log"}]},"null":{"class":"monotone"}})");
    CHECK(run({"test", "-c", gamma_cfg}, "1.0\n-1.0\n").code == kExitData);
    CHECK(run({"test", "-c", dir.write("cmd.json", R"({"command":"simulate"})")}).code == kExitConfig);
}

TEST_CASE("simulate command") {
    TempDir dir;
    const auto cfg = dir.write("s.json", std::string(R"({"generator":{"type":"normal","mean":0,"sd":1},"family":"gaussian","grid":)") +
                                             kGrid + R"(,"null":{"class":"gaussian"}})");
    const auto summary = (dir.path / "sum.json").string();
    const auto a = run({"simulate", "-c", cfg, "--reps", "3", "--max-n", "200", "--stride", "50", "--summary", summary});
    REQUIRE(a.code == kExitOk);
    CHECK(a.out.rfind("rep,n,log_e\n", 0) == 0);
    CHECK(count_lines(a.out) == 1 + 3 * 5);
    const auto j = json::parse(dir.read("sum.json"));
    for (const char* key : {"scenario", "rng", "n_min", "mean_slope", "sd_slope", "slopes", "theoretical_delta",
                            "terminal_log_e", "median_max_log_e", "failures"})
        CHECK(j.contains(key));
    CHECK(j.at("slopes").size() == 3);
    CHECK(j.at("theoretical_delta").get<double>() <= 0.0);
    const auto b = run({"simulate", "-c", cfg, "--reps", "3", "--max-n", "200", "--stride", "50", "--workers", "3",
                        "--no-delta"});
    REQUIRE(b.code == kExitOk);
    CHECK(b.out == a.out);
    const auto k = json::parse(b.err);
    CHECK(k.at("theoretical_delta").is_null());
    const auto c = run({"simulate", "-c", cfg, "--reps", "3", "--max-n", "200", "--stride", "50", "--seed", "9",
                        "--no-delta"});
    CHECK(c.out != a.out);
}

TEST_CASE("growth-rate command") {
    TempDir dir;
    const auto cfg = dir.write("g.json", R"({"generator":{"type":"gamma","shape":2,"rate":1},"family":"gamma",
        "grid":{"dims":[{"lower":1,"upper":15,"nodes":40,"spacing":"linear"},{"lower":1e-5,"upper":5,"nodes":40,"spacing":"log"}]},
        "null":{"class":"monotone"}})");
    const auto o = run({"growth-rate", "-c", cfg});
    REQUIRE(o.code == kExitOk);
    const auto j = json::parse(o.out);
    CHECK(std::abs(j.at("delta").get<double>() - 0.0315243378939103) < 2e-3);
    CHECK(j.at("delta").get<double>() ==
          doctest::Approx(j.at("kl_null").get<double>() - j.at("kl_mixture").get<double>()));
    CHECK(j.contains("quadrature"));
    CHECK(j.contains("generator"));
}

TEST_CASE("confset command") {
    TempDir dir;
    const std::string base = std::string(R"({"family":"gaussian","grid":)") + kGrid +
                             R"(,"candidates":{"normal_means":{"lower":-1,"upper":1,"count":21,"sd":1}})";
    const auto cfg = dir.write("c.json", base + "}");
    const auto data = lines(normal_data(200, 0.0, 4));
    const auto zero = run({"confset", "-c", cfg, "--alpha", "0"}, data);
    REQUIRE(zero.code == kExitOk);
    CHECK(zero.out.rfind("feature,log_e,anytime_p\n", 0) == 0);
    CHECK(count_lines(zero.out) == 22);
    CHECK(zero.err.find("retained=21/21") != std::string::npos);
    const auto one = run({"confset", "-c", cfg, "--alpha", "1"}, data);
    REQUIRE(one.code == kExitOk);
    CHECK(count_lines(one.out) == 1);
    CHECK(one.err.find("hull empty") != std::string::npos);
    const auto mid = run({"confset", "-c", cfg}, data);
    CHECK(mid.err.find("hull lower=") != std::string::npos);
    CHECK(run({"confset", "-c", cfg, "--alpha", "0.05", "--alpha", "0.1"}, data).code == kExitConfig);

    const auto cov = dir.write("cov.json", base + R"(,"coverage":{"replications":8,"n":100}})");
    const auto a = run({"confset", "-c", cov});
    REQUIRE(a.code == kExitOk);
    CHECK(a.out.rfind("rep,covered,retained,hull_lower,hull_upper\n", 0) == 0);
    CHECK(count_lines(a.out) == 9);
    CHECK(a.err.find("coverage=") != std::string::npos);
    const auto b = run({"confset", "-c", cov, "--workers", "4"});
    CHECK(b.out == a.out);
    CHECK(run({"confset", "-c", cov, "--coverage-reps", "3"}).out.size() < a.out.size());
}

TEST_CASE("PREPROC_WORKERS") {
    TempDir dir;
    const auto cfg = dir.write("s.json", std::string(R"({"generator":{"type":"normal","mean":0,"sd":1},"family":"gaussian","grid":)") +
                                             kGrid + R"(,"null":{"class":"gaussian"},"replications":2,"max_n":100,"theoretical_delta":false})");
    ::setenv("PREPROC_WORKERS", "zero", 1);
    CHECK(run({"simulate", "-c", cfg}).code == kExitConfig);
    ::setenv("PREPROC_WORKERS", "2", 1);
    const auto env = run({"simulate", "-c", cfg});
    CHECK(env.code == kExitOk);
    CHECK(json::parse(env.err).at("scenario").at("workers") == 2);
    const auto flag = run({"simulate", "-c", cfg, "--workers", "1"});
    CHECK(json::parse(flag.err).at("scenario").at("workers") == 1);
    ::unsetenv("PREPROC_WORKERS");
    CHECK(flag.out == env.out);
}
