#include "arealab/cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace arealab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    auto p = fs::temp_directory_path() / ("arealab_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

int run(std::vector<std::string> args, std::string *log_out = nullptr) {
    args.insert(args.begin(), "arealab");
    std::vector<const char *> argv;
    for(const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream log;
    int                rc = cli::main(static_cast<int>(argv.size()), argv.data(), log);
    if(log_out) *log_out = log.str();
    return rc;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int csv_rows(const fs::path &p) {
    std::istringstream in(slurp(p));
    std::string        line;
    int                rows = -2; // hash comment and header
    while(std::getline(in, line)) ++rows;
    return rows;
}

} // namespace

TEST(Config, DefaultsResolve) {
    auto rc = resolve_config(nullptr);
    EXPECT_EQ(rc.lattice.size(), 12);
    EXPECT_EQ(rc.origin, Coord{5.5});
    EXPECT_EQ(rc.hash.size(), 64u);
    EXPECT_EQ(rc.effective["bounds"]["g0"], nullptr);
}

TEST(Config, EveryBadFieldIsListed) {
    try {
        resolve_config(json{{"bogus", 1}, {"solver", {{"tol", -1.0}}}, {"lemma", {{"n_last", "x"}}}, {"sequence", {{"N", 99}}}});
        FAIL() << "expected a ConfigError";
    } catch(const ConfigError &e) {
        const std::string msg = e.what();
        for(const char *field : {"bogus", "solver.tol", "lemma.n_last", "sequence.N"}) EXPECT_NE(msg.find(field), std::string::npos) << field;
    }
}

TEST(Config, DottedOverridesAndSeed) {
    auto rc = resolve_config(nullptr, {"model.g=3.5", "sequence.overlap_policy=flag", "lattice.extents=[10]", "sequence.N=10"}, 77);
    EXPECT_DOUBLE_EQ(rc.model.param("g"), 3.5);
    EXPECT_EQ(rc.sequence.overlap_policy, OverlapPolicy::Flag);
    EXPECT_EQ(rc.lattice.size(), 10);
    EXPECT_EQ(rc.seed, 77u);
    EXPECT_NE(rc.hash, resolve_config(nullptr).hash);
    json j = json::object();
    EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
    EXPECT_THROW(apply_override(j, "a..b=1"), ConfigError);
}

TEST(Io, CsvQuotingAndNumbers) {
    Table t;
    t.header = {"a", "b,c"};
    t.rows   = {{std::string("x\"y"), 0.1}, {std::string("line\nbreak"), std::numeric_limits<double>::quiet_NaN()}};
    EXPECT_EQ(to_csv(t, "h"), "# config_hash=h\r\na,\"b,c\"\r\n\"x\"\"y\",0.1\r\n\"line\nbreak\",nan\r\n");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(std::strtod(format_number(2.0 / 7.0).c_str(), nullptr), 2.0 / 7.0);
}

TEST(Cli, SequenceRowsManifestAndPlot) {
    auto out = scratch("seq");
    ASSERT_EQ(run({"sequence", "--out", out.string()}), 0);
    EXPECT_EQ(csv_rows(out / "sequence/profile.csv"), 12 - 8 + 1);
    auto m = json::parse(slurp(out / "sequence/manifest.json"));
    for(const auto &[name, entry] : m["artifacts"].items()) EXPECT_EQ(entry["sha256"], sha256_file(out / "sequence" / name)) << name;
    EXPECT_TRUE(fs::exists(out / "sequence/entropy.svg"));
    auto p = json::parse(slurp(out / "sequence/profile.json"));
    EXPECT_TRUE(p["initial_bound"]["holds"].get<bool>());
    EXPECT_LT(p["telescoping"]["identity_error"].get<double>(), 1e-12);
    EXPECT_EQ(p["config_hash"], m["config_hash"]);
    fs::remove_all(out);
}

TEST(Cli, WarmCacheGivesIdenticalArtifacts) {
    auto out1 = scratch("det1"), out2 = scratch("det2"), cache = scratch("cache");
    std::string log1, log2;
    ASSERT_EQ(run({"sequence", "--out", out1.string(), "--cache", cache.string(), "--seed", "5"}, &log1), 0);
    ASSERT_EQ(run({"sequence", "--out", out2.string(), "--cache", cache.string(), "--seed", "5"}, &log2), 0);
    EXPECT_NE(log2.find("5 disk hits"), std::string::npos) << log2;
    for(const char *f : {"profile.csv", "profile.json", "entropy.svg", "manifest.json"})
        EXPECT_EQ(slurp(out1 / "sequence" / f), slurp(out2 / "sequence" / f)) << f;
    for(const auto &p : {out1, out2, cache}) fs::remove_all(p);
}

TEST(Cli, ContrivedCrossingExitsWithConditionCode) {
    auto        out = scratch("contrived");
    std::string log;
    EXPECT_EQ(run({"sequence", "--out", out.string(), "--override", "model.kind=contrived", "lattice.extents=[5]", "region.origin=[0]", "region.R0=0",
                   "region.r0=1", "sequence.N=5"},
                  &log),
              3);
    EXPECT_NE(log.find("n=3"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "sequence/error.json"));
    fs::remove_all(out);
}

TEST(Cli, ConfigErrorsExitWithCodeTwo) {
    auto        out = scratch("cfg");
    std::string log;
    EXPECT_EQ(run({"sequence", "--out", out.string(), "--override", "solver.tol=-1", "nothing=1"}, &log), 2);
    EXPECT_NE(log.find("solver.tol"), std::string::npos);
    EXPECT_NE(log.find("nothing"), std::string::npos);
    EXPECT_EQ(run({"sequence", "--config", (out / "missing.json").string()}), 2);
    EXPECT_EQ(run({"nonsense"}), 2);
    fs::remove_all(out);
}

TEST(Cli, BoundsDivergenceAndExponents) {
    auto        out = scratch("bounds");
    std::string log;
    const std::vector<std::string> fixed{"bounds.g0=1", "bounds.c_e=0.5", "bounds.l_tilde=3"};
    auto args = std::vector<std::string>{"bounds", "--out", out.string(), "--override", "bounds.r0=4"};
    args.insert(args.end(), fixed.begin(), fixed.end());
    EXPECT_EQ(run(args, &log), 2);
    EXPECT_NE(log.find("r0/a0 > 1+l0+k0"), std::string::npos);
    for(int D : {1, 2}) {
        args = {"bounds", "--out", out.string(), "--override", "bounds.D=" + std::to_string(D)};
        args.insert(args.end(), fixed.begin(), fixed.end());
        ASSERT_EQ(run(args), 0);
        auto j = json::parse(slurp(out / "bounds/bounds.json"));
        EXPECT_NEAR(j["exponent"].get<double>(), D - 1, 0.05);
        EXPECT_EQ(j["c_coeffs"].size(), static_cast<std::size_t>(D));
        EXPECT_EQ(j["sources"]["g0"], "config");
    }
    fs::remove_all(out);
}

TEST(Cli, SieIsReproducible) {
    auto out = scratch("sie");
    ASSERT_EQ(run({"sie", "--out", out.string(), "--seed", "11"}), 0);
    auto first = slurp(out / "sie/sie.json");
    ASSERT_EQ(run({"sie", "--out", out.string(), "--seed", "11"}), 0);
    EXPECT_EQ(first, slurp(out / "sie/sie.json"));
    auto j = json::parse(first);
    EXPECT_TRUE(j["halves"]["within_factor_2"].get<bool>());
    EXPECT_NEAR(j["log_min_dim"].get<double>(), std::log(2.0), 1e-15);
    EXPECT_EQ(csv_rows(out / "sie/sie_hist.csv"), 20);
    fs::remove_all(out);
}

TEST(Cli, LemmaZeroScheduleFailsAtCrossing) {
    auto out = scratch("lemma");
    EXPECT_EQ(run({"lemma", "--out", out.string(), "--override", "lemma.n_first=5", "lemma.n_last=6", "lemma.f_schedule=zero"}), 3);
    for(int n : {5, 6}) {
        auto j = json::parse(slurp(out / ("lemma/step_" + std::to_string(n) + ".json")));
        EXPECT_FALSE(j["pass"].get<bool>());
        EXPECT_NEAR(j["argmin"].get<double>(), 0.5, 1e-3);
    }
    EXPECT_EQ(run({"lemma", "--out", out.string(), "--override", "lemma.n_first=5", "lemma.n_last=6", "lemma.mu0_override=0.99"}), 0);
    auto j = json::parse(slurp(out / "lemma/step_6.json"));
    EXPECT_NEAR(j["f0"].get<double>(), 0.001, 1e-12);
    fs::remove_all(out);
}

TEST(Cli, CounterexampleReproduces) {
    auto out = scratch("cx");
    ASSERT_EQ(run({"counterexample", "--out", out.string()}), 0);
    auto j = json::parse(slurp(out / "counterexample/counterexample.json"));
    EXPECT_TRUE(j["gap_ok"].get<bool>());
    EXPECT_TRUE(j["overlap_vanishes"].get<bool>());
    fs::remove_all(out);
}

TEST(Cli, LockedOutputDirectoryIsRefused) {
    auto    out = scratch("lock");
    DirLock hold(out);
    EXPECT_EQ(run({"sie", "--out", out.string(), "--override", "sie.instances=4"}), 4);
}
