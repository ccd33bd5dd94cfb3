#include <gtest/gtest.h>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "gwpen/trees.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args, bool merge_stderr = false)
{
    const std::string cmd = std::string(GWPEN_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string fixture(const std::string& name) { return std::string(GWPEN_FIXTURE_DIR) + "/" + name; }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("gwpen_cli_test_" + name);
    fs::remove_all(d);
    return d;
}

} // namespace

TEST(Cli, InspectSupercritical)
{
    const auto r = run("inspect --q " + fixture("supercritical.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("mu: 5/4"), std::string::npos);
    EXPECT_NE(r.out.find("kappa: 1/2"), std::string::npos);
    EXPECT_NE(r.out.find("gamma: 3/4"), std::string::npos);
    EXPECT_NE(r.out.find("regime: supercritical-Schroeder"), std::string::npos);

    const auto d = fresh_dir("inspect");
    ASSERT_EQ(run("inspect --q " + fixture("boettcher.json") + " --out " + d.string()).code, 0);
    const auto j = json::parse(slurp(d / "inspect.json"));
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["a_min"], 2);
    EXPECT_EQ(j["kappa"], "0");
}

TEST(Cli, JetValuesByHand)
{
    const auto r = run("jet --q " + fixture("supercritical.json") + " --n 1 --s 1/2 --p 1");
    ASSERT_EQ(r.code, 0);
    // f(1/2) = 1/4 + 1/8 + 1/8 = 1/2, f'(1/2) = 1/4 + 1/2 = 3/4.
    EXPECT_EQ(r.out, "n,s,p,value\n0,1/2,0,1/2\n0,1/2,1,1\n1,1/2,0,1/2\n1,1/2,1,3/4\n");
}

TEST(Cli, PenalizeWorkedInstance)
{
    const auto d = fresh_dir("penalize");
    const auto r = run("penalize --q " + fixture("supercritical.json") +
                       " --weight geom:p=1,s=0.5 --event z_eq:2 --n 1 --mmax 60 --out " + d.string());
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(slurp(d / "penalize.json"));
    EXPECT_EQ(j["limit"], "2/3");
    EXPECT_EQ(j["martingale"], "sized_biased_extinct");
    EXPECT_TRUE(j["converged"].get<bool>());
    const std::string csv = slurp(d / "penalize.csv");
    EXPECT_EQ(csv.rfind("m,ratio,error,log_error\n", 0), 0U);
    EXPECT_NE(csv.find("\n60,"), std::string::npos);
}

TEST(Cli, MartingaleReportAndMeans)
{
    const auto d = fresh_dir("martingale");
    const auto r =
        run("martingale --q " + fixture("supercritical.json") + " --spec penalized_p --p 2 --nmax 3 --out " + d.string());
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(slurp(d / "martingale.json"));
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_TRUE(j["exact"].get<bool>());
    EXPECT_EQ(slurp(d / "martingale.csv"), "n,mean\n0,1\n1,1\n2,1\n3,1\n");
}

TEST(Cli, SpineSampleIsDeterministicAndWellTyped)
{
    const std::string args = "spine sample --q " + fixture("supercritical.json") + " --p 2 --height 4 --seed 9 --count 5";
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    std::istringstream lines(a.out);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        const auto t = gwpen::parse_typed_tree(line);
        for (unsigned n = 0; n <= 4; ++n) EXPECT_EQ(t.type_mass(n), 2U) << line;
        ++count;
    }
    EXPECT_EQ(count, 5);
    EXPECT_NE(run(args + " --seed 10").out, a.out);
}

TEST(Cli, SpineVerify)
{
    const auto r = run("spine verify --q " + fixture("supercritical.json") + " --p 2 --n 2 --maxk 3");
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["max_gap"], 0.0);
    EXPECT_EQ(j["shapes_checked"], 13);
    EXPECT_EQ(j["sum_Q"], "1");
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(run("inspect --q " + fixture("bad_sum.json")).code, 2);
    EXPECT_EQ(run("inspect --q /nonexistent/q.json").code, 2);
    EXPECT_EQ(run("inspect --q " + fixture("supercritical.json") + " --mode fuzzy").code, 2);
    EXPECT_EQ(run("no-such-command").code, 2);
    EXPECT_EQ(run("penalize --q " + fixture("supercritical.json") + " --weight geom:p=1,s=1 --event z_eq:2").code, 2);
    // Critical law at s < 1 converges only like 1/m.
    EXPECT_EQ(run("penalize --q " + fixture("critical.json") + " --weight geom:p=1,s=0.5 --event z_eq:2 --n 2 --mmax 60")
                  .code,
              3);
}

TEST(Cli, VerifyAllReportsAndExitStatus)
{
    const auto d = fresh_dir("verify");
    const auto good = run("verify-all --criterion 4 --criterion 10 --out " + d.string());
    EXPECT_EQ(good.code, 0);
    EXPECT_NE(good.out.find("PASS criterion 4"), std::string::npos);
    const auto j = json::parse(slurp(d / "verify_all.json"));
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_EQ(j["criteria"].size(), 2U);

    const auto bad = run("verify-all --criterion 6b --out " + d.string(), true);
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("report: " + (d / "verify_all.json").string()), std::string::npos);
}

TEST(Cli, OutputsAreByteIdentical)
{
    const auto d1 = fresh_dir("det1");
    const auto d2 = fresh_dir("det2");
    for (const auto& d : {d1, d2}) {
        ASSERT_EQ(run("penalize --q " + fixture("supercritical.json") +
                      " --mode float --weight laplace:p=2,a=1.0 --event z_eq:2 --n 1 --mmax 60 --out " + d.string())
                      .code,
                  0);
        ASSERT_EQ(run("spine stats --q " + fixture("supercritical.json") + " --p 1 --height 3 --samples 500 --seed 4 --out " +
                      d.string())
                      .code,
                  0);
    }
    for (const char* f : {"penalize.csv", "penalize.json", "spine_stats.csv"})
        EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
}
