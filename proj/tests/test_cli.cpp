#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "oracles.hpp"

using namespace hillkrein;

namespace {

std::string problem_path(const std::string& name) { return std::string(HILLKREIN_PROBLEMS_DIR) + "/" + name; }

ErrorCode code_of(const json& j) {
  try {
    parse_problem(j);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

const Record* find(const RunReport& r, const std::string& name) {
  for (const auto& rec : r.records)
    if (rec.name == name) return &rec;
  return nullptr;
}

int run_binary(const std::string& args, std::string* out = nullptr) {
  const std::string tmp = ::testing::TempDir() + "hk_cli_out.txt";
  const std::string cmd = std::string(HILLKREIN_CLI) + " " + args + " > " + tmp + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (out) {
    std::ifstream in(tmp);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Schema, RejectsBadProblems) {
  EXPECT_EQ(code_of(json::array()), ErrorCode::SchemaError);
  EXPECT_EQ(code_of(json{{"n", 1}}), ErrorCode::SchemaError);
  EXPECT_EQ(code_of(json{{"T", -1.0}}), ErrorCode::NonPositivePeriod);
  EXPECT_EQ(code_of(json{{"T", 1.0}, {"n", 2}, {"S", json::array({json::array({1.0, 0.1}), json::array({0.0, 1.0})})}}),
            ErrorCode::NotOrthogonal);
  EXPECT_EQ(code_of(json{{"T", 1.0}, {"D", {{"kind", "banana"}}}}), ErrorCode::SchemaError);
  EXPECT_EQ(code_of(json{{"T", 1.0}, {"truncation", {{"lambda_schedule", {10.0, 5.0}}}}}), ErrorCode::SchemaError);
}

TEST(Schema, ParsesSampleProblems) {
  for (const char* f : {"scalar_antiperiodic_free.json", "scalar_antiperiodic_unit.json", "periodic_spectrum.json",
                        "random_rotation.json", "krein_constant.json", "mathieu.json"})
    EXPECT_NO_THROW(load_problem(problem_path(f))) << f;
  const auto p = load_problem(problem_path("scalar_antiperiodic_unit.json"));
  EXPECT_EQ(p.n, 1);
  EXPECT_NEAR(p.S(0, 0), -1.0, 0.0);
  EXPECT_FALSE(p.schedule.empty());
}

TEST(Run, SpectrumReportsModes) {
  RunFlags f;
  f.cutoff = 2.5;
  const auto r = run("spectrum", load_problem(problem_path("periodic_spectrum.json")), f);
  EXPECT_TRUE(r.passed());
  EXPECT_FALSE(r.records.empty());
}

TEST(Run, HillOnFreeScalarProblem) {
  const auto p = load_problem(problem_path("scalar_antiperiodic_free.json"));
  const auto r = run("hill", p);
  EXPECT_TRUE(r.passed());
  const Record* lhs = find(r, "hill_lhs");
  ASSERT_NE(lhs, nullptr);
  EXPECT_NEAR(std::abs(lhs->value - std::cosh(p.nu * p.T / 2.0)), 0.0, 1e-4);
}

TEST(Run, TraceSquaredAntiperiodic) {
  RunFlags f;
  f.m = 2;
  const auto r = run("trace", load_problem(problem_path("scalar_antiperiodic_unit.json")), f);
  EXPECT_TRUE(r.passed());
  const Record* v = find(r, "trace_formula");
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(std::abs(v->value + 0.25), 0.0, 1e-10);
}

TEST(Run, KreinConstant) {
  RunFlags f;
  f.formula = "krein";
  const auto r = run("krein", load_problem(problem_path("krein_constant.json")), f);
  EXPECT_TRUE(r.passed());
  const Record* s1 = find(r, "sum1");
  ASSERT_NE(s1, nullptr);
  EXPECT_NEAR(std::abs(s1->value - 0.5), 0.0, 1e-12);
}

TEST(Run, UnknownCommandIsInputError) {
  try {
    run("bogus", load_problem(problem_path("scalar_antiperiodic_unit.json")));
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(is_input_error(e.code()));
  }
}

TEST(Run, DeterministicModuloTimings) {
  const auto p = load_problem(problem_path("random_rotation.json"));
  const auto a = run("hill", p).to_json(false), b = run("hill", p).to_json(false);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_FALSE(a.contains("timings"));
}

TEST(Binary, ExitCodes) {
  std::string out;
  EXPECT_EQ(run_binary("hill --problem " + problem_path("scalar_antiperiodic_free.json"), &out), 0) << out;
  EXPECT_NE(out.find("\"passed\": true"), std::string::npos);
  EXPECT_EQ(run_binary("hill --problem /nonexistent.json"), 2);
  EXPECT_EQ(run_binary("hill"), 2);
  EXPECT_EQ(run_binary("trace --problem " + problem_path("scalar_antiperiodic_unit.json") + " --m 2 --format csv", &out),
            0);
  EXPECT_EQ(out.rfind("cutoff,re,im,abs_error", 0), 0u) << out;
}
