#include <set>

#include <gtest/gtest.h>

#include <extctrl/plan.hpp>

#include "fixtures.hpp"

using namespace extctrl;
using fixtures::data_path;

namespace {

nlohmann::json base_plan() {
  return nlohmann::json::parse(fixtures::read_text(data_path("plans/weighting_bootstrap.json")));
}

}  // namespace

TEST(Plan, ParsesAndResolvesPaths) {
  const auto p = load_plan(data_path("plans/toy_att.json"));
  EXPECT_EQ(p.method, Method::Weighting);
  EXPECT_EQ(p.estimand, Estimand::att());
  EXPECT_EQ(p.data_path.filename(), "toy_severity.csv");
  EXPECT_TRUE(std::filesystem::exists(p.data_path));
  EXPECT_EQ(p.hash.size(), 64u);
}

TEST(Plan, ValidationErrors) {
  EXPECT_ERROR_CODE(load_plan(data_path("plans/maic_missing_aggregate.json")), PlanInvalid);
  EXPECT_ERROR_CODE(load_plan(data_path("plans/maic_att_invalid.json")), PlanInvalid);
  EXPECT_ERROR_CODE(load_plan(data_path("plans/borrow_not_comparable.json")), PlanInvalid);
  auto j = base_plan();
  j["surprise"] = 1;
  EXPECT_ERROR_CODE(parse_plan(j), PlanInvalid);
  j = base_plan();
  j["estimand"] = "trim";
  EXPECT_ERROR_CODE(parse_plan(j), PlanInvalid);
  j["trim"] = 0.1;
  EXPECT_EQ(parse_plan(j).estimand, Estimand::trimmed(0.1));
  j = base_plan();
  j["bootstrap"]["replicates"] = 1;
  EXPECT_ERROR_CODE(parse_plan(j), PlanInvalid);
  j = base_plan();
  j["scale"] = "hazard";
  EXPECT_ERROR_CODE(parse_plan(j), PlanInvalid);
}

TEST(Plan, HashChangesWithEveryFieldMutation) {
  const auto base = base_plan();
  std::set<std::string> hashes{plan_hash(base)};
  std::size_t mutations = 0;
  auto record = [&](nlohmann::json j) {
    ++mutations;
    hashes.insert(plan_hash(j));
  };
  for (const auto& [key, value] : base.items()) {
    auto j = base;
    if (value.is_string()) j[key] = value.get<std::string>() + "x";
    else if (value.is_number()) j[key] = value.get<double>() + 0.5;
    else if (value.is_boolean()) j[key] = !value.get<bool>();
    else if (value.is_array()) j[key].push_back("extra");
    else if (value.is_object()) {
      for (const auto& [k2, v2] : value.items()) {
        auto m = base;
        if (v2.is_number()) m[key][k2] = v2.get<double>() + 1.0;
        else m[key][k2] = "changed";
        record(m);
      }
      j[key]["added"] = 1;
    }
    record(j);
    auto removed = base;
    removed.erase(key);
    record(removed);
  }
  EXPECT_EQ(hashes.size(), mutations + 1);
}

TEST(Plan, HashIgnoresKeyOrderAndWhitespace) {
  const auto a = nlohmann::json::parse(R"({"b": 1, "a": [1, 2]})");
  const auto b = nlohmann::json::parse("{\n \"a\":[1,2],\"b\":1}");
  EXPECT_EQ(plan_hash(a), plan_hash(b));
}

TEST(Plan, RunEmbedsHashAndOrdersSteps) {
  const auto p = load_plan(data_path("plans/toy_att.json"));
  const auto out = run_plan(p, 1);
  EXPECT_EQ(out.report.at("plan_hash"), p.hash);
  EXPECT_EQ(out.report.at("schema"), 1);
  const auto& steps = out.report.at("provenance").at("steps");
  ASSERT_EQ(steps.size(), 3u);
  EXPECT_EQ(steps[0].at("step"), "estimand");
  EXPECT_EQ(steps[1].at("step"), "selection_diagnostics");
  EXPECT_EQ(steps[2].at("step"), "comparison");
  for (const auto& [name, content] : out.files) {
    SCOPED_TRACE(name);
    EXPECT_NE(content.find(p.hash), std::string::npos);
  }
  const auto& row = out.report.at("diagnostics").at("balance").at("rows").at(0);
  EXPECT_NEAR(row.at("weighted_mean_trial").get<double>(), 0.25, 1e-12);
  EXPECT_NEAR(row.at("weighted_mean_external").get<double>(), 0.25, 1e-12);
}

TEST(Plan, ExitCodes) {
  EXPECT_EQ(exit_code_for(Error(ErrorCode::PlanInvalid, "")), 2);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::MissingValue, "")), 3);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::SeparationDetected, "")), 4);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::PositivityHardFail, "")), 5);
}

TEST(Plan, OverlapHardFail) {
  EXPECT_ERROR_CODE(run_plan(load_plan(data_path("plans/overlap_fail.json"))), PositivityHardFail);
}
