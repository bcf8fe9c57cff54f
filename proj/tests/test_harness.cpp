#include <doctest.h>

#include <fstream>

#include "test_util.hpp"
#include "tierlab/harness.hpp"

using namespace tierlab;

namespace {

std::filesystem::path micro(const std::string& name) { return testutil::fixtures() / "micro" / name; }

std::filesystem::path write(const std::string& name, const std::string& text) {
  const auto dir = testutil::temp_dir("harness");
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("brute force oracle: small examples") {
  OracleInstance inst;
  inst.jobs = {{"a", 0, 10, 60, 5}, {"b", 5, 15, 60, 4}, {"c", 20, 30, 100, 1}, {"d", 0, 30, 10, -1}};
  inst.quota = 100;
  const auto s = brute_force_oracle(inst);
  CHECK(s.x == std::vector<char>{1, 0, 1, 0});
  CHECK(s.objective_value == 6);
  inst.quota = 0;
  CHECK(brute_force_oracle(inst).objective_value == 0);
}

TEST_CASE("micro fixtures replay exactly") {
  for (const char* name : {"firstfit_boundary", "spill_constant", "spill_linear", "spill_ttl", "adaptive_two_window"}) {
    CAPTURE(name);
    const auto script = load_micro_script(micro(std::string(name) + ".script"));
    const auto expect = load_micro_expect(micro(std::string(name) + ".expect"));
    CHECK_FALSE(expect.jobs.empty());
    const auto out = scripted_policy_trace(script, expect);
    for (const auto& d : out.diffs) MESSAGE(d);
    CHECK(out.ok());
  }
}

TEST_CASE("a wrong expectation is reported as a diff") {
  const auto script = load_micro_script(micro("spill_ttl.script"));
  auto expect = load_micro_expect(micro("spill_ttl.expect"));
  expect.jobs["j1"].evicted_at = 65.0;
  expect.spillover.push_back({80, 128, 0.5});
  const auto out = scripted_policy_trace(script, expect);
  CHECK(out.diffs.size() == 2);
}

TEST_CASE("script loader errors") {
  CHECK_THROWS(load_micro_script(write("none.script", "policy = firstfit\n")));
  CHECK_THROWS(load_micro_script(write("bad.script", "policy = firstfit\ncolour = red\n[job a]\narrival = 0\nend = 1\nsize = 1\nread_ops = 0\n")));
  CHECK_THROWS(load_micro_script(write("key.script", "policy = firstfit\n[job a]\narrival = 0\nend = 1\nsize = 1\nread_ops = 0\nspeed = 3\n")));
  const auto unknown = load_micro_script(write("pol.script", "policy = magic\n[job a]\narrival = 0\nend = 1\nsize = 1\nread_ops = 0\n"));
  CHECK_THROWS_AS(scripted_policy_trace(unknown, {}), HarnessError);
  std::string many = "policy = firstfit\n";
  for (int i = 0; i < 21; ++i) many += "[job j" + std::to_string(i) + "]\narrival = 0\nend = 1\nsize = 1\nread_ops = 0\n";
  CHECK_THROWS_AS(load_micro_script(write("many.script", many)), HarnessError);
  CHECK_THROWS(load_micro_expect(write("dev.expect", "[job a]\ndevice = tape\n")));
}
