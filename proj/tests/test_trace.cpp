#include <doctest.h>

#include <sstream>

#include "test_util.hpp"
#include "tierlab/trace.hpp"
#include "tierlab/workload_gen.hpp"

using namespace tierlab;
using testutil::job;
using testutil::trace_of;

namespace {

std::string dump(const Trace& t) {
  std::ostringstream o;
  write_trace(t, o);
  return o.str();
}

Trace reparse(const Trace& t) {
  std::istringstream in(dump(t));
  return parse_trace(in);
}

}  // namespace

TEST_CASE("parse: header only gives an empty trace") {
  std::istringstream in("{\"tierlab_trace\":1,\"epoch\":0,\"generator_seed\":null}\n");
  const Trace t = parse_trace(in);
  CHECK(t.jobs.empty());
  CHECK_FALSE(t.generator_seed);
}

TEST_CASE("parse: missing header, bad json, unknown fields") {
  std::istringstream none("");
  CHECK_THROWS_AS(parse_trace(none), TraceError);

  std::istringstream bad("{\"tierlab_trace\":1,\"epoch\":0}\n{not json\n");
  try {
    parse_trace(bad);
    FAIL("expected TraceError");
  } catch (const TraceError& e) {
    CHECK(e.line() == 2);
  }

  Trace t = trace_of({job("a", 0, 10, 100)});
  std::string text = dump(t);
  const auto pos = text.find("\"job_id\"");
  text.insert(pos, "\"colour\":\"red\",");
  std::istringstream strict(text);
  CHECK_THROWS_AS(parse_trace(strict), TraceError);
  std::istringstream lenient(text);
  CHECK(parse_trace(lenient, UnknownFieldMode::Lenient) == t);
}

TEST_CASE("parse: zero-length job and duplicate id are rejected") {
  Trace t = trace_of({job("a", 5, 10, 100)});
  t.jobs[0].end_time = 5;
  std::istringstream in(dump(t));
  CHECK_THROWS_AS(parse_trace(in), TraceError);

  Trace d = trace_of({job("a", 0, 10, 100), job("a", 1, 10, 100)});
  std::istringstream in2(dump(d));
  CHECK_THROWS_AS(parse_trace(in2), TraceError);
}

TEST_CASE("sort: equal arrivals order by job_id") {
  Trace t = trace_of({job("b", 3, 10, 1), job("a", 3, 10, 1), job("c", 1, 10, 1)});
  REQUIRE(t.jobs.size() == 3);
  CHECK(t.jobs[0].job_id == "c");
  CHECK(t.jobs[1].job_id == "a");
  CHECK(t.jobs[2].job_id == "b");
  // Unsorted input in the file is sorted on load.
  std::swap(t.jobs[1], t.jobs[2]);
  const Trace back = reparse(t);
  CHECK(back.jobs[1].job_id == "a");
}

TEST_CASE("round trip: empty, single, generated") {
  CHECK(reparse(Trace{}) == Trace{});
  const Trace one = trace_of({job("a", 0, 10, 100, 7)});
  CHECK(reparse(one) == one);

  GeneratorConfig cfg = default_mix(3, 86400.0);
  const Trace gen = generate(cfg);
  REQUIRE(gen.jobs.size() >= 1000);
  Trace cut = gen;
  cut.jobs.resize(1000);
  CHECK(reparse(cut) == cut);
  CHECK(reparse(gen) == gen);
}

TEST_CASE("round trip: non-ASCII metadata is byte-exact") {
  Trace t = trace_of({job("a", 0, 10, 100)});
  t.jobs[0].metadata_tokens = {"\xc3\xa9t\xc3\xa9", "\xe6\x97\xa5\xe6\x9c\xac", "plain"};
  t.jobs[0].step_name = "d\xc3\xa9j\xc3\xa0";
  const Trace back = reparse(t);
  CHECK(back.jobs[0].metadata_tokens == t.jobs[0].metadata_tokens);
  CHECK(back.jobs[0].step_name == t.jobs[0].step_name);
}

TEST_CASE("validate: clean trace, bad interval, duplicates") {
  CHECK(validate_trace(trace_of({job("a", 0, 10, 100), job("b", 5, 9, 3)})).empty());

  Trace t = trace_of({job("a", 0, 10, 100), job("b", 5, 9, 3)});
  t.jobs[1].end_time = 5;
  auto v = validate_trace(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].job_id == "b");
  CHECK(v[0].rule == "end_after_arrival");

  Trace d = trace_of({job("x", 0, 10, 1), job("x", 2, 10, 1)});
  v = validate_trace(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "unique_job_id");
  CHECK(v[0].detail.find("0, 1") != std::string::npos);
}

TEST_CASE("validate: calendar fields must agree with the epoch") {
  // 2024-01-01 is a Monday.
  const std::int64_t monday = 1704067200;
  CHECK(weekday_at(monday, 0) == 0);
  CHECK(weekday_at(monday, 86400 * 6 + 1) == 6);
  CHECK(hour_at(monday, 3600 * 5 + 59) == 5);
  Trace t = trace_of({job("a", 3600, 7200, 1, 0, "p", monday)}, monday);
  CHECK(validate_trace(t).empty());
  t.jobs[0].resources.hour_of_day = 3;
  auto v = validate_trace(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "hour_consistency");
}

TEST_CASE("property: every trace load_trace accepts validates clean") {
  // Random small traces, some corrupted; whatever parses must validate clean.
  Rng rng(77);
  int accepted = 0;
  for (int it = 0; it < 300; ++it) {
    std::vector<Job> jobs;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int k = 0; k < n; ++k) {
      const double a = rng.uniform(0, 1000);
      Job j = job("j" + std::to_string(rng.below(8)), a, a + rng.uniform(0, 50), 1 + rng.below(100));
      if (rng.uniform() < 0.1) j.write_phase_fraction = rng.uniform(-0.5, 1.5);
      if (rng.uniform() < 0.1) j.raw_io.cache_hit_fraction = rng.uniform(-0.5, 1.5);
      if (rng.uniform() < 0.1) j.resources.hour_of_day = static_cast<int>(rng.below(30));
      if (rng.uniform() < 0.05) j.peak_bytes = 0;
      jobs.push_back(j);
    }
    Trace t;
    t.jobs = jobs;
    std::istringstream in(dump(t));
    try {
      const Trace back = parse_trace(in);
      CHECK(validate_trace(back).empty());
      ++accepted;
    } catch (const TraceError&) {
    }
  }
  CHECK(accepted > 20);
}
