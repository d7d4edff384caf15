#include <doctest.h>

#include <functional>
#include <sstream>

#include "d1.hpp"
#include "ltroc/error.hpp"

using namespace ltroc;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("ingest reads the default columns") {
  std::istringstream in("entry,time,event,x\n0,2,1,0.9\n1,3,1,0.5\n0,4,0,0.7\n2,5,1,0.1\n");
  const auto res = ingest_csv(in, CsvSchema{});
  CHECK(res.cohort.size() == 4);
  CHECK(res.rejected.empty());
  CHECK(res.cohort.time()[3] == 5.0);
  CHECK(res.cohort.num_events() == 3);
}

TEST_CASE("ingest rejects L >= Ttilde rows and keeps the rest") {
  std::istringstream in("entry,time,event,x\n0,2,1,0.9\n5,3,1,0.2\n1,3,0,0.4\n");
  const auto res = ingest_csv(in, CsvSchema{});
  REQUIRE(res.rejected.size() == 1);
  CHECK(res.rejected[0].line == 3);
  CHECK(res.rejected[0].message.find("L >= Ttilde") != std::string::npos);
  CHECK(res.cohort.size() == 2);
}

TEST_CASE("ingest maps covariate columns in record order") {
  CsvSchema schema;
  schema.covariates = {"z1", "z2"};
  std::istringstream in("z2,entry,time,event,x,z1\n1,0,2,1,0.9,0.25\n0,1,3,0,0.5,-0.5\n");
  const auto res = ingest_csv(in, schema);
  REQUIRE(res.cohort.num_covariates() == 2);
  CHECK(res.cohort.covariates(0)[0] == 0.25);
  CHECK(res.cohort.covariates(0)[1] == 1.0);
  CHECK(res.cohort.covariates(1)[0] == -0.5);
}

TEST_CASE("structural ingest problems are Ingest errors") {
  CHECK(kind_of([] {
          std::istringstream in("entry,time,x\n0,1,0.2\n");
          ingest_csv(in, CsvSchema{});
        }) == ErrorKind::Ingest);
  CHECK(kind_of([] {
          std::istringstream in("entry,time,event,x\n0,abc,1,0.2\n");
          ingest_csv(in, CsvSchema{});
        }) == ErrorKind::Ingest);
  CHECK(kind_of([] {
          std::istringstream in("entry,time,event,x\n3,1,1,0.2\n");
          ingest_csv(in, CsvSchema{});
        }) == ErrorKind::Ingest);
  CHECK(kind_of([] {
          std::istringstream in("entry,time,event,x\n0,1,2,0.2\n");
          ingest_csv(in, CsvSchema{});
        }) == ErrorKind::Ingest);
  CHECK(kind_of([] { ingest_csv("/nonexistent/cohort.csv", CsvSchema{}); }) == ErrorKind::Ingest);
}

TEST_CASE("write_csv round-trips accepted rows bit-identically") {
  std::istringstream in("entry,time,event,x\n0.1,0.30000000000000004,1,0.7071067811865476\n1e-3,2.5,0,-3.25\n");
  const auto a = ingest_csv(in, CsvSchema{});
  std::ostringstream out;
  write_csv(a.cohort, out, CsvSchema{});
  std::istringstream back(out.str());
  const auto b = ingest_csv(back, CsvSchema{});
  REQUIRE(b.cohort.size() == a.cohort.size());
  for (std::size_t i = 0; i < a.cohort.size(); ++i) {
    CHECK(a.cohort.entry()[i] == b.cohort.entry()[i]);
    CHECK(a.cohort.time()[i] == b.cohort.time()[i]);
    CHECK(a.cohort.score()[i] == b.cohort.score()[i]);
    CHECK(a.cohort.event()[i] == b.cohort.event()[i]);
  }
}

TEST_CASE("scenario warnings") {
  CHECK(validate_scenario(d1_cohort(), Scenario::A1).empty());
  const Cohort none({{0, 1, false, {1.0}, 0.2}, {0, 2, false, {2.0}, 0.1}}, {"z1"});
  CHECK(validate_scenario(none, Scenario::A1).at(0) == "no events");
  const Cohort flat({{0, 1, true, {1.0, 3.0}, 0.2}, {0, 2, true, {2.0, 3.0}, 0.1}}, {"z1", "z2"});
  const auto w = validate_scenario(flat, Scenario::B2);
  REQUIRE(w.size() == 1);
  CHECK(w[0] == "zero-variance covariate z2");
}

TEST_CASE("scenario tags and list splitting") {
  CHECK(parse_scenario("b2") == Scenario::B2);
  CHECK(to_string(Scenario::A1) == "A1");
  CHECK(kind_of([] { parse_scenario("C3"); }) == ErrorKind::Usage);
  CHECK(split_list(" a, b ,c") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("subset and without_truncation") {
  const Cohort d1 = d1_cohort();
  const std::vector<std::size_t> rows = {3, 3, 0};
  const Cohort s = d1.subset(rows);
  CHECK(s.size() == 3);
  CHECK(s.time()[0] == 5.0);
  CHECK(s.time()[2] == 2.0);
  const Cohort z = d1.without_truncation();
  for (double l : z.entry()) CHECK(l == 0.0);
}
