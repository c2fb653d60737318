#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "twolocus/errors.hpp"
#include "twolocus/table.hpp"

using namespace twolocus;

namespace {

ExpansionOptions exact_off() {
  ExpansionOptions o;
  o.arithmetic = Arithmetic::kExact;
  o.approx = ApproxMode::kOff;
  return o;
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("twolocus_" + std::to_string(::getpid()) + "_" + name)).string();
}

}  // namespace

TEST_CASE("table round trip") {
  auto t = build_table(ModelParams::paper_pim(), 3, 2, exact_off());
  CHECK(t.records.size() == 4u + 10u + 20u);
  CHECK(t.header.exact);
  CHECK_FALSE(t.header.approx_g0);
  auto text = serialize_table(t);
  auto back = parse_table(text);
  REQUIRE(back.records.size() == t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    CHECK(back.records[i].sample == t.records[i].sample);
    CHECK(back.records[i].coeffs == t.records[i].coeffs);
  }
  CHECK(back.header.model().fingerprint() == ModelParams::paper_pim().fingerprint());
  CHECK(serialize_table(back) == text);
  // a rebuild produces identical bytes
  CHECK(serialize_table(build_table(ModelParams::paper_pim(), 3, 2, exact_off())) == text);
  auto s = SampleConfig::parse("c=[[1,0],[1,1]]");
  auto e = expand(s, ModelParams::paper_pim(), 2, exact_off());
  CHECK(back.find(s).coeffs == e.coeffs);
  CHECK_THROWS_AS(back.find(SampleConfig::parse("c=[[3,1],[0,0]]")), NotFoundError);
}

TEST_CASE("float tables store exact binary values") {
  ExpansionOptions o;
  o.arithmetic = Arithmetic::kFloat;
  auto t = build_table(ModelParams::paper_pim(), 2, 3, o);
  CHECK_FALSE(t.header.exact);
  auto back = parse_table(serialize_table(t));
  CHECK(back.records.back().coeffs == t.records.back().coeffs);
  CHECK_FALSE(back.header.exact);
}

TEST_CASE("damaged tables are rejected") {
  auto text = serialize_table(build_table(ModelParams::paper_pim(), 2, 1, exact_off()));
  CHECK_THROWS_AS(parse_table(""), IntegrityError);
  CHECK_THROWS_AS(parse_table("{not json\n"), IntegrityError);
  CHECK_THROWS_AS(parse_table(replace_once(text, "twolocus-coefficients", "other")), IntegrityError);
  CHECK_THROWS_AS(parse_table(replace_once(text, "\"version\":1", "\"version\":2")), UnsupportedError);
  CHECK_THROWS_AS(parse_table(replace_once(text, "\"theta_a\":\"1/100\"", "\"theta_a\":\"x\"")), IntegrityError);
  CHECK_THROWS_AS(parse_table(replace_once(text, "\"records\":14", "\"records\":15")), IntegrityError);
  CHECK_THROWS_AS(parse_table(replace_once(text, "\"arithmetic\":\"exact\"", "\"arithmetic\":\"fuzzy\"")), IntegrityError);
  CHECK_THROWS_AS(parse_table(replace_once(text, "\"M\":1", "\"M\":2")), IntegrityError);
  // body edits break the checksum
  auto nl = text.find('\n');
  std::string body_edit = text;
  body_edit[text.find("coeffs", nl) + 12] ^= 1;
  CHECK_THROWS_AS(parse_table(body_edit), IntegrityError);
  CHECK_THROWS_AS(parse_table(text.substr(0, text.size() - 10)), IntegrityError);
}

TEST_CASE("checksum over reordered records") {
  auto t = build_table(ModelParams::paper_pim(), 2, 1, exact_off());
  std::swap(t.records[0], t.records[1]);
  // serialize without sorting, so the checksum is valid but the order is not
  CHECK_THROWS_AS(parse_table(serialize_table(t)), IntegrityError);
}

TEST_CASE("table inputs") {
  auto p = ModelParams::paper_pim();
  CHECK_THROWS_AS(build_table(p, 0, 1, {}), InvalidArgument);
  CHECK_THROWS_AS(build_table(p, 2, -1, {}), InvalidArgument);
  CHECK_THROWS_AS(build_table(p.with_selection({0, 1, 1, 0}), 2, 1, {}), UnsupportedError);
}

TEST_CASE("files") {
  auto path = temp_path("table.tl");
  auto t = build_table(ModelParams::paper_pim(), 2, 2, exact_off());
  write_table(t, path);
  CHECK(read_table(path).records.size() == t.records.size());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_table(path), IoError);
  CHECK_THROWS_AS(atomic_write("/nonexistent-dir/x/y", "z"), IoError);
  auto p2 = temp_path("atomic.txt");
  atomic_write(p2, "one");
  atomic_write(p2, "two");
  std::ifstream in(p2);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "two");
  std::filesystem::remove(p2);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
