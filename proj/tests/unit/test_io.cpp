#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tvpursuit/io.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace tvp;

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456789.123, 1.0 / 3.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(utc_timestamp().size() == 20);
}

TEST_CASE("csv writer and parser") {
  std::ostringstream os;
  {
    CsvWriter w(os, "demo", {"a", "b"}, {"seed=3"});
    w.row({"1", "x"});
    w.row({"2", "y"});
    CHECK_THROWS_AS(w.row({"1"}), Error);
    CHECK_THROWS_AS(w.row({"1", "has,comma"}), Error);
  }
  const auto t = parse_csv(os.str());
  REQUIRE(t.comments.size() == 3);
  CHECK(t.comments[0] == "schema: tvpursuit/demo/v1");
  CHECK(t.comments[1].rfind("generated_at=", 0) == 0);
  CHECK(t.comments[2] == "seed=3");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][t.column("b")] == "y");
  CHECK_THROWS_AS(t.column("c"), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), Error);
}

TEST_CASE("key=value config") {
  auto cfg = KeyValueConfig::parse("# comment\nd = 128\nrate=0.5 # trailing\nflag=yes\nsizes=2,4,8\nrange=8:16:4\n"
                                   "names=path, tree\n");
  CHECK(cfg.get_int("d", 0) == 128);
  CHECK(cfg.get_double("rate", 0.0) == 0.5);
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_int_list("sizes", {}) == std::vector<int>{2, 4, 8});
  CHECK(cfg.get_int_list("range", {}) == std::vector<int>{8, 12, 16});
  CHECK(cfg.get_list("names", {}) == std::vector<std::string>{"path", "tree"});
  CHECK(cfg.get_int("missing", 7) == 7);
  CHECK(cfg.unused_keys().empty());

  cfg.set("d=64");
  CHECK(cfg.get_int("d", 0) == 64);
  cfg.set("typo", "1");
  CHECK(cfg.unused_keys() == std::vector<std::string>{"typo"});

  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), Error);
  CHECK_THROWS_AS(cfg.set("=3"), Error);
  auto bad = KeyValueConfig::parse("x=abc\ny=1.5\nz=maybe\nr=5:2\n");
  CHECK_THROWS_AS(bad.get_double("x", 0.0), Error);
  CHECK_THROWS_AS(bad.get_int("y", 0), Error);
  CHECK_THROWS_AS(bad.get_bool("z", false), Error);
  CHECK_THROWS_AS(bad.get_int_list("r", {}), Error);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/tvp.cfg"), Error);
}

TEST_CASE("binary container round-trip") {
  Container c;
  c.meta_json = R"({"seed":5,"kind":"demo"})";
  c.arrays.push_back({"m", Matrix::Random(3, 4)});
  c.arrays.push_back({"empty", Matrix(0, 2)});
  std::stringstream ss;
  write_container(ss, c);
  const auto back = read_container(ss);
  CHECK(back.meta_json == R"({"kind":"demo","seed":5})");
  CHECK(back.get("m") == c.arrays[0].data);
  CHECK(back.get("empty").cols() == 2);
  CHECK_THROWS_AS(back.get("nope"), Error);

  std::string bytes;
  {
    std::ostringstream os;
    write_container(os, c);
    bytes = os.str();
  }
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_container(truncated), Error);
  std::istringstream magic("XXXX");
  CHECK_THROWS_AS(read_container(magic), Error);
}
