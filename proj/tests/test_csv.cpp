#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "hpm/csv.hpp"

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/hpm_csv_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
  }
  std::string read() const {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }
};

}  // namespace

TEST_CASE("reader parses header and rows") {
  TempFile f("basic.csv");
  f.write("a,b,c\n1,2,3\n4,5,6\n");
  hpm::CsvReader r(f.path);
  REQUIRE(r.header() == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(r.column("b") == 1);
  std::vector<std::string> row;
  REQUIRE(r.next(row));
  REQUIRE(row == std::vector<std::string>{"1", "2", "3"});
  REQUIRE(r.next(row));
  REQUIRE(row == std::vector<std::string>{"4", "5", "6"});
  REQUIRE_FALSE(r.next(row));
}

TEST_CASE("reader handles quoted fields, embedded commas, quotes, newlines") {
  TempFile f("quoted.csv");
  f.write("a,b\n\"x,y\",\"he said \"\"hi\"\"\"\n\"line1\nline2\",plain\n");
  hpm::CsvReader r(f.path);
  std::vector<std::string> row;
  REQUIRE(r.next(row));
  REQUIRE(row[0] == "x,y");
  REQUIRE(row[1] == "he said \"hi\"");
  REQUIRE(r.next(row));
  REQUIRE(row[0] == "line1\nline2");
  REQUIRE(row[1] == "plain");
}

TEST_CASE("reader accepts CRLF line endings") {
  TempFile f("crlf.csv");
  f.write("a,b\r\n1,2\r\n");
  hpm::CsvReader r(f.path);
  REQUIRE(r.header() == std::vector<std::string>{"a", "b"});
  std::vector<std::string> row;
  REQUIRE(r.next(row));
  REQUIRE(row == std::vector<std::string>{"1", "2"});
}

TEST_CASE("reader reports missing columns as schema errors") {
  TempFile f("cols.csv");
  f.write("a,b\n1,2\n");
  hpm::CsvReader r(f.path);
  REQUIRE(r.has_column("a"));
  REQUIRE_FALSE(r.has_column("zz"));
  REQUIRE_THROWS_AS(r.column("zz"), hpm::Error);
  try {
    r.column("zz");
  } catch (const hpm::Error& e) {
    REQUIRE(e.code() == hpm::Errc::schema);
  }
}

TEST_CASE("missing file is an io error") {
  REQUIRE_THROWS_AS(hpm::CsvReader("/tmp/hpm_no_such_file_12345.csv"), hpm::Error);
  try {
    hpm::CsvReader r("/tmp/hpm_no_such_file_12345.csv");
  } catch (const hpm::Error& e) {
    REQUIRE(e.code() == hpm::Errc::io);
  }
}

TEST_CASE("writer quotes only when needed and round-trips") {
  TempFile f("writer.csv");
  {
    hpm::CsvWriter w(f.path);
    w.write_row({"a", "b"});
    w.write_row({"plain", "x,y"});
    w.write_row({"q\"q", "nl\nnl"});
  }
  const std::string text = f.read();
  REQUIRE(text.find("plain") != std::string::npos);
  REQUIRE(text.find("\"x,y\"") != std::string::npos);

  hpm::CsvReader r(f.path);
  std::vector<std::string> row;
  REQUIRE(r.next(row));
  REQUIRE(row == std::vector<std::string>{"plain", "x,y"});
  REQUIRE(r.next(row));
  REQUIRE(row == std::vector<std::string>{"q\"q", "nl\nnl"});
}

TEST_CASE("parse_double accepts full numeric fields only") {
  REQUIRE(hpm::parse_double("1.5").value() == 1.5);
  REQUIRE(hpm::parse_double(" 2.5 ").value() == 2.5);
  REQUIRE(hpm::parse_double("-3e2").value() == -300.0);
  REQUIRE_FALSE(hpm::parse_double("1.5x").has_value());
  REQUIRE_FALSE(hpm::parse_double("").has_value());
  REQUIRE_FALSE(hpm::parse_double("n/a").has_value());
}

TEST_CASE("parse_int accepts full integer fields only") {
  REQUIRE(hpm::parse_int("42").value() == 42);
  REQUIRE(hpm::parse_int("-7").value() == -7);
  REQUIRE_FALSE(hpm::parse_int("4.2").has_value());
  REQUIRE_FALSE(hpm::parse_int("x").has_value());
  REQUIRE_FALSE(hpm::parse_int("").has_value());
}

TEST_CASE("require helpers fail with schema errors") {
  REQUIRE(hpm::require_double("2.25", "f") == 2.25);
  REQUIRE(hpm::require_int("11", "f") == 11);
  REQUIRE_THROWS_AS(hpm::require_double("bad", "f"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::require_int("bad", "f"), hpm::Error);
}

TEST_CASE("fmt_double is shortest round-trip") {
  for (double v : {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 1e-17, 123456789.123456789, -2.5e-300}) {
    const std::string s = hpm::fmt_double(v);
    REQUIRE(hpm::parse_double(s).value() == v);
  }
  REQUIRE(hpm::fmt_double(1.0) == "1");
  REQUIRE(hpm::fmt_double(0.5) == "0.5");
}
