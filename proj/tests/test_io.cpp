#include <cstdlib>
#include <filesystem>
#include <string>

#include "alphacl/io.hpp"
#include "alphacl/result.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace alphacl;

namespace {

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "alphacl_io_test";
  fs::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round-trips binary64 exactly") {
  const double values[] = {0.0,       -0.0,   1.0 / 3.0, 1e-300,
                           -2.5e17,   3.14,   1e308,     5e-324,
                           123456.789};
  for (double v : values) {
    const std::string s = format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
}

TEST_CASE("atomic write then read returns the same text") {
  const std::string path = temp_path("roundtrip.txt");
  const std::string text = "line one\nline two\n";
  REQUIRE(write_file_atomic(path, text).ok());
  auto back = read_file(path);
  REQUIRE(back.ok());
  CHECK(*back == text);
  fs::remove(path);
}

TEST_CASE("read_file reports missing paths as io errors") {
  auto r = read_file(temp_path("does_not_exist.txt"));
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().code == Errc::kIo);
}

TEST_CASE("matrix csv has a header and full-precision entries") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0 / 3.0, 2.0, -5.0, 0.125;
  const std::string path = temp_path("matrix.csv");
  REQUIRE(write_matrix_csv(path, m).ok());
  auto text = read_file(path);
  REQUIRE(text.ok());
  CHECK(text->rfind("c0,c1\n", 0) == 0);
  CHECK(text->find(format_double(1.0 / 3.0)) != std::string::npos);
  CHECK(text->find("-5") != std::string::npos);
  fs::remove(path);
}

TEST_CASE("rows csv rejects ragged rows") {
  const std::string path = temp_path("rows.csv");
  auto bad = write_rows_csv(path, {"a", "b"}, {{1.0, 2.0}, {3.0}});
  CHECK_FALSE(bad.ok());
  auto good = write_rows_csv(path, {"a", "b"}, {{1.0, 2.0}, {3.0, 4.0}});
  CHECK(good.ok());
  fs::remove(path);
}

}  // TEST_SUITE
