#include "doctest.h"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/random.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

using namespace bladeenv;

TEST_CASE("philox known answer") {
  const auto out = Rng::philox({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng a2(42, 7);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a2.next_u64() == c.next_u64();
  CHECK(same == 0);
}

TEST_CASE("uniform and normal moments") {
  Rng rng(1);
  const int n = 200000;
  double s = 0, s2 = 0, ns = 0, ns2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    CHECK_FALSE(u < 0.0);
    CHECK(u < 1.0);
    s += u;
    s2 += u * u;
    const double z = rng.normal();
    ns += z;
    ns2 += z * z;
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
  CHECK(std::abs(ns / n) < 0.01);
  CHECK(ns2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derive_seed depends on parent and label") {
  std::set<std::uint64_t> seen{derive_seed(1, "doe"), derive_seed(1, "sample"), derive_seed(2, "doe")};
  CHECK(seen.size() == 3);
  CHECK(derive_seed(1, "doe") == derive_seed(1, "doe"));
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 123456789.125, 0.0, 5e-324}) {
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(io::parse_double("abc"), DomainError);
  CHECK_THROWS_AS(io::parse_double("1.0x"), DomainError);
  CHECK_THROWS_AS(io::parse_int("1.5"), DomainError);
  CHECK(io::parse_int("-12") == -12);
}

TEST_CASE("csv read with comments and header") {
  const auto dir = std::filesystem::temp_directory_path() / "bladeenv_test_io";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "t.csv").string();
  io::write_text(path, "# first comment\n# second\na,b\n1,2\n3,4\n");
  const auto t = io::read_csv(path);
  CHECK(t.comments.size() == 2);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.rows.size() == 2);
  CHECK(t.column("b") == 1);
  CHECK_FALSE(t.has_column("c"));
  CHECK_THROWS_AS(t.column("c"), DomainError);
  CHECK(io::read_text(path).find("a,b") != std::string::npos);
  CHECK(io::hash_file(path) == io::fnv1a64(io::read_text(path)));
  CHECK(io::hex64(0xabcull) == "0000000000000abc");
  std::filesystem::remove_all(dir);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}
