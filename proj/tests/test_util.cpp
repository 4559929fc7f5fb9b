#include <doctest.h>

#include "litelab/util.h"

using namespace litelab;

TEST_CASE("rng determinism and distribution") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; i++) CHECK(a.next_u64() == b.next_u64());

  Rng r(7);
  int in = 0;
  const int n = 100000;
  for (int i = 0; i < n; i++)
    if (r.next_double() < 0.3) in++;
  // 5 sigma around 0.3
  double sigma = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(in / (double)n - 0.3) < 5 * sigma);

  Rng s(9);
  for (int i = 0; i < 1000; i++) CHECK(s.next_below(10) < 10);
}

TEST_CASE("rng state round-trip") {
  Rng a(5);
  a.next_u64();
  a.next_u64();
  Rng b(0);
  CHECK(b.load_state(a.save_state()));
  for (int i = 0; i < 100; i++) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("csv escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"q") == "\"q\"\"q\"");
}

TEST_CASE("tar round-trip") {
  std::map<std::string, std::string> files{
      {"topology.txt", "router 1\nrouter 2\nlink 1 2\n"},
      {"job.json", "{}"},
      {"handlers/count.json", std::string(1500, 'x')},
  };
  std::string blob = tar_pack(files);
  CHECK(blob.size() % 512 == 0);
  std::string err;
  auto back = tar_unpack(blob, &err);
  REQUIRE(back.has_value());
  CHECK(*back == files);
}

TEST_CASE("linear fit") {
  std::vector<double> x{1, 2, 3, 4, 5}, y{2.1, 4.0, 6.1, 7.9, 10.0};
  auto f = fit_linear(x, y);
  CHECK(f.slope == doctest::Approx(1.98).epsilon(0.05));
  CHECK(f.r2 > 0.99);
}

TEST_CASE("split and trim helpers") {
  auto t = split_ws("  a b\tc  ");
  REQUIRE(t.size() == 3);
  CHECK(t[0] == "a");
  CHECK(t[2] == "c");
  CHECK(trim("  x ") == "x");
  CHECK(split_on("a:b::c", ':').size() == 4);
  CHECK(parse_double("1.5e3").value() == doctest::Approx(1500));
  CHECK(!parse_double("12x").has_value());
  CHECK(parse_int("-42").value() == -42);
}
