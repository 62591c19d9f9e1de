#include <doctest.h>

#include <cmath>
#include <string>

#include "seedens/encoder.hpp"
#include "seedens/error.hpp"

using namespace seedens;

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("good") == 11305396749966545176ull);
  CHECK(fnv1a64("not") == 2403468754648211274ull);
  CHECK(fnv1a64("not good") == 12744005506836443543ull);
  CHECK(fnv1a64("good not") == 16393237096307206697ull);
  CHECK(fnv1a64("bad") == 16077166718034104ull);
}

static EncoderConfig small(int d, bool uni, bool bi) {
  EncoderConfig c;
  c.d = d;
  c.unigrams = uni;
  c.bigrams = bi;
  return c;
}

TEST_CASE("hashed encoding matches a hand-computed vector") {
  // Tokens: not, good, not, good. Bigrams: "not good", "good not", "not good".
  // d=8 buckets: good -> (0,-) x2, not -> (2,+) x2,
  // "not good" -> (7,-) x2, "good not" -> (1,-) x1. Norm sqrt(13).
  const auto f = encode_hashed("Not good, NOT GOOD!", small(8, true, true));
  REQUIRE(f.dim() == 8);
  const double s = 1.0 / std::sqrt(13.0);
  CHECK(f.v[0] == doctest::Approx(-2.0 * s).epsilon(1e-12));
  CHECK(f.v[1] == doctest::Approx(-1.0 * s).epsilon(1e-12));
  CHECK(f.v[2] == doctest::Approx(2.0 * s).epsilon(1e-12));
  CHECK(f.v[3] == 0.0);
  CHECK(f.v[7] == doctest::Approx(-2.0 * s).epsilon(1e-12));
}

TEST_CASE("unigrams and bigrams can be toggled") {
  const auto uni = encode_hashed("not good", small(8, true, false));
  CHECK(uni.v[7] == 0.0);  // bigram bucket stays empty
  CHECK(uni.v[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(uni.v[2] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  const auto bi = encode_hashed("not good", small(8, false, true));
  CHECK(bi.v[7] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(bi.v[0] == 0.0);
}

TEST_CASE("encoded vectors are unit length or zero") {
  const auto f = encode_hashed("one two three four five", small(16, true, true));
  double norm2 = 0.0;
  for (double x : f.v) norm2 += x * x;
  CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));

  const auto empty = encode_hashed("", small(16, true, true));
  for (double x : empty.v) CHECK(x == 0.0);
  const auto punct = encode_hashed("!!! ...", small(16, true, true));
  for (double x : punct.v) CHECK(x == 0.0);
}

TEST_CASE("encoding is deterministic") {
  const auto a = encode_hashed("some stable text here", small(256, true, true));
  const auto b = encode_hashed("some stable text here", small(256, true, true));
  CHECK(a == b);
}

TEST_CASE("embeddings parse and validate") {
  const auto m = parse_embeddings("dim=3\ns1\t0.5 -1 2\ns2\t0 0 1\n");
  REQUIRE(m.size() == 2);
  CHECK(m.at("s1").v == std::vector<double>{0.5, -1.0, 2.0});
  CHECK(m.at("s2").v == std::vector<double>{0.0, 0.0, 1.0});

  CHECK_THROWS_AS(parse_embeddings("3\ns1\t1 2 3\n"), InputError);
  CHECK_THROWS_AS(parse_embeddings("dim=3\ns1\t1 2\n"), InputError);
  CHECK_THROWS_AS(parse_embeddings("dim=3\ns1\t1 2 3\ns1\t4 5 6\n"), InputError);
  CHECK_THROWS_AS(parse_embeddings("dim=0\n"), InputError);
  CHECK_THROWS_AS(parse_embeddings("dim=3\ns1\t1 2 x\n"), InputError);
}
