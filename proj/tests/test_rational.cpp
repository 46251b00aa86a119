#include "streamsim/rational.hpp"

#include <catch_amalgamated.hpp>

using streamsim::Ratio;

TEST_CASE("decimal parsing is exact") {
  CHECK(Ratio::parse("0.1875") == Ratio(3, 16));
  CHECK(Ratio::parse("0.5") == Ratio(1, 2));
  CHECK(Ratio::parse("100.11") == Ratio(10011, 100));
  CHECK(Ratio::parse("2") == Ratio(2));
  CHECK(Ratio::parse("-0.25") == Ratio(-1, 4));
  CHECK(Ratio::parse("3/16") == Ratio(3, 16));
  CHECK(Ratio::parse("0.00075") == Ratio(3, 4000));
}

TEST_CASE("parse rejects garbage") {
  CHECK_THROWS_AS(Ratio::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(Ratio::parse("abc"), std::invalid_argument);
  CHECK_THROWS_AS(Ratio::parse("1.2.3"), std::invalid_argument);
  CHECK_THROWS_AS(Ratio::parse("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(Ratio::parse("1/"), std::invalid_argument);
}

TEST_CASE("arithmetic stays normalized") {
  Ratio w = Ratio(3, 16) / Ratio(1, 2);  // q / p
  CHECK(w == Ratio(3, 8));
  CHECK((Ratio(1, 2) + Ratio(1, 3)) == Ratio(5, 6));
  CHECK((Ratio(2, 4)) == Ratio(1, 2));
  CHECK((Ratio(1, 2) - Ratio(1)) == Ratio(-1, 2));
  CHECK((Ratio(2, 3) * Ratio(3, 2)) == Ratio(1));
  CHECK(Ratio(1, 3).to_double() == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("comparisons cross-multiply exactly") {
  CHECK(Ratio(1, 3) < Ratio(1, 2));
  CHECK(Ratio(19, 20) * Ratio(3, 16) <= Ratio(3, 16));
  CHECK(Ratio(-1, 2) < Ratio(0));
  CHECK(Ratio(7, 8) > Ratio(6, 7));
}

TEST_CASE("str and integrality") {
  CHECK(Ratio(3, 8).str() == "3/8");
  CHECK(Ratio(4, 2).str() == "2");
  CHECK(Ratio(4, 2).is_integer());
  CHECK_FALSE(Ratio(3, 8).is_integer());
  CHECK(Ratio(0).is_zero());
  CHECK(Ratio(1, 8).positive());
}

TEST_CASE("from_double quantizes to the requested grid") {
  CHECK(Ratio::from_double(0.5, 1 << 20) == Ratio(1, 2));
  CHECK(Ratio::from_double(1.0 / 3.0, 3) == Ratio(1, 3));
}
