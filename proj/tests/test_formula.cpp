#include <doctest.h>

#include "abcreg/errors.hpp"
#include "abcreg/formula.hpp"

using namespace abcreg;

TEST_CASE("parse: mains only") {
  ModelSpec s = parse_formula("y ~ x + race");
  CHECK(s.response == "y");
  REQUIRE(s.mains.size() == 2);
  CHECK(s.mains[0] == "x");
  CHECK(s.mains[1] == "race");
  CHECK(s.interactions.empty());
}

TEST_CASE("parse: star expansion") {
  ModelSpec s = parse_formula("y ~ x*race");
  REQUIRE(s.mains.size() == 2);
  REQUIRE(s.interactions.size() == 1);
  CHECK(s.interactions[0].first == "x");
  CHECK(s.interactions[0].second == "race");
}

TEST_CASE("parse: grouped star expansion") {
  ModelSpec s = parse_formula("y ~ (x1 + x2 + sex)*race");
  REQUIRE(s.mains.size() == 4);
  REQUIRE(s.interactions.size() == 3);
  CHECK(s.mains[3] == "race");
}

TEST_CASE("parse: star plus explicit colon deduplicates") {
  ModelSpec a = parse_formula("y ~ x*race");
  ModelSpec b = parse_formula("y ~ x + race + x:race");
  CHECK(a.render() == b.render());
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_formula("y ~ "), FormulaError);
  CHECK_THROWS_AS(parse_formula("y x"), FormulaError);
  CHECK_THROWS_AS(parse_formula("y ~ x + x"), FormulaError);
  CHECK_THROWS_AS(parse_formula("y ~ x + y"), FormulaError);
  CHECK_THROWS_AS(parse_formula("y ~ x:x"), FormulaError);
  CHECK_THROWS_AS(parse_formula("y ~ x & z"), FormulaError);
  CHECK_THROWS_AS(parse_formula("y ~ (x + z"), FormulaError);

  try {
    parse_formula("y ~ x ++ z");
  } catch (const FormulaError& e) {
    CHECK(e.position == 7);
  }
}

TEST_CASE("validate: kinds, ordering, hierarchy") {
  Schema schema = {{"y", ColumnKind::Continuous},
                   {"x", ColumnKind::Continuous},
                   {"z", ColumnKind::Continuous},
                   {"race", ColumnKind::Categorical},
                   {"sex", ColumnKind::Categorical}};

  SUBCASE("classification and canonical order") {
    ModelSpec s = validate_spec(parse_formula("y ~ z + sex*race + x"), schema);
    REQUIRE(s.resolved);
    CHECK(s.continuous == std::vector<std::string>{"x", "z"});
    CHECK(s.categorical == std::vector<std::string>{"race", "sex"});
    REQUIRE(s.cat_cat.size() == 1);
    CHECK(s.cat_cat[0].first == "race");  // normalized pair order
    CHECK(s.cat_cat[0].second == "sex");
  }

  SUBCASE("hierarchy auto-add with warning") {
    ModelSpec s = validate_spec(parse_formula("y ~ x:race"), schema);
    CHECK(s.continuous == std::vector<std::string>{"x"});
    CHECK(s.categorical == std::vector<std::string>{"race"});
    REQUIRE(s.cat_cont.size() == 1);
    CHECK(s.warnings.size() == 2);
  }

  SUBCASE("continuous:continuous rejected") {
    CHECK_THROWS_AS(validate_spec(parse_formula("y ~ x*z"), schema),
                    FormulaError);
  }

  SUBCASE("unknown variable") {
    CHECK_THROWS_AS(validate_spec(parse_formula("y ~ w"), schema),
                    FormulaError);
  }

  SUBCASE("categorical response rejected") {
    CHECK_THROWS_AS(validate_spec(parse_formula("race ~ x"), schema),
                    FormulaError);
  }

  SUBCASE("two-way ANOVA example") {
    ModelSpec s =
        validate_spec(parse_formula("y ~ race + sex + race:sex"), schema);
    REQUIRE(s.cat_cat.size() == 1);
    CHECK(s.cat_cont.empty());
  }

  SUBCASE("output is order independent") {
    ModelSpec a = validate_spec(parse_formula("y ~ x + z + race + sex"), schema);
    ModelSpec b = validate_spec(parse_formula("y ~ sex + z + race + x"), schema);
    CHECK(a.render() == b.render());
  }
}

TEST_CASE("parse-render-parse is idempotent on the canonical form") {
  Schema schema = {{"y", ColumnKind::Continuous},
                   {"x1", ColumnKind::Continuous},
                   {"x2", ColumnKind::Continuous},
                   {"c1", ColumnKind::Categorical},
                   {"c2", ColumnKind::Categorical}};
  ModelSpec s =
      validate_spec(parse_formula("y ~ (x1 + x2)*c1 + c2 + c1:c2"), schema);
  std::string canon = s.render();
  ModelSpec again = validate_spec(parse_formula(canon), schema);
  CHECK(again.render() == canon);
}
