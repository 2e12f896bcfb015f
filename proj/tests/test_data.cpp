#include <doctest.h>

#include <sstream>

#include "abcreg/data.hpp"
#include "abcreg/errors.hpp"
#include "helpers.hpp"

using namespace abcreg;

TEST_CASE("load_table: 3-row csv") {
  std::istringstream in("y,g\n1,A\n2,A\n3,B\n");
  Dataset d = load_table(in);
  CHECK(d.n == 3);
  const Column& g = d.column("g");
  REQUIRE(g.kind == ColumnKind::Categorical);
  REQUIRE(g.levels.size() == 2);
  CHECK(g.levels[0] == "A");
  CHECK(g.levels[1] == "B");
  CHECK(d.column("y").kind == ColumnKind::Continuous);
}

TEST_CASE("load_table: categorical hint on numeric column") {
  std::istringstream in("y,flag\n1.5,0\n2.5,1\n3.5,0\n");
  Dataset d = load_table(in, {{"flag", ColumnKind::Categorical}});
  const Column& f = d.column("flag");
  REQUIRE(f.kind == ColumnKind::Categorical);
  CHECK(f.levels.size() == 2);
}

TEST_CASE("load_table: error paths") {
  SUBCASE("NA cell") {
    std::istringstream in("y,g\n1,A\nNA,B\n");
    try {
      load_table(in);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      std::string msg = e.what();
      CHECK(msg.find("line 3") != std::string::npos);
      CHECK(msg.find("'y'") != std::string::npos);
    }
  }
  SUBCASE("ragged row") {
    std::istringstream in("y,g\n1,A\n2\n");
    CHECK_THROWS_AS(load_table(in), DataError);
  }
  SUBCASE("empty file") {
    std::istringstream in("");
    CHECK_THROWS_AS(load_table(in), DataError);
  }
  SUBCASE("header only") {
    std::istringstream in("y,g\n");
    CHECK_THROWS_AS(load_table(in), DataError);
  }
  SUBCASE("continuous hint conflicts with content") {
    std::istringstream in("y,g\n1,A\n2,B\n");
    CHECK_THROWS_AS(load_table(in, {{"g", ColumnKind::Continuous}}),
                    DataError);
  }
}

TEST_CASE("compute_proportions") {
  SUBCASE("balanced two-level") {
    Dataset d = testutil::grouped_dataset({{1, 2}, {3, 4}}, {"A", "B"});
    ProportionTable p = compute_proportions(d, {"g"});
    Eigen::VectorXd m = p.marginal("g");
    CHECK(m[0] == doctest::Approx(0.5));
    CHECK(m[1] == doctest::Approx(0.5));
  }
  SUBCASE("counts over n") {
    Dataset d = testutil::grouped_dataset(
        {{1, 1, 1, 1}, {2, 2, 2}, {3, 3}, {4}}, {"A", "B", "C", "D"});
    ProportionTable p = compute_proportions(d, {"g"});
    Eigen::VectorXd m = p.marginal("g");
    CHECK(m[0] == doctest::Approx(0.4));
    CHECK(m[1] == doctest::Approx(0.3));
    CHECK(m[2] == doctest::Approx(0.2));
    CHECK(m[3] == doctest::Approx(0.1));
  }
  SUBCASE("joint and conditional views") {
    // race x sex counts [[1,3],[3,1]], n = 8
    Dataset d;
    d.add_categorical("race", {0, 0, 0, 0, 1, 1, 1, 1}, {"A", "B"});
    d.add_categorical("sex", {0, 1, 1, 1, 0, 0, 0, 1}, {"uu", "vv"});
    ProportionTable p = compute_proportions(d, {"race", "sex"});
    Eigen::MatrixXd j = p.pair_joint(0, 1);
    CHECK(j(0, 0) == doctest::Approx(0.125));
    CHECK(j(0, 1) == doctest::Approx(0.375));
    CHECK(j(1, 0) == doctest::Approx(0.375));
    CHECK(j(1, 1) == doctest::Approx(0.125));
    Eigen::VectorXd cond = p.conditional(1, 0, 0);  // sex | race=A
    CHECK(cond[0] == doctest::Approx(0.25));
    CHECK(cond[1] == doctest::Approx(0.75));
    double total = 0.0;
    for (double v : p.joint) total += v;
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  SUBCASE("non-categorical rejected") {
    Dataset d = testutil::grouped_dataset({{1}, {2}}, {"A", "B"});
    CHECK_THROWS_AS(compute_proportions(d, {"y"}), DataError);
  }
}

TEST_CASE("center_continuous") {
  Dataset d;
  d.add_continuous("x", {1, 2, 3});
  d.add_continuous("z", {-1, 0, 1});

  SUBCASE("basic centering") {
    CenterResult r = center_continuous(d, {"x"}, false);
    CHECK(r.centers.at("x") == doctest::Approx(2.0));
    CHECK(r.data.column("x").values[0] == doctest::Approx(-1.0));
    CHECK(r.data.column("x").values[2] == doctest::Approx(1.0));
    double mean = 0;
    for (double v : r.data.column("x").values) mean += v;
    CHECK(std::abs(mean) < 1e-12);
  }
  SUBCASE("already centered is unchanged") {
    CenterResult r = center_continuous(d, {"z"}, false);
    CHECK(r.centers.at("z") == doctest::Approx(0.0));
    CHECK(r.data.column("z").values[0] == doctest::Approx(-1.0));
  }
  SUBCASE("standardize zero variance errors") {
    Dataset c;
    c.add_continuous("w", {0, 0, 0});
    CHECK_THROWS_AS(center_continuous(c, {"w"}, true), DataError);
  }
  SUBCASE("standardize gives unit sample sd") {
    CenterResult r = center_continuous(d, {"x"}, true);
    const auto& v = r.data.column("x").values;
    double ss = 0;
    for (double u : v) ss += u * u;
    CHECK(ss / 2.0 == doctest::Approx(1.0));  // n-1 = 2
  }
}

TEST_CASE("build_design shapes and metadata") {
  Schema schema;
  testutil::RandomData rd(42);

  SUBCASE("y ~ x + C with two levels: P = 4") {
    Dataset d;
    d.add_continuous("y", {1, 2, 3});
    d.add_continuous("x", {-1, 0, 1});
    d.add_categorical("C", {0, 0, 1}, {"A", "B"});
    ModelSpec s = validate_spec(parse_formula("y ~ x + C"), d.schema());
    DesignMatrix dm = build_design(s, d);
    CHECK(dm.P() == 4);
    CHECK(dm.terms[0].kind == TermKind::Intercept);
    CHECK(dm.terms[1].kind == TermKind::Continuous);
    CHECK(dm.terms[2].level_label == "A");
    // cat main columns sum to one row-wise
    for (long i = 0; i < 3; ++i)
      CHECK(dm.X(i, 2) + dm.X(i, 3) == doctest::Approx(1.0));
  }

  SUBCASE("y ~ x*C with three levels: P = 8") {
    Dataset d;
    d.add_continuous("y", {1, 2, 3, 4, 5, 6});
    d.add_continuous("x", {-2, -1, 0, 0, 1, 2});
    d.add_categorical("C", {0, 1, 2, 0, 1, 2}, {"A", "B", "C"});
    ModelSpec s = validate_spec(parse_formula("y ~ x*C"), d.schema());
    DesignMatrix dm = build_design(s, d);
    CHECK(dm.P() == 8);
    // cat-cont column equals x elementwise times the indicator
    std::vector<int> cols = dm.columns_of(TermKind::CatCont, "x", "C");
    REQUIRE(cols.size() == 3);
    const auto& xv = d.column("x").values;
    const auto& cc = d.column("C").codes;
    for (long i = 0; i < 6; ++i)
      for (int l = 0; l < 3; ++l)
        CHECK(dm.X(i, cols[l]) ==
              doctest::Approx(cc[i] == l ? xv[i] : 0.0));
  }

  SUBCASE("empty joint cell rejected with the cell name") {
    Dataset d;
    d.add_continuous("y", {1, 2, 3});
    d.add_categorical("C1", {0, 0, 1}, {"A", "B"});
    d.add_categorical("C2", {0, 1, 0}, {"x", "z"});
    ModelSpec s =
        validate_spec(parse_formula("y ~ C1 + C2 + C1:C2"), d.schema());
    try {
      build_design(s, d);
      FAIL("expected DesignError");
    } catch (const DesignError& e) {
      std::string msg = e.what();
      CHECK(msg.find("C1=B") != std::string::npos);
      CHECK(msg.find("C2=z") != std::string::npos);
    }
  }

  SUBCASE("column means of cat mains equal the marginal proportions") {
    Dataset d;
    long n = 40;
    std::vector<double> y(n);
    for (long i = 0; i < n; ++i) y[i] = rd.norm();
    d.add_continuous("y", std::move(y));
    d.add_categorical("C", rd.codes(n, 3), rd.level_names(3));
    ModelSpec s = validate_spec(parse_formula("y ~ C"), d.schema());
    DesignMatrix dm = build_design(s, d);
    ProportionTable p = compute_proportions(d, {"C"});
    Eigen::VectorXd marg = p.marginal("C");
    std::vector<int> cols = dm.columns_of(TermKind::CatMain, "C");
    for (int l = 0; l < 3; ++l)
      CHECK(dm.X.col(cols[l]).mean() == doctest::Approx(marg[l]));
  }

  SUBCASE("bit-identical on identical inputs") {
    Dataset d;
    d.add_continuous("y", {1, 2, 3, 4});
    d.add_continuous("x", {0.5, -0.5, 1.5, -1.5});
    d.add_categorical("C", {0, 1, 0, 1}, {"A", "B"});
    ModelSpec s = validate_spec(parse_formula("y ~ x*C"), d.schema());
    DesignMatrix a = build_design(s, d);
    DesignMatrix b = build_design(s, d);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  }
}
