#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "abcreg/model.hpp"
#include "abcreg/ols.hpp"
#include "helpers.hpp"

using namespace abcreg;

namespace {

FitResult fixture_fit(Scheme scheme) {
  // groups A: (1, 3), B: (2, 6)
  Dataset d = testutil::grouped_dataset({{1, 3}, {2, 6}}, {"A", "B"});
  FitOptions opts;
  opts.scheme = scheme;
  opts.center = false;
  ModelFrame f = prepare(d, parse_formula("y ~ g"), opts);
  return fit_linear(f);
}

}  // namespace

TEST_CASE("table renderer: ABC fixture, byte for byte") {
  CoefficientTable t = summarize(fixture_fit(Scheme::ABC));
  const std::string expected =
      "Variable    Estimate (SE)  p-value\n"
      "----------------------------------\n"
      "Intercept   3.000 (1.118)    0.115\n"
      "A          -1.000 (1.118)    0.465\n"
      "B           1.000 (1.118)    0.465\n";
  CHECK(t.to_text() == expected);
}

TEST_CASE("table renderer: RGE fixture shows ref rows, byte for byte") {
  CoefficientTable t = summarize(fixture_fit(Scheme::RGE));
  const std::string expected =
      "Variable   Estimate (SE)  p-value\n"
      "---------------------------------\n"
      "Intercept  2.000 (1.581)    0.333\n"
      "A                    ref      ref\n"
      "B          2.000 (2.236)    0.465\n";
  CHECK(t.to_text() == expected);
}

TEST_CASE("small p-values render as <0.001") {
  testutil::RandomData rd(3);
  long n = 200;
  std::vector<double> y(n), x(n);
  for (long i = 0; i < n; ++i) {
    x[i] = rd.norm();
    y[i] = 5.0 * x[i] + 0.1 * rd.norm();
  }
  Dataset d;
  d.add_continuous("y", std::move(y));
  d.add_continuous("x", std::move(x));
  FitOptions opts;
  opts.center = false;
  CoefficientTable t =
      summarize(fit_linear(prepare(d, parse_formula("y ~ x"), opts)));
  CHECK(t.to_text().find("<0.001") != std::string::npos);
}

TEST_CASE("coefficient CSV round-trips at full precision") {
  CoefficientTable t = summarize(fixture_fit(Scheme::ABC));
  std::string csv = t.to_csv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    fields.push_back(cur);
    REQUIRE(fields.size() == 14);
    CHECK(std::strtod(fields[7].c_str(), nullptr) == t.rows[row].estimate);
    CHECK(std::strtod(fields[8].c_str(), nullptr) == t.rows[row].se);
    CHECK(std::strtod(fields[10].c_str(), nullptr) == t.rows[row].p);
    ++row;
  }
  CHECK(row == t.rows.size());
}
