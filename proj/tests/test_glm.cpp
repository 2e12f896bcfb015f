#include <doctest.h>

#include <random>

#include "abcreg/errors.hpp"
#include "abcreg/glm.hpp"
#include "abcreg/model.hpp"
#include "helpers.hpp"

using namespace abcreg;

namespace {

ModelFrame frame_for(const Dataset& d, const std::string& formula,
                     Scheme scheme = Scheme::ABC) {
  FitOptions opts;
  opts.scheme = scheme;
  opts.center = false;
  return prepare(d, parse_formula(formula), opts);
}

Dataset logistic_data(long n, std::uint64_t seed) {
  testutil::RandomData rd(seed);
  std::vector<double> y(n), x(n);
  std::vector<int> g(n);
  for (long i = 0; i < n; ++i) {
    x[i] = rd.norm();
    g[i] = rd.uniform_int(0, 2);
    double eta = 0.3 + 0.8 * x[i] + 0.4 * (g[i] - 1) + 0.3 * x[i] * (g[i] == 2);
    double p = 1.0 / (1.0 + std::exp(-eta));
    y[i] = rd.unif() < p ? 1.0 : 0.0;
  }
  for (int l = 0; l < 3; ++l) g[l] = l;
  Dataset d;
  d.add_continuous("y", std::move(y));
  d.add_continuous("x", std::move(x));
  d.add_categorical("g", std::move(g), rd.level_names(3));
  return d;
}

}  // namespace

TEST_CASE("gaussian family reproduces OLS") {
  testutil::RandomData rd(3);
  Dataset d;
  long n = 50;
  std::vector<double> y(n), x(n);
  for (long i = 0; i < n; ++i) {
    x[i] = rd.norm();
    y[i] = 1.0 + 2.0 * x[i] + rd.norm();
  }
  d.add_continuous("y", std::move(y));
  d.add_continuous("x", std::move(x));
  d.add_categorical("g", rd.codes(n, 3), rd.level_names(3));
  ModelFrame f = frame_for(d, "y ~ x*g");
  FitResult ols = fit_linear(f);
  FitResult glm = fit_family(f, family_from_string("gaussian"));
  CHECK((ols.coef - glm.coef).cwiseAbs().maxCoeff() < 1e-8);
  // same standard errors; only the reference distribution differs
  for (long j = 0; j < ols.coef.size(); ++j)
    CHECK(glm.se(static_cast<int>(j)) ==
          doctest::Approx(ols.se(static_cast<int>(j))).epsilon(1e-8));
}

TEST_CASE("intercept-only MLEs match closed forms") {
  SUBCASE("binomial: logit of the success rate") {
    Dataset d;
    d.add_continuous("y", {1, 1, 1, 0});
    ModelFrame f = frame_for(d, "y ~ 1");
    FitResult fit = fit_family(f, family_from_string("binomial"));
    CHECK(fit.coef[0] == doctest::Approx(std::log(3.0)).epsilon(1e-8));
  }
  SUBCASE("poisson: log of the mean") {
    Dataset d;
    d.add_continuous("y", {1, 2, 3});
    ModelFrame f = frame_for(d, "y ~ 1");
    FitResult fit = fit_family(f, family_from_string("poisson"));
    CHECK(fit.coef[0] == doctest::Approx(std::log(2.0)).epsilon(1e-8));
  }
}

TEST_CASE("logistic fit: constraints hold and the score vanishes") {
  Dataset d = logistic_data(200, 17);
  ModelFrame f = frame_for(d, "y ~ x*g");
  Family fam = family_from_string("binomial");
  FitResult fit = fit_family(f, fam);

  CHECK(check_satisfied(fit.coef, f.constraints) < 1e-10);

  // reduced-coordinate score at convergence
  Eigen::MatrixXd XQ = f.design.X * fit.Q;
  Eigen::VectorXd eta = XQ * fit.coef_reduced;
  Eigen::VectorXd mu =
      eta.unaryExpr([&](double e) { return fam.inverse_link(e); });
  Eigen::VectorXd grad = XQ.transpose() * (mu - f.y);
  double dev = fam.deviance(f.y, mu);
  CHECK(grad.cwiseAbs().maxCoeff() < 1e-6 * (1.0 + std::abs(dev)));
}

TEST_CASE("analytic reduced gradient matches finite differences") {
  for (std::uint64_t seed : {1ull, 2ull}) {
    Dataset d = logistic_data(60, seed);
    for (const char* fname : {"binomial", "poisson"}) {
      Family fam = family_from_string(fname);
      Dataset data = d;
      if (fam.kind == Family::Kind::Poisson) {
        // reuse covariates with a small count response
        std::vector<double> y(d.n);
        testutil::RandomData rd(seed + 100);
        for (long i = 0; i < d.n; ++i)
          y[i] = static_cast<double>(rd.uniform_int(0, 6));
        data.columns[0].values = y;
      }
      ModelFrame f = frame_for(data, "y ~ x*g");
      NullspaceBasis basis = nullspace_basis(f.constraints, f.design.P());
      Eigen::MatrixXd XQ = f.design.X * basis.Q;

      testutil::RandomData rd(seed);
      Eigen::VectorXd w(XQ.cols());
      for (long j = 0; j < w.size(); ++j) w[j] = 0.3 * rd.norm();

      Eigen::VectorXd eta = XQ * w;
      Eigen::VectorXd mu =
          eta.unaryExpr([&](double e) { return fam.inverse_link(e); });
      Eigen::VectorXd analytic = XQ.transpose() * (mu - f.y);

      const double h = 1e-6;
      for (long j = 0; j < w.size(); ++j) {
        Eigen::VectorXd wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        double fp = fam.nll(f.y, XQ * wp);
        double fm = fam.nll(f.y, XQ * wm);
        double fd = (fp - fm) / (2.0 * h);
        CHECK(std::abs(fd - analytic[j]) <
              1e-5 * (1.0 + std::abs(analytic[j])));
      }
    }
  }
}

TEST_CASE("glm covariance matches a finite-difference Hessian") {
  Dataset d = logistic_data(180, 37);
  ModelFrame f = frame_for(d, "y ~ x + g");
  Family fam = family_from_string("binomial");
  FitResult fit = fit_family(f, fam);

  Eigen::MatrixXd XQ = f.design.X * fit.Q;
  const long dd = XQ.cols();
  const Eigen::VectorXd& w = fit.coef_reduced;
  const double h = 1e-5;
  Eigen::MatrixXd H(dd, dd);
  for (long a = 0; a < dd; ++a) {
    for (long b = 0; b <= a; ++b) {
      Eigen::VectorXd wpp = w, wpm = w, wmp = w, wmm = w;
      wpp[a] += h; wpp[b] += h;
      wpm[a] += h; wpm[b] -= h;
      wmp[a] -= h; wmp[b] += h;
      wmm[a] -= h; wmm[b] -= h;
      double v = (fam.nll(f.y, XQ * wpp) - fam.nll(f.y, XQ * wpm) -
                  fam.nll(f.y, XQ * wmp) + fam.nll(f.y, XQ * wmm)) /
                 (4.0 * h * h);
      H(a, b) = H(b, a) = v;
    }
  }
  Eigen::MatrixXd vcov_fd =
      fit.Q * H.ldlt().solve(Eigen::MatrixXd::Identity(dd, dd)) *
      fit.Q.transpose();
  double rel = (vcov_fd - fit.vcov).cwiseAbs().maxCoeff() /
               fit.vcov.cwiseAbs().maxCoeff();
  CHECK(rel < 1e-4);
}

TEST_CASE("every IRLS path stays feasible via the reduced parametrization") {
  // Feasibility is structural: coefficients are Q w by construction. Check
  // the end point across families and schemes.
  Dataset d = logistic_data(150, 29);
  for (Scheme scheme : {Scheme::ABC, Scheme::RGE, Scheme::STZ}) {
    ModelFrame f = frame_for(d, "y ~ x*g", scheme);
    FitResult fit = fit_family(f, family_from_string("binomial"));
    CHECK(check_satisfied(fit.coef, f.constraints) < 1e-10);
  }
}

TEST_CASE("glm error paths") {
  SUBCASE("invalid binomial response") {
    Dataset d;
    d.add_continuous("y", {0, 1, 2});
    ModelFrame f = frame_for(d, "y ~ 1");
    CHECK_THROWS_AS(fit_family(f, family_from_string("binomial")), DataError);
  }
  SUBCASE("negative poisson response") {
    Dataset d;
    d.add_continuous("y", {1, -1, 2});
    ModelFrame f = frame_for(d, "y ~ 1");
    CHECK_THROWS_AS(fit_family(f, family_from_string("poisson")), DataError);
  }
  SUBCASE("separation detected") {
    Dataset d;
    d.add_continuous("y", {0, 0, 0, 0, 1, 1, 1, 1});
    d.add_continuous("x", {-4, -3, -2, -1, 1, 2, 3, 4});
    ModelFrame f = frame_for(d, "y ~ x");
    CHECK_THROWS_AS(fit_family(f, family_from_string("binomial")),
                    NumericError);
  }
}

TEST_CASE("effect_scale") {
  Dataset d = logistic_data(250, 41);
  ModelFrame f = frame_for(d, "y ~ x*g");
  Family fam = family_from_string("binomial");
  FitResult fit = fit_family(f, fam);

  SUBCASE("identity link rejected") {
    CHECK_THROWS_AS(effect_scale(fit, family_from_string("gaussian")),
                    DataError);
  }
  SUBCASE("zero coefficient maps to ratio 1 and exponentiated endpoints") {
    EffectScaleTable t = effect_scale(fit, fam);
    CoefficientTable raw = summarize(fit);
    for (std::size_t i = 0; i < t.table.rows.size(); ++i) {
      CHECK(t.table.rows[i].estimate ==
            doctest::Approx(std::exp(raw.rows[i].estimate)));
      CHECK(t.table.rows[i].lo == doctest::Approx(std::exp(raw.rows[i].lo)));
    }
  }
  SUBCASE("main effect is the weighted geometric mean of group odds ratios") {
    Eigen::VectorXd marg = f.props->marginal("g");
    Term xt;
    xt.kind = TermKind::Continuous;
    xt.x = "x";
    double alpha = fit.coef[fit.column_of(xt)];
    double log_gm = 0.0;
    for (int l = 0; l < 3; ++l) {
      Term g;
      g.kind = TermKind::CatCont;
      g.x = "x";
      g.cat = "g";
      g.level_label = std::string(1, 'A' + l);
      log_gm += marg[l] * (alpha + fit.coef[fit.column_of(g)]);
    }
    CHECK(std::abs(std::exp(log_gm) - std::exp(alpha)) < 1e-10);
  }
}
