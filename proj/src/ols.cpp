#include "abcreg/ols.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "abcreg/errors.hpp"

namespace abcreg {

namespace {

long qr_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
  Eigen::VectorXd diag = qr.matrixQR().diagonal();
  long k = std::min(qr.rows(), qr.cols());
  double dmax = 0.0;
  for (long i = 0; i < k; ++i) dmax = std::max(dmax, std::abs(diag[i]));
  if (dmax == 0.0) return 0;
  long rank = 0;
  for (long i = 0; i < k; ++i)
    if (std::abs(diag[i]) > 1e-10 * dmax) ++rank;
  return rank;
}

}  // namespace

FitResult fit_ols(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const ConstraintMatrix& constraints) {
  const long n = design.X.rows();
  const long P = design.P();
  if (y.size() != n)
    throw NumericError("response length does not match design rows");

  NullspaceBasis basis = nullspace_basis(constraints, P);
  const long d = basis.Q.cols();
  if (n <= d)
    throw NumericError("n = " + std::to_string(n) +
                       " is not larger than the identified parameter count " +
                       std::to_string(d));

  Eigen::MatrixXd XQ = design.X * basis.Q;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XQ);
  if (qr_rank(qr) < d)
    throw NumericError(
        "reduced design X*Q is rank deficient; collinearity beyond the "
        "identification deficiency");

  FitResult fit;
  fit.coef_reduced = qr.solve(y);
  fit.Q = basis.Q;
  fit.coef = basis.Q * fit.coef_reduced;
  fit.fitted = XQ * fit.coef_reduced;
  // One refinement pass pins residuals == y - fitted bitwise and keeps the
  // reconstruction y = fitted + residuals exact to the last place.
  fit.residuals = y - fit.fitted;
  fit.fitted = y - fit.residuals;
  fit.residuals = y - fit.fitted;
  fit.n = n;
  fit.d = d;
  fit.df_residual = n - d;
  fit.sigma2 = fit.residuals.squaredNorm() / static_cast<double>(n - d);
  fit.ybar = y.mean();
  fit.scheme = constraints.scheme;
  fit.inference = InferenceKind::StudentT;
  fit.design = design;
  fit.constraints = constraints;

  // (XQ' XQ)^-1 from the pivoted factor: XQ * Pm = Qx * R.
  Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(d, d);
  Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd inv_piv = Rinv * Rinv.transpose();
  Eigen::MatrixXd xtx_inv = qr.colsPermutation() * inv_piv *
                            qr.colsPermutation().transpose();
  fit.vcov = fit.sigma2 * basis.Q * xtx_inv * basis.Q.transpose();
  return fit;
}

int FitResult::column_of(const Term& t) const {
  for (std::size_t j = 0; j < design.terms.size(); ++j)
    if (design.terms[j] == t) return static_cast<int>(j);
  return -1;
}

double FitResult::se(int col) const {
  double v = vcov(col, col);
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

CoefficientTable summarize(const FitResult& fit, double level) {
  if (fit.df_residual < 1 && fit.inference == InferenceKind::StudentT)
    throw NumericError("no residual degrees of freedom");
  if (!(level > 0.0 && level < 1.0))
    throw NumericError("confidence level must be in (0,1)");

  CoefficientTable table;
  table.level = level;
  table.df = fit.inference == InferenceKind::StudentT ? fit.df_residual : -1;

  double q;
  if (fit.inference == InferenceKind::StudentT) {
    boost::math::students_t dist(static_cast<double>(fit.df_residual));
    q = boost::math::quantile(dist, 0.5 + level / 2.0);
  } else {
    boost::math::normal dist;
    q = boost::math::quantile(dist, 0.5 + level / 2.0);
  }

  std::vector<bool> is_ref(fit.design.terms.size(), false);
  if (fit.scheme == Scheme::RGE) {
    // RGE rows pin single coefficients; mark those columns.
    for (long i = 0; i < fit.constraints.A.rows(); ++i) {
      int nz = -1;
      bool single = true;
      for (long j = 0; j < fit.constraints.A.cols(); ++j) {
        if (fit.constraints.A(i, j) != 0.0) {
          if (nz >= 0) {
            single = false;
            break;
          }
          nz = static_cast<int>(j);
        }
      }
      if (single && nz >= 0) is_ref[nz] = true;
    }
  }

  for (std::size_t j = 0; j < fit.design.terms.size(); ++j) {
    CoefficientRow row;
    row.term = fit.design.terms[j];
    row.label = row.term.label();
    row.estimate = fit.coef[static_cast<long>(j)];
    double var = fit.vcov(static_cast<long>(j), static_cast<long>(j));
    row.se = var > 0.0 ? std::sqrt(var) : 0.0;
    row.ref = is_ref[j];
    if (row.ref) {
      table.rows.push_back(row);
      continue;
    }
    // An SE at or below double-precision noise relative to the estimate
    // carries no sampling distribution; report it as degenerate instead of
    // printing p = 0.
    if (row.se <= 0.0 || row.se < 1e-12 * std::abs(row.estimate)) {
      row.degenerate = true;
      row.p = std::numeric_limits<double>::quiet_NaN();
      row.lo = row.hi = row.estimate;
      table.rows.push_back(row);
      continue;
    }
    row.stat = row.estimate / row.se;
    if (fit.inference == InferenceKind::StudentT) {
      boost::math::students_t dist(static_cast<double>(fit.df_residual));
      row.p = 2.0 * boost::math::cdf(dist, -std::abs(row.stat));
    } else {
      boost::math::normal dist;
      row.p = 2.0 * boost::math::cdf(dist, -std::abs(row.stat));
    }
    row.lo = row.estimate - q * row.se;
    row.hi = row.estimate + q * row.se;
    table.rows.push_back(row);
  }
  return table;
}

Eigen::VectorXd predict(const FitResult& fit, const Dataset& newdata) {
  Eigen::MatrixXd rows = build_rows(fit.design, newdata);
  return rows * fit.coef;
}

double group_specific_slope(const FitResult& fit, const std::string& x,
                            const std::map<std::string, std::string>& groups) {
  const ModelSpec& spec = fit.design.spec;
  auto it = std::find(spec.continuous.begin(), spec.continuous.end(), x);
  if (it == spec.continuous.end())
    throw DataError("variable '" + x + "' is not a continuous model term");

  std::vector<std::string> modifiers;
  for (const auto& [xv, cat] : spec.cat_cont)
    if (xv == x) modifiers.push_back(cat);

  if (modifiers.empty() && !groups.empty())
    throw DataError("variable '" + x +
                    "' is not cat-modified; no group assignment applies");

  Term main;
  main.kind = TermKind::Continuous;
  main.x = x;
  double slope = fit.coef[fit.column_of(main)];
  for (const auto& cat : modifiers) {
    auto g = groups.find(cat);
    if (g == groups.end())
      throw DataError("no level given for modifier '" + cat + "'");
    const Column& col = fit.design.source->column(cat);
    int level = -1;
    for (std::size_t l = 0; l < col.levels.size(); ++l)
      if (col.levels[l] == g->second) level = static_cast<int>(l);
    if (level < 0)
      throw DataError("unseen categorical level " + cat + "=" + g->second);
    Term t;
    t.kind = TermKind::CatCont;
    t.x = x;
    t.cat = cat;
    t.level = level;
    t.level_label = g->second;
    slope += fit.coef[fit.column_of(t)];
  }
  return slope;
}

Eigen::VectorXd original_scale_coefficients(const DesignMatrix& design,
                                            const Eigen::VectorXd& coef) {
  Eigen::VectorXd out = coef;
  const auto& terms = design.terms;
  auto center_of = [&](const std::string& v) {
    auto it = design.centers.find(v);
    return it == design.centers.end() ? 0.0 : it->second;
  };
  auto scale_of = [&](const std::string& v) {
    auto it = design.scales.find(v);
    return it == design.scales.end() ? 1.0 : it->second;
  };
  auto column_of = [&](const Term& t) {
    for (std::size_t j = 0; j < terms.size(); ++j)
      if (terms[j] == t) return static_cast<int>(j);
    return -1;
  };
  int intercept_col = -1;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const Term& t = terms[j];
    if (t.kind == TermKind::Intercept) intercept_col = static_cast<int>(j);
    if (t.kind == TermKind::Continuous || t.kind == TermKind::CatCont)
      out[j] = coef[j] / scale_of(t.x);
  }
  // The shift is absorbed by the intercept and, for cat-cont interactions,
  // by the matching categorical main coefficients.
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const Term& t = terms[j];
    if (t.kind == TermKind::Continuous && intercept_col >= 0) {
      out[intercept_col] -= center_of(t.x) / scale_of(t.x) * coef[j];
    } else if (t.kind == TermKind::CatCont) {
      Term main;
      main.kind = TermKind::CatMain;
      main.cat = t.cat;
      main.level = t.level;
      main.level_label = t.level_label;
      int col = column_of(main);
      if (col >= 0) out[col] -= center_of(t.x) / scale_of(t.x) * coef[j];
    }
  }
  return out;
}

Eigen::VectorXd to_original_scale(const FitResult& fit) {
  return original_scale_coefficients(fit.design, fit.coef);
}

}  // namespace abcreg
