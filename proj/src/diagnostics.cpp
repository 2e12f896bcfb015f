#include "abcreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "abcreg/errors.hpp"

namespace abcreg {

GroupScaleStats equal_variance_stats(const Dataset& data, const std::string& x,
                                     const std::string& cat) {
  const Column& cx = data.column(x);
  const Column& cc = data.column(cat);
  if (cx.kind != ColumnKind::Continuous)
    throw DataError("variable '" + x + "' is not continuous");
  if (cc.kind != ColumnKind::Categorical)
    throw DataError("variable '" + cat + "' is not categorical");

  const long L = static_cast<long>(cc.levels.size());
  GroupScaleStats out;
  out.x = x;
  out.cat = cat;
  out.levels = cc.levels;
  out.count = Eigen::VectorXd::Zero(L);
  out.mean = Eigen::VectorXd::Zero(L);
  out.variance = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(L);
  for (long i = 0; i < data.n; ++i) {
    int r = cc.codes[i];
    out.count[r] += 1.0;
    out.mean[r] += cx.values[i];
    sumsq[r] += cx.values[i] * cx.values[i];
  }
  for (long r = 0; r < L; ++r) {
    if (out.count[r] == 0.0)
      throw DataError("empty group " + cat + "=" + cc.levels[r]);
    out.mean[r] /= out.count[r];
    out.variance[r] = sumsq[r] / out.count[r] - out.mean[r] * out.mean[r];
    if (out.variance[r] < 0.0) out.variance[r] = 0.0;  // rounding guard
  }
  double vmin = out.variance.minCoeff(), vmax = out.variance.maxCoeff();
  out.dispersion_ratio =
      vmin > 0.0 ? vmax / vmin : std::numeric_limits<double>::infinity();
  return out;
}

GroupCovarianceStats equal_covariance_stats(const Dataset& data,
                                            const std::vector<std::string>& xs,
                                            const std::string& cat) {
  const Column& cc = data.column(cat);
  if (cc.kind != ColumnKind::Categorical)
    throw DataError("variable '" + cat + "' is not categorical");
  const long L = static_cast<long>(cc.levels.size());
  const long p = static_cast<long>(xs.size());

  GroupCovarianceStats out;
  out.xs = xs;
  out.cat = cat;
  out.levels = cc.levels;

  std::vector<const Column*> cols;
  for (const auto& x : xs) {
    const Column& c = data.column(x);
    if (c.kind != ColumnKind::Continuous)
      throw DataError("variable '" + x + "' is not continuous");
    cols.push_back(&c);
  }

  std::vector<Eigen::VectorXd> mean(L, Eigen::VectorXd::Zero(p));
  std::vector<Eigen::MatrixXd> cross(L, Eigen::MatrixXd::Zero(p, p));
  Eigen::VectorXd count = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd xi(p);
  for (long i = 0; i < data.n; ++i) {
    int r = cc.codes[i];
    for (long j = 0; j < p; ++j) xi[j] = cols[j]->values[i];
    count[r] += 1.0;
    mean[r] += xi;
    cross[r] += xi * xi.transpose();
  }
  for (long r = 0; r < L; ++r) {
    if (count[r] == 0.0)
      throw DataError("empty group " + cat + "=" + cc.levels[r]);
    mean[r] /= count[r];
    out.covariance.push_back(cross[r] / count[r] -
                             mean[r] * mean[r].transpose());
  }
  out.max_discrepancy = 0.0;
  for (long r = 1; r < L; ++r)
    out.max_discrepancy =
        std::max(out.max_discrepancy,
                 (out.covariance[r] - out.covariance[0]).cwiseAbs().maxCoeff());
  return out;
}

PartialResidualStats partial_residual_covariance(const Dataset& data,
                                                 const ModelSpec& spec,
                                                 const std::string& x1,
                                                 const std::string& cat) {
  if (std::find(spec.continuous.begin(), spec.continuous.end(), x1) ==
      spec.continuous.end())
    throw DataError("variable '" + x1 + "' is not a continuous model term");
  if (std::find(spec.categorical.begin(), spec.categorical.end(), cat) ==
      spec.categorical.end())
    throw DataError("variable '" + cat + "' is not a categorical model term");

  // Auxiliary regression x1 ~ x2 + ... + xp + cat. Residuals are invariant
  // to the identification, so any scheme works.
  ModelSpec aux;
  aux.response = x1;
  aux.resolved = true;
  for (const auto& v : spec.continuous)
    if (v != x1) aux.continuous.push_back(v);
  aux.categorical.push_back(cat);

  DesignMatrix dm = build_design(aux, data);
  ProportionTable props = compute_proportions(data, {cat});
  ConstraintMatrix con = build_constraints(dm, props, Scheme::ABC);
  const Column& cx = data.column(x1);
  Eigen::VectorXd y(data.n);
  for (long i = 0; i < data.n; ++i) y[i] = cx.values[i];
  FitResult fit = fit_ols(dm, y, con);

  const Column& cc = data.column(cat);
  const long L = static_cast<long>(cc.levels.size());
  PartialResidualStats out;
  out.x1 = x1;
  out.cat = cat;
  out.levels = cc.levels;
  out.covariance = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(L);
  for (long i = 0; i < data.n; ++i) {
    int r = cc.codes[i];
    count[r] += 1.0;
    out.covariance[r] += cx.values[i] * fit.residuals[i];
  }
  for (long r = 0; r < L; ++r) {
    if (count[r] == 0.0)
      throw DataError("empty group " + cat + "=" + cc.levels[r]);
    out.covariance[r] /= count[r];
  }
  for (long r = 1; r < L; ++r)
    out.max_discrepancy = std::max(
        out.max_discrepancy, std::abs(out.covariance[r] - out.covariance[0]));
  return out;
}

VarianceReductionVerdict variance_reduction_condition(const FitResult& main,
                                                      const FitResult& cm) {
  if (!main.design.spec.nested_in(cm.design.spec))
    throw DataError("fits are not nested: the smaller model's terms must all "
                    "appear in the larger");
  if (main.n != cm.n)
    throw DataError("fits use different numbers of observations");
  long d_added = cm.d - main.d;
  if (d_added <= 0)
    throw DataError("models add no identified parameters (d = " +
                    std::to_string(d_added) + ")");

  VarianceReductionVerdict v;
  v.s2_main = main.sigma2;
  v.s2_cm = cm.sigma2;
  double rss_main = main.rss(), rss_cm = cm.rss();
  v.lhs = (rss_main - rss_cm) / rss_main;
  v.rhs = static_cast<double>(d_added) /
          static_cast<double>(main.n - main.d);
  v.margin = v.lhs - v.rhs;
  v.holds = v.s2_cm <= v.s2_main;
  return v;
}

InvarianceReport compare_nested(const FitResult& main, const FitResult& cm,
                                bool allow_mixed_schemes) {
  if (main.scheme != cm.scheme && !allow_mixed_schemes)
    throw DataError(
        "fits use different identification schemes; pass the override to "
        "compare anyway");

  InvarianceReport rep;
  rep.scheme_main = main.scheme;
  rep.scheme_cm = cm.scheme;
  rep.rv = variance_reduction_condition(main, cm);

  for (std::size_t j = 0; j < main.design.terms.size(); ++j) {
    const Term& t = main.design.terms[j];
    if (!t.is_main()) continue;
    int col_cm = cm.column_of(t);
    if (col_cm < 0) continue;
    EffectComparison e;
    e.term = t;
    e.label = t.label();
    e.est_main = main.coef[static_cast<long>(j)];
    e.est_cm = cm.coef[col_cm];
    e.delta = std::abs(e.est_cm - e.est_main);
    e.se_main = main.se(static_cast<int>(j));
    e.se_cm = cm.se(col_cm);
    e.ratio = e.se_main > 0.0
                  ? e.se_cm / e.se_main
                  : std::numeric_limits<double>::quiet_NaN();
    rep.effects.push_back(e);
  }

  // Which interactions were added decides the applicable conditions.
  std::vector<std::pair<std::string, std::string>> added_cc;
  for (const auto& p : cm.design.spec.cat_cont)
    if (std::find(main.design.spec.cat_cont.begin(),
                  main.design.spec.cat_cont.end(),
                  p) == main.design.spec.cat_cont.end())
      added_cc.push_back(p);
  std::vector<std::pair<std::string, std::string>> added_kk;
  for (const auto& p : cm.design.spec.cat_cat)
    if (std::find(main.design.spec.cat_cat.begin(),
                  main.design.spec.cat_cat.end(),
                  p) == main.design.spec.cat_cat.end())
      added_kk.push_back(p);

  if (!added_kk.empty())
    rep.notes.push_back(
        "categorical-categorical interactions added: under abundance "
        "constraints, shared main-effect estimates are exactly invariant");

  const Dataset& data = *cm.design.source;
  std::map<std::string, std::vector<std::string>> by_cat;
  for (const auto& [x, c] : added_cc) {
    rep.variance_stats.push_back(equal_variance_stats(data, x, c));
    by_cat[c].push_back(x);
  }
  for (const auto& [c, xs] : by_cat) {
    const auto& all_x = cm.design.spec.continuous;
    if (xs.size() > 1) {
      rep.covariance_stats = equal_covariance_stats(data, xs, c);
      if (xs.size() == all_x.size())
        rep.notes.push_back(
            "all continuous covariates are modified by '" + c +
            "': equal group covariances imply invariant continuous main "
            "effects");
    } else if (all_x.size() > 1) {
      rep.partial_stats =
          partial_residual_covariance(data, cm.design.spec, xs[0], c);
      rep.notes.push_back(
          "only '" + xs[0] + "' is modified by '" + c +
          "': equal group covariances between it and its partial residuals "
          "imply an invariant main effect");
    } else {
      rep.notes.push_back(
          "'" + xs[0] + "' is modified by '" + c +
          "': equal group variances imply an invariant main effect");
    }
  }
  for (const auto& gs : rep.variance_stats) {
    if (gs.dispersion_ratio < 1.1)
      rep.notes.push_back("group variances of '" + gs.x +
                          "' are nearly equal (dispersion ratio " +
                          std::to_string(gs.dispersion_ratio) + ")");
  }
  return rep;
}

namespace {
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

std::string InvarianceReport::to_text() const {
  std::ostringstream os;
  os << "Main-effect comparison (" << scheme_name(scheme_main) << " vs "
     << scheme_name(scheme_cm) << ")\n";
  os << "  effect            delta          SE ratio\n";
  for (const auto& e : effects) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-16s  %-13.6g  %.6g\n",
                  e.label.c_str(), e.delta, e.ratio);
    os << buf;
  }
  os << "Residual variance: main-only " << fmt(rv.s2_main) << ", cat-modified "
     << fmt(rv.s2_cm) << (rv.holds ? " (reduced)" : " (not reduced)") << "\n";
  os << "Adjusted-R2 condition: (rss_M - rss)/rss_M = " << fmt(rv.lhs)
     << (rv.holds ? " >= " : " < ") << fmt(rv.rhs) << " = d/(n - d_M)\n";
  for (const auto& gs : variance_stats) {
    os << "Group variances of " << gs.x << " by " << gs.cat << ":";
    for (long r = 0; r < gs.variance.size(); ++r)
      os << " " << gs.levels[r] << "=" << fmt(gs.variance[r]);
    os << " (dispersion ratio " << fmt(gs.dispersion_ratio) << ")\n";
  }
  if (covariance_stats) {
    os << "Max group-covariance discrepancy among {";
    for (std::size_t i = 0; i < covariance_stats->xs.size(); ++i)
      os << (i ? "," : "") << covariance_stats->xs[i];
    os << "}: " << fmt(covariance_stats->max_discrepancy) << "\n";
  }
  if (partial_stats) {
    os << "Partial-residual covariance of " << partial_stats->x1 << " by "
       << partial_stats->cat << ":";
    for (long r = 0; r < partial_stats->covariance.size(); ++r)
      os << " " << partial_stats->levels[r] << "="
         << fmt(partial_stats->covariance[r]);
    os << "\n";
  }
  for (const auto& n : notes) os << "Note: " << n << "\n";
  return os.str();
}

std::string InvarianceReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "effect,est_main,est_cm,delta,se_main,se_cm,se_ratio\n";
  for (const auto& e : effects)
    os << e.label << "," << e.est_main << "," << e.est_cm << "," << e.delta
       << "," << e.se_main << "," << e.se_cm << "," << e.ratio << "\n";
  os << "rv_holds," << (rv.holds ? 1 : 0) << ",,,,,\n";
  os << "rv_lhs," << rv.lhs << ",,,,,\n";
  os << "rv_rhs," << rv.rhs << ",,,,,\n";
  return os.str();
}

}  // namespace abcreg
