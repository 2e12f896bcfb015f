#include "abcreg/glm.hpp"

#include <cmath>

#include "abcreg/errors.hpp"

namespace abcreg {

namespace {
constexpr double kMuEps = 1e-10;
constexpr int kMaxIter = 100;
constexpr int kMaxHalvings = 10;
constexpr double kSeparationBound = 1e3;
}  // namespace

std::string Family::name() const {
  switch (kind) {
    case Kind::Gaussian: return "gaussian";
    case Kind::Binomial: return "binomial";
    case Kind::Poisson: return "poisson";
  }
  return "";
}

double Family::link(double mu) const {
  switch (kind) {
    case Kind::Gaussian: return mu;
    case Kind::Binomial: {
      double m = std::min(std::max(mu, kMuEps), 1.0 - kMuEps);
      return std::log(m / (1.0 - m));
    }
    case Kind::Poisson: return std::log(std::max(mu, kMuEps));
  }
  return 0.0;
}

double Family::inverse_link(double eta) const {
  switch (kind) {
    case Kind::Gaussian: return eta;
    case Kind::Binomial: return 1.0 / (1.0 + std::exp(-eta));
    case Kind::Poisson: return std::exp(eta);
  }
  return 0.0;
}

double Family::variance(double mu) const {
  switch (kind) {
    case Kind::Gaussian: return 1.0;
    case Kind::Binomial: {
      double m = std::min(std::max(mu, kMuEps), 1.0 - kMuEps);
      return m * (1.0 - m);
    }
    case Kind::Poisson: return std::max(mu, kMuEps);
  }
  return 1.0;
}

double Family::deviance(const Eigen::VectorXd& y,
                        const Eigen::VectorXd& mu) const {
  double dev = 0.0;
  switch (kind) {
    case Kind::Gaussian:
      dev = (y - mu).squaredNorm();
      break;
    case Kind::Binomial:
      for (long i = 0; i < y.size(); ++i) {
        double m = std::min(std::max(mu[i], kMuEps), 1.0 - kMuEps);
        if (y[i] > 0.0) dev += 2.0 * y[i] * std::log(y[i] / m);
        if (y[i] < 1.0)
          dev += 2.0 * (1.0 - y[i]) * std::log((1.0 - y[i]) / (1.0 - m));
      }
      break;
    case Kind::Poisson:
      for (long i = 0; i < y.size(); ++i) {
        double m = std::max(mu[i], kMuEps);
        if (y[i] > 0.0) dev += 2.0 * y[i] * std::log(y[i] / m);
        dev -= 2.0 * (y[i] - m);
      }
      break;
  }
  return dev;
}

double Family::nll(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) const {
  double v = 0.0;
  switch (kind) {
    case Kind::Gaussian:
      for (long i = 0; i < y.size(); ++i) {
        double r = y[i] - eta[i];
        v += 0.5 * r * r;
      }
      break;
    case Kind::Binomial:
      for (long i = 0; i < y.size(); ++i) {
        // log(1 + e^eta) - y*eta, computed stably
        double e = eta[i];
        v += (e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
        v -= y[i] * e;
      }
      break;
    case Kind::Poisson:
      for (long i = 0; i < y.size(); ++i) v += std::exp(eta[i]) - y[i] * eta[i];
      break;
  }
  return v;
}

void Family::check_response(const Eigen::VectorXd& y) const {
  switch (kind) {
    case Kind::Gaussian:
      break;
    case Kind::Binomial:
      for (long i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0)
          throw DataError("binomial response must be 0/1; found " +
                          std::to_string(y[i]));
      break;
    case Kind::Poisson:
      for (long i = 0; i < y.size(); ++i)
        if (y[i] < 0.0)
          throw DataError("poisson response must be nonnegative");
      break;
  }
}

Family family_from_string(const std::string& name) {
  Family f;
  if (name == "gaussian") f.kind = Family::Kind::Gaussian;
  else if (name == "binomial") f.kind = Family::Kind::Binomial;
  else if (name == "poisson") f.kind = Family::Kind::Poisson;
  else throw DataError("unknown family '" + name + "'");
  return f;
}

FitResult fit_glm(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const ConstraintMatrix& constraints, const Family& family) {
  family.check_response(y);
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

  // Initialization: mu away from the boundary, then one working-response
  // step defines the starting coefficients.
  Eigen::VectorXd mu(n), eta(n);
  switch (family.kind) {
    case Family::Kind::Gaussian:
      eta.setZero();
      mu = eta;
      break;
    case Family::Kind::Binomial:
      for (long i = 0; i < n; ++i) mu[i] = (y[i] + 0.5) / 2.0;
      for (long i = 0; i < n; ++i) eta[i] = family.link(mu[i]);
      break;
    case Family::Kind::Poisson:
      for (long i = 0; i < n; ++i) mu[i] = y[i] + 0.5;
      for (long i = 0; i < n; ++i) eta[i] = family.link(mu[i]);
      break;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  bool have_coef = false;
  double dev = family.deviance(y, mu);
  bool converged = false;

  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::VectorXd wts(n), z(n);
    for (long i = 0; i < n; ++i) {
      double v = family.variance(mu[i]);
      wts[i] = std::sqrt(v);
      z[i] = eta[i] + (y[i] - mu[i]) / v;
    }
    Eigen::MatrixXd Xw = wts.asDiagonal() * XQ;
    Eigen::VectorXd zw = wts.asDiagonal() * z;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
    if (qr.rank() < d)
      throw NumericError("weighted reduced design is rank deficient");
    Eigen::VectorXd w_new = qr.solve(zw);

    // Step halving keeps the deviance nonincreasing.
    double dev_new = 0.0;
    Eigen::VectorXd eta_new, mu_new;
    int halvings = 0;
    for (;; ++halvings) {
      eta_new = XQ * w_new;
      mu_new = eta_new.unaryExpr(
          [&](double e) { return family.inverse_link(e); });
      dev_new = family.deviance(y, mu_new);
      if (!have_coef || dev_new <= dev + 1e-12 || halvings >= kMaxHalvings)
        break;
      w_new = 0.5 * (w_new + w);
    }

    double change = std::abs(dev - dev_new);
    w = w_new;
    have_coef = true;
    eta = eta_new;
    mu = mu_new;

    Eigen::VectorXd theta = basis.Q * w;
    if (theta.cwiseAbs().maxCoeff() > kSeparationBound)
      throw NumericError("separation detected: coefficients diverging");

    if (change < 1e-10 * (1.0 + std::abs(dev_new))) {
      dev = dev_new;
      converged = true;
      break;
    }
    dev = dev_new;
  }
  if (!converged)
    throw NumericError("IRLS did not converge in " +
                       std::to_string(kMaxIter) + " iterations");
  // A numerically zero binomial deviance means the fitted probabilities
  // have reached 0/1: the MLE is at infinity (complete or quasi-complete
  // separation) and the boundary clamp is masking divergence.
  if (family.kind == Family::Kind::Binomial && dev < 1e-6)
    throw NumericError("separation detected: fitted probabilities are "
                       "numerically 0 or 1");

  FitResult fit;
  fit.coef_reduced = w;
  fit.Q = basis.Q;
  fit.coef = basis.Q * w;
  fit.fitted = mu;
  fit.residuals = y - mu;
  fit.n = n;
  fit.d = d;
  fit.df_residual = n - d;
  fit.ybar = y.mean();
  fit.scheme = constraints.scheme;
  fit.inference = InferenceKind::Normal;
  fit.family = family.name();
  fit.design = design;
  fit.constraints = constraints;

  // Observed Fisher information of the reduced problem at the optimum.
  Eigen::VectorXd winfo(n);
  for (long i = 0; i < n; ++i) winfo[i] = family.variance(mu[i]);
  Eigen::MatrixXd info = XQ.transpose() * winfo.asDiagonal() * XQ;
  double dispersion = 1.0;
  if (family.kind == Family::Kind::Gaussian) {
    dispersion = fit.residuals.squaredNorm() / static_cast<double>(n - d);
    fit.sigma2 = dispersion;
  } else {
    fit.sigma2 = 1.0;
  }
  Eigen::MatrixXd info_inv = info.ldlt().solve(
      Eigen::MatrixXd::Identity(d, d));
  fit.vcov = dispersion * basis.Q * info_inv * basis.Q.transpose();
  return fit;
}

EffectScaleTable effect_scale(const FitResult& fit, const Family& family,
                              double level) {
  if (family.kind == Family::Kind::Gaussian)
    throw DataError("effect_scale requires a log or logit link");
  EffectScaleTable out;
  out.table = summarize(fit, level);
  for (auto& row : out.table.rows) {
    row.estimate = std::exp(row.estimate);
    row.lo = std::exp(row.lo);
    row.hi = std::exp(row.hi);
  }
  out.note = family.kind == Family::Kind::Binomial
                 ? "exponentiated coefficients are odds ratios; under "
                   "abundance weights, main effects are weighted geometric "
                   "means of the group-specific odds ratios"
                 : "exponentiated coefficients are rate ratios; under "
                   "abundance weights, main effects are weighted geometric "
                   "means of the group-specific ratios";
  return out;
}

}  // namespace abcreg
