#pragma once

#include <Eigen/Dense>
#include <string>

#include "abcreg/ols.hpp"

namespace abcreg {

// Canonical exponential families: gaussian/identity, binomial/logit,
// poisson/log.
struct Family {
  enum class Kind { Gaussian, Binomial, Poisson };
  Kind kind = Kind::Gaussian;

  std::string name() const;
  double link(double mu) const;
  double inverse_link(double eta) const;
  double variance(double mu) const;  // also d mu / d eta for canonical links
  double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) const;
  // Negative log-likelihood up to y-only constants, as a function of the
  // linear predictor.
  double nll(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) const;
  void check_response(const Eigen::VectorXd& y) const;
};

Family family_from_string(const std::string& name);

// Constrained maximum likelihood via IRLS in nullspace coordinates, so
// every iterate satisfies A theta = 0 exactly. Inference is asymptotic:
// vcov = Q I(theta_Q)^-1 Q' with the Fisher information of the reduced
// problem, and normal-reference p-values.
FitResult fit_glm(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const ConstraintMatrix& constraints, const Family& family);

struct EffectScaleTable {
  CoefficientTable table;  // exp(estimate), exponentiated interval endpoints
  std::string note;
};

EffectScaleTable effect_scale(const FitResult& fit, const Family& family,
                              double level = 0.95);

}  // namespace abcreg
