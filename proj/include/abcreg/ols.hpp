#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>

#include "abcreg/constraints.hpp"
#include "abcreg/data.hpp"
#include "abcreg/table.hpp"

namespace abcreg {

enum class InferenceKind { StudentT, Normal };

// Full-coordinate fit of an identification-constrained linear (or
// generalized linear) model. Coefficients live in the P-dimensional term
// space and satisfy A theta = 0; the reduced coordinates theta_Q and the
// nullspace basis Q are kept for downstream use.
struct FitResult {
  Eigen::VectorXd coef;          // P
  Eigen::VectorXd coef_reduced;  // P - m
  Eigen::MatrixXd Q;             // P x (P - m)
  Eigen::MatrixXd vcov;          // P x P
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double sigma2 = 0.0;  // unbiased residual variance (OLS / gaussian)
  long df_residual = 0;
  long d = 0;  // identified parameter count P - m
  long n = 0;
  double ybar = 0.0;
  Scheme scheme = Scheme::ABC;
  InferenceKind inference = InferenceKind::StudentT;
  std::string family;  // empty for plain OLS
  DesignMatrix design;
  ConstraintMatrix constraints;
  std::shared_ptr<const ProportionTable> props;

  double rss() const { return residuals.squaredNorm(); }
  const Eigen::VectorXd& coefficients() const { return coef; }
  int column_of(const Term& t) const;
  // Estimate / SE for a single design column.
  double estimate(int col) const { return coef[col]; }
  double se(int col) const;
};

FitResult fit_ols(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const ConstraintMatrix& constraints);

CoefficientTable summarize(const FitResult& fit, double level = 0.95);

Eigen::VectorXd predict(const FitResult& fit, const Dataset& newdata);

// alpha_j + sum_k gamma_{j,k,c_k} for a level assignment of every
// categorical that modifies x.
double group_specific_slope(const FitResult& fit, const std::string& x,
                            const std::map<std::string, std::string>& groups);

// Back-maps coefficients from the fitted (centered / standardized)
// covariate coordinates to the raw data scale. Constraint feasibility is
// preserved: the remapped vector still satisfies A theta = 0.
Eigen::VectorXd original_scale_coefficients(const DesignMatrix& design,
                                            const Eigen::VectorXd& coef);
Eigen::VectorXd to_original_scale(const FitResult& fit);

}  // namespace abcreg
