#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "abcreg/ols.hpp"

namespace abcreg {

// Per-group scale statistics for a continuous variable split by a
// categorical: n_r, group mean, and the scaled variance
// n_r^-1 sum_{r_i=r} x_i^2 - xbar_r^2.
struct GroupScaleStats {
  std::string x;
  std::string cat;
  std::vector<std::string> levels;
  Eigen::VectorXd count;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  double dispersion_ratio = 1.0;  // max variance / min variance
};

GroupScaleStats equal_variance_stats(const Dataset& data, const std::string& x,
                                     const std::string& cat);

struct GroupCovarianceStats {
  std::vector<std::string> xs;
  std::string cat;
  std::vector<std::string> levels;
  std::vector<Eigen::MatrixXd> covariance;  // per group, p x p
  double max_discrepancy = 0.0;  // max_{j,h,r} |cov_r - cov_first|
};

GroupCovarianceStats equal_covariance_stats(const Dataset& data,
                                            const std::vector<std::string>& xs,
                                            const std::string& cat);

// Per-group scaled covariance between x1 and the residuals of the
// auxiliary regression x1 ~ other continuous terms + cat.
struct PartialResidualStats {
  std::string x1;
  std::string cat;
  std::vector<std::string> levels;
  Eigen::VectorXd covariance;
  double max_discrepancy = 0.0;
};

PartialResidualStats partial_residual_covariance(const Dataset& data,
                                                 const ModelSpec& spec,
                                                 const std::string& x1,
                                                 const std::string& cat);

// Residual-variance comparison between nested fits: holds when the
// unbiased residual variance of the larger model does not exceed that of
// the smaller, equivalently when the reduction in residual sum of squares
// clears d / (n - d_main).
struct VarianceReductionVerdict {
  bool holds = false;
  double s2_main = 0.0;
  double s2_cm = 0.0;
  double lhs = 0.0;  // (rss_main - rss_cm) / rss_main
  double rhs = 0.0;  // d_added / (n - d_main)
  double margin = 0.0;
};

VarianceReductionVerdict variance_reduction_condition(const FitResult& main,
                                                      const FitResult& cm);

struct EffectComparison {
  Term term;
  std::string label;
  double est_main = 0.0, est_cm = 0.0, delta = 0.0;
  double se_main = 0.0, se_cm = 0.0, ratio = 1.0;
};

struct InvarianceReport {
  std::vector<EffectComparison> effects;
  VarianceReductionVerdict rv;
  std::vector<GroupScaleStats> variance_stats;
  std::optional<GroupCovarianceStats> covariance_stats;
  std::optional<PartialResidualStats> partial_stats;
  std::vector<std::string> notes;
  Scheme scheme_main = Scheme::ABC;
  Scheme scheme_cm = Scheme::ABC;

  std::string to_text() const;
  std::string to_csv() const;
};

// Compares shared main effects between nested fits and attaches the
// precondition statistics relevant to whichever interactions were added.
InvarianceReport compare_nested(const FitResult& main, const FitResult& cm,
                                bool allow_mixed_schemes = false);

}  // namespace abcreg
