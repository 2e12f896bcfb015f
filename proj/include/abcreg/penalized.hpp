#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "abcreg/constraints.hpp"
#include "abcreg/data.hpp"

namespace abcreg {

enum class PenaltyKind { Lasso, Ridge };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::Lasso;
  double lambda = 0.0;
  // Penalized design columns; by default everything except the intercept.
  std::vector<bool> mask;

  static PenaltySpec make(PenaltyKind kind, double lambda,
                          const DesignMatrix& design);
};

enum class SelectionRule { Min, OneSE };

struct PathResult {
  std::vector<double> lambdas;  // descending; final entry is 0
  Eigen::MatrixXd coefs;        // one row per lambda, P columns
  std::vector<double> constraint_resid;

  bool has_cv = false;
  int folds = 0;
  SelectionRule rule = SelectionRule::OneSE;
  std::uint64_t seed = 0;
  Eigen::MatrixXd fold_errors;  // folds x lambdas
  Eigen::VectorXd cv_mean;
  Eigen::VectorXd cv_se;
  int idx_min = -1;
  int idx_1se = -1;
  double lambda_min = 0.0;
  double lambda_1se = 0.0;

  int selected_index(SelectionRule rule) const;
  void write_csv(std::ostream& os, const std::vector<Term>& terms) const;
};

// Solves min ||y - X theta||^2 + lambda P(theta) subject to A theta = 0.
// Ridge has a closed form in nullspace coordinates; lasso uses operator
// splitting (ADMM) with the theta-update an equality-constrained ridge
// solve and the z-update a soft threshold on the masked entries.
Eigen::VectorXd fit_penalized(const DesignMatrix& design,
                              const Eigen::VectorXd& y,
                              const ConstraintMatrix& constraints,
                              const PenaltySpec& penalty);

// Smallest lambda whose solution has an all-zero penalized block, from the
// subgradient condition at the constrained null fit.
double lambda_max(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const ConstraintMatrix& constraints,
                  const std::vector<bool>& mask);

// grid_size - 1 log-spaced points on [1e-4 * lambda_max, lambda_max] plus a
// terminal exact-zero point, fitted with warm starts from large to small.
PathResult solution_path(const DesignMatrix& design, const Eigen::VectorXd& y,
                         const ConstraintMatrix& constraints, PenaltyKind kind,
                         int grid_size);

// K-fold cross-validation on the solution_path grid. Folds come from a
// seeded permutation; each fold re-derives proportions, constraints, and
// centering/standardization from its own training rows, since ABCs are
// data-dependent.
PathResult cross_validate(const DesignMatrix& design, const Eigen::VectorXd& y,
                          const ConstraintMatrix& constraints, PenaltyKind kind,
                          int folds, SelectionRule rule, std::uint64_t seed,
                          int grid_size = 100);

// Fills idx_min / idx_1se / lambda_min / lambda_1se from cv_mean and cv_se.
void finalize_cv_selection(PathResult& path);

}  // namespace abcreg
