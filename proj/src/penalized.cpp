#include "abcreg/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "abcreg/errors.hpp"
#include "abcreg/ols.hpp"

namespace abcreg {

namespace {

constexpr int kAdmmMaxIter = 10000;
constexpr double kEpsAbs = 1e-12;
constexpr double kEpsRel = 1e-9;

std::vector<int> masked_indices(const std::vector<bool>& mask) {
  std::vector<int> out;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) out.push_back(static_cast<int>(j));
  return out;
}

// Rows of Q belonging to the penalized coordinates.
Eigen::MatrixXd penalized_rows(const Eigen::MatrixXd& Q,
                               const std::vector<int>& idx) {
  Eigen::MatrixXd B(idx.size(), Q.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) B.row(i) = Q.row(idx[i]);
  return B;
}

// Constrained least squares with the penalized block pinned to zero:
// minimize ||y - XQ w||^2 over w with B w = 0.
Eigen::VectorXd restricted_null_fit(const Eigen::MatrixXd& XQ,
                                    const Eigen::VectorXd& y,
                                    const Eigen::MatrixXd& B) {
  const long d = XQ.cols();
  if (B.rows() == 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XQ);
    return qr.solve(y);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrB(B.transpose());
  long rankB = qrB.rank();
  if (rankB >= d) return Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd QB =
      qrB.householderQ() * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd N = QB.rightCols(d - rankB);  // null(B)
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XQ * N);
  return N * qr.solve(y);
}

struct AdmmWorkspace {
  // Eigendecomposition of XQ'XQ: solves (XQ'XQ + rho I)^-1 for any rho.
  Eigen::MatrixXd V;
  Eigen::VectorXd evals;
  Eigen::VectorXd Xty;

  explicit AdmmWorkspace(const Eigen::MatrixXd& XQ, const Eigen::VectorXd& y) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(XQ.transpose() * XQ);
    V = es.eigenvectors();
    evals = es.eigenvalues();
    Xty = XQ.transpose() * y;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double rho) const {
    Eigen::VectorXd t = V.transpose() * rhs;
    for (long i = 0; i < t.size(); ++i) t[i] /= (evals[i] + rho);
    return V * t;
  }
};

double soft(double v, double k) {
  if (v > k) return v - k;
  if (v < -k) return v + k;
  return 0.0;
}

// ADMM on min 1/2||y - XQ w||^2 + lambda ||M Q w||_1 with splitting
// theta = Q w, z = theta.
Eigen::VectorXd admm_lasso(const Eigen::MatrixXd& XQ, const Eigen::MatrixXd& Q,
                           const std::vector<bool>& mask, double lambda,
                           const AdmmWorkspace& ws,
                           const Eigen::VectorXd* warm_w) {
  const long d = XQ.cols();
  const long P = Q.rows();
  double rho = 1.0;
  Eigen::VectorXd w = warm_w ? *warm_w : Eigen::VectorXd::Zero(d);
  Eigen::VectorXd theta = Q * w;
  Eigen::VectorXd z = theta;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(P);

  for (int iter = 0; iter < kAdmmMaxIter; ++iter) {
    // w-update: (XQ'XQ + rho I) w = XQ'y + rho Q'(z - u)
    w = ws.solve(ws.Xty + rho * (Q.transpose() * (z - u)), rho);
    theta = Q * w;
    Eigen::VectorXd z_prev = z;
    for (long j = 0; j < P; ++j) {
      double v = theta[j] + u[j];
      z[j] = mask[j] ? soft(v, lambda / rho) : v;
    }
    u += theta - z;

    double r_norm = (theta - z).norm();
    double s_norm = rho * (Q.transpose() * (z - z_prev)).norm();
    double eps_pri = std::sqrt(static_cast<double>(P)) * kEpsAbs +
                     kEpsRel * std::max(theta.norm(), z.norm());
    double eps_dual = std::sqrt(static_cast<double>(d)) * kEpsAbs +
                      kEpsRel * rho * (Q.transpose() * u).norm();
    if (r_norm < eps_pri && s_norm < eps_dual) return w;

    if (r_norm > 10.0 * s_norm) {
      rho *= 2.0;
      u *= 0.5;
    } else if (s_norm > 10.0 * r_norm) {
      rho *= 0.5;
      u *= 2.0;
    }
  }
  throw NumericError("lasso splitting did not converge in " +
                     std::to_string(kAdmmMaxIter) + " iterations");
}

Eigen::VectorXd ridge_reduced(const Eigen::MatrixXd& XQ,
                              const Eigen::MatrixXd& Q,
                              const Eigen::VectorXd& y,
                              const std::vector<bool>& mask, double lambda) {
  // Augmented least squares: stack sqrt(lambda) * (penalized rows of Q).
  std::vector<int> idx = masked_indices(mask);
  const long d = XQ.cols();
  Eigen::MatrixXd aug(XQ.rows() + static_cast<long>(idx.size()), d);
  aug.topRows(XQ.rows()) = XQ;
  Eigen::MatrixXd B = penalized_rows(Q, idx);
  aug.bottomRows(B.rows()) = std::sqrt(lambda) * B;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(aug.rows());
  rhs.head(y.size()) = y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
  return qr.solve(rhs);
}

}  // namespace

PenaltySpec PenaltySpec::make(PenaltyKind kind, double lambda,
                              const DesignMatrix& design) {
  PenaltySpec out;
  out.kind = kind;
  out.lambda = lambda;
  out.mask.assign(design.terms.size(), true);
  for (std::size_t j = 0; j < design.terms.size(); ++j)
    if (design.terms[j].kind == TermKind::Intercept) out.mask[j] = false;
  return out;
}

Eigen::VectorXd fit_penalized(const DesignMatrix& design,
                              const Eigen::VectorXd& y,
                              const ConstraintMatrix& constraints,
                              const PenaltySpec& penalty) {
  if (penalty.lambda < 0.0) throw NumericError("negative lambda");
  if (penalty.mask.size() != static_cast<std::size_t>(design.P()))
    throw NumericError("penalty mask has wrong length");
  if (penalty.lambda == 0.0)
    return fit_ols(design, y, constraints).coef;

  NullspaceBasis basis = nullspace_basis(constraints, design.P());
  Eigen::MatrixXd XQ = design.X * basis.Q;
  if (penalty.kind == PenaltyKind::Ridge)
    return basis.Q * ridge_reduced(XQ, basis.Q, y, penalty.mask,
                                   penalty.lambda);
  AdmmWorkspace ws(XQ, y);
  Eigen::VectorXd w =
      admm_lasso(XQ, basis.Q, penalty.mask, penalty.lambda, ws, nullptr);
  return basis.Q * w;
}

double lambda_max(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const ConstraintMatrix& constraints,
                  const std::vector<bool>& mask) {
  NullspaceBasis basis = nullspace_basis(constraints, design.P());
  Eigen::MatrixXd XQ = design.X * basis.Q;
  std::vector<int> idx = masked_indices(mask);
  if (idx.empty()) return 0.0;
  Eigen::MatrixXd B = penalized_rows(basis.Q, idx);
  Eigen::VectorXd w0 = restricted_null_fit(XQ, y, B);
  Eigen::VectorXd c = XQ.transpose() * (y - XQ * w0);
  // Stationarity at the null fit needs B' h = c with |h|_inf <= lambda;
  // the least-norm solution gives a lambda at which the zero block is
  // certainly optimal.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B.transpose());
  Eigen::VectorXd h = cod.solve(c);
  return h.cwiseAbs().maxCoeff();
}

PathResult solution_path(const DesignMatrix& design, const Eigen::VectorXd& y,
                         const ConstraintMatrix& constraints, PenaltyKind kind,
                         int grid_size) {
  if (grid_size < 2) throw NumericError("grid size must be at least 2");
  double ymean = y.mean();
  double yvar = (y.array() - ymean).square().sum();
  if (yvar <= 0.0) throw NumericError("degenerate response: zero variance");

  PenaltySpec base = PenaltySpec::make(kind, 0.0, design);
  double lmax = lambda_max(design, y, constraints, base.mask);

  PathResult out;
  out.lambdas.reserve(grid_size);
  if (lmax <= 0.0) {
    out.lambdas.assign(grid_size, 0.0);
  } else {
    double lo = std::log(1e-4 * lmax), hi = std::log(lmax);
    for (int g = 0; g < grid_size - 1; ++g) {
      double t = (grid_size <= 2)
                     ? 0.0
                     : static_cast<double>(g) / (grid_size - 2);
      out.lambdas.push_back(std::exp(hi + t * (lo - hi)));
    }
    out.lambdas.push_back(0.0);
  }

  NullspaceBasis basis = nullspace_basis(constraints, design.P());
  Eigen::MatrixXd XQ = design.X * basis.Q;
  AdmmWorkspace ws(XQ, y);
  out.coefs.resize(static_cast<long>(out.lambdas.size()), design.P());
  out.constraint_resid.resize(out.lambdas.size());

  Eigen::VectorXd warm = Eigen::VectorXd::Zero(basis.Q.cols());
  bool have_warm = false;
  for (std::size_t g = 0; g < out.lambdas.size(); ++g) {
    double lambda = out.lambdas[g];
    Eigen::VectorXd w;
    if (lambda == 0.0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XQ);
      w = qr.solve(y);
    } else if (kind == PenaltyKind::Ridge) {
      w = ridge_reduced(XQ, basis.Q, y, base.mask, lambda);
    } else {
      w = admm_lasso(XQ, basis.Q, base.mask, lambda, ws,
                     have_warm ? &warm : nullptr);
    }
    warm = w;
    have_warm = true;
    Eigen::VectorXd theta = basis.Q * w;
    out.coefs.row(static_cast<long>(g)) = theta.transpose();
    out.constraint_resid[g] = check_satisfied(theta, constraints);
  }
  return out;
}

int PathResult::selected_index(SelectionRule rule) const {
  return rule == SelectionRule::Min ? idx_min : idx_1se;
}

PathResult cross_validate(const DesignMatrix& design, const Eigen::VectorXd& y,
                          const ConstraintMatrix& constraints, PenaltyKind kind,
                          int folds, SelectionRule rule, std::uint64_t seed,
                          int grid_size) {
  const long n = design.X.rows();
  if (folds < 2) throw NumericError("need at least 2 folds");
  if (n < folds) throw NumericError("more folds than observations");

  PathResult path = solution_path(design, y, constraints, kind, grid_size);
  const int G = static_cast<int>(path.lambdas.size());

  // Seeded permutation, then round-robin assignment for balanced folds.
  std::vector<long> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 eng(seed);
  std::shuffle(perm.begin(), perm.end(), eng);
  std::vector<int> fold_of(n);
  for (long i = 0; i < n; ++i) fold_of[perm[i]] = static_cast<int>(i % folds);

  path.has_cv = true;
  path.folds = folds;
  path.rule = rule;
  path.seed = seed;
  path.fold_errors = Eigen::MatrixXd::Zero(folds, G);

  const Dataset& full = *design.source;
  for (int f = 0; f < folds; ++f) {
    std::vector<long> train_rows, test_rows;
    for (long i = 0; i < n; ++i)
      (fold_of[i] == f ? test_rows : train_rows).push_back(i);

    Dataset train = full.subset(train_rows);
    Eigen::VectorXd y_train(train_rows.size()), y_test(test_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i)
      y_train[static_cast<long>(i)] = y[train_rows[i]];
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      y_test[static_cast<long>(i)] = y[test_rows[i]];

    // Re-derive the whole pipeline from the training rows: transforms,
    // proportions, and constraints all depend on the data.
    std::map<std::string, double> fold_centers, fold_scales;
    Dataset train_t = train;
    if (design.centered || design.standardized) {
      try {
        CenterResult cr = center_continuous(train, design.spec.continuous,
                                            design.standardized);
        train_t = std::move(cr.data);
        fold_centers = std::move(cr.centers);
        fold_scales = std::move(cr.scales);
      } catch (const DataError& e) {
        throw DataError("fold " + std::to_string(f + 1) + ": " + e.what());
      }
    }
    DesignMatrix dtrain;
    ConstraintMatrix ctrain;
    try {
      dtrain = build_design(design.spec, train_t);
      dtrain.centers = fold_centers;
      dtrain.scales = fold_scales;
      dtrain.centered = design.centered;
      dtrain.standardized = design.standardized;
      if (design.spec.categorical.empty()) {
        ctrain.scheme = constraints.scheme;
        ctrain.A = Eigen::MatrixXd::Zero(0, dtrain.P());
      } else {
        ProportionTable props =
            compute_proportions(train_t, design.spec.categorical);
        ctrain = build_constraints(dtrain, props, constraints.scheme,
                                   constraints.rge_refs);
      }
    } catch (const std::runtime_error& e) {
      throw DataError("fold " + std::to_string(f + 1) + ": " + e.what());
    }

    NullspaceBasis basis = nullspace_basis(ctrain, dtrain.P());
    Eigen::MatrixXd XQ = dtrain.X * basis.Q;
    AdmmWorkspace ws(XQ, y_train);
    PenaltySpec base = PenaltySpec::make(kind, 0.0, dtrain);

    Dataset test = full.subset(test_rows);
    Eigen::MatrixXd test_rows_X = build_rows(dtrain, test);

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(basis.Q.cols());
    bool have_warm = false;
    for (int g = 0; g < G; ++g) {
      double lambda = path.lambdas[static_cast<std::size_t>(g)];
      Eigen::VectorXd w;
      if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XQ);
        w = qr.solve(y_train);
      } else if (kind == PenaltyKind::Ridge) {
        w = ridge_reduced(XQ, basis.Q, y_train, base.mask, lambda);
      } else {
        w = admm_lasso(XQ, basis.Q, base.mask, lambda, ws,
                       have_warm ? &warm : nullptr);
      }
      warm = w;
      have_warm = true;
      Eigen::VectorXd pred = test_rows_X * (basis.Q * w);
      path.fold_errors(f, g) =
          (y_test - pred).squaredNorm() / static_cast<double>(y_test.size());
    }
  }

  path.cv_mean = path.fold_errors.colwise().mean();
  path.cv_se.resize(G);
  for (int g = 0; g < G; ++g) {
    double m = path.cv_mean[g];
    double ss = (path.fold_errors.col(g).array() - m).square().sum();
    double sd = std::sqrt(ss / static_cast<double>(folds - 1));
    path.cv_se[g] = sd / std::sqrt(static_cast<double>(folds));
  }
  finalize_cv_selection(path);
  return path;
}

void finalize_cv_selection(PathResult& path) {
  const int G = static_cast<int>(path.lambdas.size());
  path.idx_min = 0;
  for (int g = 1; g < G; ++g)
    if (path.cv_mean[g] < path.cv_mean[path.idx_min]) path.idx_min = g;
  double cutoff = path.cv_mean[path.idx_min] + path.cv_se[path.idx_min];
  path.idx_1se = path.idx_min;
  for (int g = 0; g < G; ++g) {
    if (path.cv_mean[g] <= cutoff) {
      path.idx_1se = g;  // lambdas descend, so the first hit is the largest
      break;
    }
  }
  path.lambda_min = path.lambdas[static_cast<std::size_t>(path.idx_min)];
  path.lambda_1se = path.lambdas[static_cast<std::size_t>(path.idx_1se)];
}

void PathResult::write_csv(std::ostream& os,
                           const std::vector<Term>& terms) const {
  os.precision(17);
  os << "lambda";
  if (has_cv) os << ",cv_mean,cv_se";
  os << ",constraint_resid";
  for (const auto& t : terms) os << "," << t.label();
  os << "\n";
  for (std::size_t g = 0; g < lambdas.size(); ++g) {
    os << lambdas[g];
    if (has_cv) os << "," << cv_mean[static_cast<long>(g)] << ","
                   << cv_se[static_cast<long>(g)];
    os << "," << constraint_resid[g];
    for (long j = 0; j < coefs.cols(); ++j)
      os << "," << coefs(static_cast<long>(g), j);
    os << "\n";
  }
}

}  // namespace abcreg
