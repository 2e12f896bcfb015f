#pragma once

// Test-only oracles and data builders. These stay independent of the
// library's solve paths: the KKT oracle goes through a dense saddle-point
// system, the lasso oracle enumerates sign patterns, and the generators
// build datasets cell by cell.

#include <Eigen/Dense>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "abcreg/constraints.hpp"
#include "abcreg/data.hpp"
#include "abcreg/formula.hpp"

namespace testutil {

// Equality-constrained least squares via the Lagrangian saddle point:
// [X'X A'; A 0] [theta; nu] = [X'y; 0].
inline Eigen::VectorXd kkt_solve(const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& y,
                                 const Eigen::MatrixXd& A) {
  const long P = X.cols();
  const long m = A.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(P + m, P + m);
  K.topLeftCorner(P, P) = X.transpose() * X;
  if (m > 0) {
    K.topRightCorner(P, m) = A.transpose();
    K.bottomLeftCorner(m, P) = A;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P + m);
  rhs.head(P) = X.transpose() * y;
  Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
  return sol.head(P);
}

// Dataset with one categorical column built from explicit group sizes and
// per-group y values laid out group by group.
inline abcreg::Dataset grouped_dataset(
    const std::vector<std::vector<double>>& y_by_group,
    const std::vector<std::string>& levels) {
  std::vector<double> y;
  std::vector<int> codes;
  for (std::size_t g = 0; g < y_by_group.size(); ++g) {
    for (double v : y_by_group[g]) {
      y.push_back(v);
      codes.push_back(static_cast<int>(g));
    }
  }
  abcreg::Dataset d;
  d.add_continuous("y", std::move(y));
  d.add_categorical("g", std::move(codes), levels);
  return d;
}

// Random dataset with a mix of continuous and categorical columns; every
// categorical level (and, when requested, every joint cell of the first
// two categoricals) is guaranteed nonempty by construction.
struct RandomData {
  std::mt19937_64 eng;
  explicit RandomData(std::uint64_t seed) : eng(seed) {}

  double unif() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
  }
  double norm() { return std::normal_distribution<double>(0.0, 1.0)(eng); }
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(eng);
  }

  std::vector<int> codes(long n, int L, bool cover_all = true) {
    std::vector<int> c(n);
    for (long i = 0; i < n; ++i) c[i] = uniform_int(0, L - 1);
    if (cover_all)
      for (int l = 0; l < L; ++l) c[l] = l;  // force every level present
    return c;
  }

  // Codes for a pair of categoricals with every joint cell occupied.
  std::pair<std::vector<int>, std::vector<int>> joint_codes(long n, int La,
                                                            int Lb) {
    std::vector<int> a(n), b(n);
    long k = 0;
    for (int i = 0; i < La; ++i)
      for (int j = 0; j < Lb; ++j) {
        a[k] = i;
        b[k] = j;
        ++k;
      }
    for (; k < n; ++k) {
      a[k] = uniform_int(0, La - 1);
      b[k] = uniform_int(0, Lb - 1);
    }
    return {a, b};
  }

  std::vector<std::string> level_names(int L) {
    std::vector<std::string> out;
    for (int l = 0; l < L; ++l) out.push_back(std::string(1, 'A' + l));
    return out;
  }
};

inline double rel_err(double got, double want) {
  return std::abs(got - want) / (1.0 + std::abs(want));
}

// Rescales x within each group about its group mean so the scaled group
// variances are all exactly `target`.
inline void force_equal_group_variance(abcreg::Dataset& d,
                                       const std::string& x,
                                       const std::string& cat, double target) {
  const abcreg::Column& cc = d.column(cat);
  std::size_t xi = 0;
  for (std::size_t i = 0; i < d.names.size(); ++i)
    if (d.names[i] == x) xi = i;
  auto& xv = d.columns[xi].values;
  const long L = static_cast<long>(cc.levels.size());
  for (long l = 0; l < L; ++l) {
    double n = 0, mean = 0, ss = 0;
    for (long i = 0; i < d.n; ++i) {
      if (cc.codes[i] != l) continue;
      n += 1;
      mean += xv[i];
    }
    mean /= n;
    for (long i = 0; i < d.n; ++i) {
      if (cc.codes[i] != l) continue;
      ss += (xv[i] - mean) * (xv[i] - mean);
    }
    double sd = std::sqrt(ss / n);
    double k = std::sqrt(target) / sd;
    for (long i = 0; i < d.n; ++i) {
      if (cc.codes[i] != l) continue;
      xv[i] = mean + (xv[i] - mean) * k;
    }
  }
}

// Whitens the listed continuous columns within each group so every scaled
// group covariance matrix is exactly the identity.
inline void force_equal_group_covariance(abcreg::Dataset& d,
                                         const std::vector<std::string>& xs,
                                         const std::string& cat) {
  const abcreg::Column& cc = d.column(cat);
  const long p = static_cast<long>(xs.size());
  std::vector<std::vector<double>*> cols;
  for (const auto& x : xs)
    for (std::size_t i = 0; i < d.names.size(); ++i)
      if (d.names[i] == x) cols.push_back(&d.columns[i].values);
  const long L = static_cast<long>(cc.levels.size());
  for (long l = 0; l < L; ++l) {
    std::vector<long> rows;
    for (long i = 0; i < d.n; ++i)
      if (cc.codes[i] == l) rows.push_back(i);
    const long nr = static_cast<long>(rows.size());
    Eigen::MatrixXd U(nr, p);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p);
    for (long r = 0; r < nr; ++r)
      for (long j = 0; j < p; ++j) U(r, j) = (*cols[j])[rows[r]];
    mean = U.colwise().mean();
    U.rowwise() -= mean;
    Eigen::MatrixXd S = U.transpose() * U / static_cast<double>(nr);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    Eigen::MatrixXd Sinv_half =
        es.eigenvectors() *
        es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
        es.eigenvectors().transpose();
    Eigen::MatrixXd W = U * Sinv_half;
    for (long r = 0; r < nr; ++r)
      for (long j = 0; j < p; ++j) (*cols[j])[rows[r]] = W(r, j) + mean[j];
  }
}

// Builds (x1, x2, cat) data satisfying the partial-residual condition
// exactly: x1 = a*x2 + group shifts + e, where e is group-centered,
// orthogonal to x2 within every group, and rescaled to a common scaled
// variance.
inline abcreg::Dataset make_partial_residual_data(long n, int L,
                                                  std::uint64_t seed) {
  RandomData rd(seed);
  std::vector<int> codes = rd.codes(n, L);
  std::vector<double> x2(n), e(n);
  for (long i = 0; i < n; ++i) {
    x2[i] = rd.norm();
    e[i] = rd.norm();
  }
  // Project e orthogonal to {1, x2} within each group, then rescale to a
  // common scaled variance.
  for (int l = 0; l < L; ++l) {
    std::vector<long> rows;
    for (long i = 0; i < n; ++i)
      if (codes[i] == l) rows.push_back(i);
    double se = 0, sx = 0, sxx = 0, sex = 0;
    for (long i : rows) {
      se += e[i];
      sx += x2[i];
      sxx += x2[i] * x2[i];
      sex += e[i] * x2[i];
    }
    const double nr = static_cast<double>(rows.size());
    // residual of e on {1, x2} inside the group
    double det = nr * sxx - sx * sx;
    double b0 = (se * sxx - sx * sex) / det;
    double b1 = (nr * sex - se * sx) / det;
    double ss = 0;
    for (long i : rows) {
      e[i] -= b0 + b1 * x2[i];
      ss += e[i] * e[i];
    }
    double k = std::sqrt(0.5 / (ss / nr));
    for (long i : rows) e[i] *= k;
  }
  std::vector<double> x1(n), y(n);
  const double group_shift[] = {0.0, 1.0, -0.5, 2.0, -1.5};
  for (long i = 0; i < n; ++i) {
    x1[i] = 0.8 * x2[i] + group_shift[codes[i] % 5] + e[i];
    y[i] = 0.0;  // filled by callers
  }
  abcreg::Dataset d;
  d.add_continuous("y", std::move(y));
  d.add_continuous("x1", std::move(x1));
  d.add_continuous("x2", std::move(x2));
  d.add_categorical("C", std::move(codes), rd.level_names(L));
  return d;
}

}  // namespace testutil
