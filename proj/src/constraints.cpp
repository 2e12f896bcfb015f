#include "abcreg/constraints.hpp"

#include <cmath>
#include <ostream>

#include "abcreg/errors.hpp"

namespace abcreg {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::ABC: return "abc";
    case Scheme::RGE: return "rge";
    case Scheme::STZ: return "stz";
  }
  return "";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "abc") return Scheme::ABC;
  if (s == "rge") return Scheme::RGE;
  if (s == "stz") return Scheme::STZ;
  throw DataError("unknown identification scheme '" + s + "'");
}

namespace {

int ref_level(const DesignMatrix& design, const std::string& cat,
              const std::map<std::string, std::string>& refs) {
  const Column& col = design.source->column(cat);
  auto it = refs.find(cat);
  if (it == refs.end()) return 0;  // first level by default
  for (std::size_t l = 0; l < col.levels.size(); ++l)
    if (col.levels[l] == it->second) return static_cast<int>(l);
  throw DataError("reference level " + cat + "=" + it->second +
                  " not found among data levels");
}

}  // namespace

ConstraintMatrix build_constraints(
    const DesignMatrix& design, const ProportionTable& props, Scheme scheme,
    const std::map<std::string, std::string>& rge_refs) {
  const ModelSpec& spec = design.spec;
  const long P = design.P();

  long m = 0;
  m += static_cast<long>(spec.categorical.size());
  m += static_cast<long>(spec.cat_cont.size());
  for (const auto& [a, b] : spec.cat_cat) {
    long La = static_cast<long>(design.source->column(a).levels.size());
    long Lb = static_cast<long>(design.source->column(b).levels.size());
    m += La + Lb - 1;
  }

  ConstraintMatrix out;
  out.scheme = scheme;
  out.A = Eigen::MatrixXd::Zero(m, P);
  if (scheme == Scheme::RGE) {
    for (const auto& cat : spec.categorical) {
      int r = ref_level(design, cat, rge_refs);
      out.rge_refs[cat] = design.source->column(cat).levels[r];
    }
  }
  long row = 0;

  auto weights_for = [&](const std::string& cat) -> Eigen::VectorXd {
    Eigen::VectorXd w = props.marginal(cat);
    for (int l = 0; l < w.size(); ++l)
      if (w[l] <= 0.0)
        throw DataError("zero marginal proportion for " + cat + "=" +
                        props.levels[props.var_index(cat)][l]);
    if (scheme == Scheme::STZ) w.setOnes();
    return w;
  };

  for (const auto& cat : spec.categorical) {
    std::vector<int> cols = design.columns_of(TermKind::CatMain, cat);
    if (scheme == Scheme::RGE) {
      out.A(row, cols[ref_level(design, cat, rge_refs)]) = 1.0;
    } else {
      Eigen::VectorXd w = weights_for(cat);
      for (std::size_t l = 0; l < cols.size(); ++l) out.A(row, cols[l]) = w[l];
    }
    out.row_tags.push_back(cat);
    ++row;
  }

  for (const auto& [x, cat] : spec.cat_cont) {
    std::vector<int> cols = design.columns_of(TermKind::CatCont, x, cat);
    if (scheme == Scheme::RGE) {
      out.A(row, cols[ref_level(design, cat, rge_refs)]) = 1.0;
    } else {
      Eigen::VectorXd w = weights_for(cat);
      for (std::size_t l = 0; l < cols.size(); ++l) out.A(row, cols[l]) = w[l];
    }
    out.row_tags.push_back(x + ":" + cat);
    ++row;
  }

  for (const auto& [a, b] : spec.cat_cat) {
    std::vector<int> cols = design.columns_of(TermKind::CatCat, a, b);
    const auto& la = design.source->column(a).levels;
    const auto& lb = design.source->column(b).levels;
    const long La = static_cast<long>(la.size());
    const long Lb = static_cast<long>(lb.size());
    auto col_at = [&](long i, long j) { return cols[i * Lb + j]; };

    if (scheme == Scheme::RGE) {
      const int ra = ref_level(design, a, rge_refs);
      const int rb = ref_level(design, b, rge_refs);
      for (long j = 0; j < Lb; ++j) {
        out.A(row, col_at(ra, j)) = 1.0;
        out.row_tags.push_back(a + ":" + b + "[" + a + "=" + la[ra] + "," + b +
                               "=" + lb[j] + "]");
        ++row;
      }
      for (long i = 0; i < La; ++i) {
        if (i == ra) continue;
        out.A(row, col_at(i, rb)) = 1.0;
        out.row_tags.push_back(a + ":" + b + "[" + a + "=" + la[i] + "," + b +
                               "=" + lb[rb] + "]");
        ++row;
      }
      continue;
    }

    Eigen::MatrixXd w;
    if (scheme == Scheme::STZ) {
      w = Eigen::MatrixXd::Ones(La, Lb);
    } else {
      w = props.pair_joint(props.var_index(a), props.var_index(b));
      for (long j = 0; j < Lb; ++j)
        if (w.col(j).sum() <= 0.0)
          throw DataError("zero conditioning mass for " + b + "=" + lb[j]);
      for (long i = 0; i < La; ++i)
        if (w.row(i).sum() <= 0.0)
          throw DataError("zero conditioning mass for " + a + "=" + la[i]);
    }
    // One row per level of b (averaging over a), then rows for levels
    // 2..La of a; the first a-level row is implied and omitted.
    for (long j = 0; j < Lb; ++j) {
      for (long i = 0; i < La; ++i) out.A(row, col_at(i, j)) = w(i, j);
      out.row_tags.push_back(a + ":" + b + "[" + b + "=" + lb[j] + "]");
      ++row;
    }
    for (long i = 1; i < La; ++i) {
      for (long j = 0; j < Lb; ++j) out.A(row, col_at(i, j)) = w(i, j);
      out.row_tags.push_back(a + ":" + b + "[" + a + "=" + la[i] + "]");
      ++row;
    }
  }

  return out;
}

NullspaceBasis nullspace_basis(const ConstraintMatrix& constraints, long P) {
  const long m = constraints.m();
  NullspaceBasis out;
  if (m == 0) {
    out.Q = Eigen::MatrixXd::Identity(P, P);
    return out;
  }
  if (constraints.A.cols() != P)
    throw NumericError("constraint matrix has wrong column count");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(constraints.A.transpose());
  Eigen::VectorXd diag = qr.matrixQR().diagonal().head(std::min(P, m));
  double dmax = diag.cwiseAbs().maxCoeff();
  long rank = 0;
  for (long i = 0; i < diag.size(); ++i)
    if (std::abs(diag[i]) > 1e-10 * dmax) ++rank;
  if (rank < m)
    throw NumericError("constraint matrix is rank deficient (rank " +
                       std::to_string(rank) + " < m = " + std::to_string(m) +
                       "); redundant or degenerate constraint rows");

  Eigen::MatrixXd Qfull =
      qr.householderQ() * Eigen::MatrixXd::Identity(P, P);
  out.Q = Qfull.rightCols(P - m);
  return out;
}

double check_satisfied(const Eigen::VectorXd& coefs,
                       const ConstraintMatrix& constraints) {
  if (constraints.m() == 0) return 0.0;
  if (coefs.size() != constraints.A.cols())
    throw NumericError("coefficient vector length " +
                       std::to_string(coefs.size()) +
                       " does not match constraint columns " +
                       std::to_string(constraints.A.cols()));
  return (constraints.A * coefs).cwiseAbs().maxCoeff();
}

void ConstraintMatrix::write_csv(std::ostream& os,
                                 const std::vector<Term>& terms) const {
  os << "row_tag";
  for (const auto& t : terms) os << "," << t.label();
  os << "\n";
  os.precision(17);
  for (long i = 0; i < A.rows(); ++i) {
    os << row_tags[i];
    for (long j = 0; j < A.cols(); ++j) os << "," << A(i, j);
    os << "\n";
  }
}

}  // namespace abcreg
