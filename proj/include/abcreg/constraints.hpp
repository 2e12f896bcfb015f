#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "abcreg/data.hpp"

namespace abcreg {

enum class Scheme { ABC, RGE, STZ };

std::string scheme_name(Scheme s);
Scheme scheme_from_string(const std::string& s);

// m x P identification constraints aligned to a design layout. Every row
// touches the columns of a single term family:
//
//   ABC   categorical main k:     weights pi_{k,l} on beta_{k,l}
//         cat-cont pair (j,k):    weights pi_{k,l} on gamma_{j,k,l}
//         cat-cat pair (k,k'):    joint weights pi_{k,k',.,l'} for every
//                                 level l' of k', plus pi_{k,k',l,.} for
//                                 levels l = 2..L_k of k (the l = 1 row is
//                                 implied by the others and omitted)
//   RGE   pins each reference-level coefficient to zero
//   STZ   same row structure as ABC with unit weights
struct ConstraintMatrix {
  Eigen::MatrixXd A;
  Scheme scheme = Scheme::ABC;
  std::vector<std::string> row_tags;
  std::map<std::string, std::string> rge_refs;  // as resolved, for rebuilds

  long m() const { return A.rows(); }
  void write_csv(std::ostream& os, const std::vector<Term>& terms) const;
};

// Orthonormal basis of the nullspace of A, from the QR factorization of
// A^T: Q holds the trailing P - m columns of the orthogonal factor, so
// A Q = 0 and Q^T Q = I.
struct NullspaceBasis {
  Eigen::MatrixXd Q;  // P x (P - m)
};

ConstraintMatrix build_constraints(
    const DesignMatrix& design, const ProportionTable& props, Scheme scheme,
    const std::map<std::string, std::string>& rge_refs = {});

NullspaceBasis nullspace_basis(const ConstraintMatrix& constraints, long P);

// max_i |(A theta)_i|
double check_satisfied(const Eigen::VectorXd& coefs,
                       const ConstraintMatrix& constraints);

}  // namespace abcreg
