#pragma once

#include <string>
#include <vector>

#include "abcreg/data.hpp"

namespace abcreg {

struct CoefficientRow {
  Term term;
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
  double stat = 0.0;  // t or z
  double p = 1.0;
  double lo = 0.0;
  double hi = 0.0;
  bool ref = false;         // RGE reference row
  bool degenerate = false;  // zero SE; no sampling distribution reported
};

// Per-coefficient inference summary. Text layout mirrors lm-style output
// with columns Variable / Estimate (SE) / p-value; RGE reference rows
// print "ref". CSV carries full precision.
struct CoefficientTable {
  std::vector<CoefficientRow> rows;
  double level = 0.95;
  long df = -1;  // Student-t df; -1 means normal reference

  std::string to_text() const;
  std::string to_csv() const;
};

}  // namespace abcreg
