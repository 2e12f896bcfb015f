#include "abcreg/table.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace abcreg {

namespace {

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string term_kind_name(TermKind k) {
  switch (k) {
    case TermKind::Intercept: return "intercept";
    case TermKind::Continuous: return "continuous";
    case TermKind::CatMain: return "cat_main";
    case TermKind::CatCont: return "cat_cont";
    case TermKind::CatCat: return "cat_cat";
  }
  return "";
}

}  // namespace

std::string CoefficientTable::to_text() const {
  std::vector<std::string> est_col, p_col;
  est_col.reserve(rows.size());
  p_col.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.ref) {
      est_col.push_back("ref");
      p_col.push_back("ref");
    } else if (r.degenerate) {
      est_col.push_back(fmt3(r.estimate) + " (0.000)");
      p_col.push_back("deg");
    } else {
      est_col.push_back(fmt3(r.estimate) + " (" + fmt3(r.se) + ")");
      p_col.push_back(r.p < 0.001 ? "<0.001" : fmt3(r.p));
    }
  }
  std::size_t wlab = std::string("Variable").size();
  std::size_t west = std::string("Estimate (SE)").size();
  std::size_t wp = std::string("p-value").size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    wlab = std::max(wlab, rows[i].label.size());
    west = std::max(west, est_col[i].size());
    wp = std::max(wp, p_col[i].size());
  }
  std::ostringstream os;
  auto pad_right = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  auto pad_left = [](const std::string& s, std::size_t w) {
    return std::string(w - s.size(), ' ') + s;
  };
  os << pad_right("Variable", wlab) << "  " << pad_left("Estimate (SE)", west)
     << "  " << pad_left("p-value", wp) << "\n";
  os << std::string(wlab + west + wp + 4, '-') << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << pad_right(rows[i].label, wlab) << "  " << pad_left(est_col[i], west)
       << "  " << pad_left(p_col[i], wp) << "\n";
  }
  return os.str();
}

std::string CoefficientTable::to_csv() const {
  std::ostringstream os;
  os << "kind,variable,cat,level,cat2,level2,label,estimate,se,stat,p,lo,hi,"
        "ref\n";
  for (const auto& r : rows) {
    os << term_kind_name(r.term.kind) << "," << r.term.x << "," << r.term.cat
       << "," << r.term.level_label << "," << r.term.cat2 << ","
       << r.term.level2_label << "," << r.label << "," << fmt_full(r.estimate)
       << "," << fmt_full(r.se) << "," << fmt_full(r.stat) << ","
       << fmt_full(r.p) << "," << fmt_full(r.lo) << "," << fmt_full(r.hi)
       << "," << (r.ref ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace abcreg
