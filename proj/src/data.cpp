#include "abcreg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "abcreg/errors.hpp"

namespace abcreg {

const Column& Dataset::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  throw DataError("no such column '" + name + "'");
}

bool Dataset::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

Schema Dataset::schema() const {
  Schema s;
  for (std::size_t i = 0; i < names.size(); ++i)
    s[names[i]] = columns[i].kind;
  return s;
}

Dataset Dataset::subset(const std::vector<long>& rows) const {
  Dataset out;
  out.n = static_cast<long>(rows.size());
  out.names = names;
  out.columns.reserve(columns.size());
  for (const auto& col : columns) {
    Column c;
    c.kind = col.kind;
    c.levels = col.levels;
    if (col.kind == ColumnKind::Continuous) {
      c.values.reserve(rows.size());
      for (long r : rows) c.values.push_back(col.values[r]);
    } else {
      c.codes.reserve(rows.size());
      for (long r : rows) c.codes.push_back(col.codes[r]);
    }
    out.columns.push_back(std::move(c));
  }
  return out;
}

void Dataset::add_continuous(const std::string& name, std::vector<double> v) {
  if (!columns.empty() && static_cast<long>(v.size()) != n)
    throw DataError("column '" + name + "' has wrong length");
  n = static_cast<long>(v.size());
  names.push_back(name);
  Column c;
  c.kind = ColumnKind::Continuous;
  c.values = std::move(v);
  columns.push_back(std::move(c));
}

void Dataset::add_categorical(const std::string& name, std::vector<int> codes,
                              std::vector<std::string> levels) {
  if (!columns.empty() && static_cast<long>(codes.size()) != n)
    throw DataError("column '" + name + "' has wrong length");
  n = static_cast<long>(codes.size());
  names.push_back(name);
  Column c;
  c.kind = ColumnKind::Categorical;
  c.codes = std::move(codes);
  c.levels = std::move(levels);
  columns.push_back(std::move(c));
}

// ---------------------------------------------------------------------------
// CSV loading

namespace {

bool parse_real(const std::string& s, double& out) {
  const char* p = s.c_str();
  char* end = nullptr;
  out = std::strtod(p, &end);
  return end != p && *end == '\0' && std::isfinite(out);
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA"; }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

Dataset load_table(std::istream& in,
                   const std::map<std::string, ColumnKind>& hints) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file");
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);
  const std::size_t ncol = header.size();
  if (ncol == 0 || (ncol == 1 && header[0].empty()))
    throw DataError("empty file");

  std::vector<std::vector<std::string>> cells(ncol);
  long n = 0;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.eof()) break;
    std::vector<std::string> row = split_line(line);
    if (row.size() != ncol)
      throw DataError("ragged row at line " + std::to_string(lineno) +
                      ": expected " + std::to_string(ncol) + " fields, got " +
                      std::to_string(row.size()));
    for (std::size_t j = 0; j < ncol; ++j) {
      std::string v = trim(row[j]);
      if (is_missing(v))
        throw DataError("missing value at line " + std::to_string(lineno) +
                        ", column '" + header[j] + "'");
      cells[j].push_back(std::move(v));
    }
    ++n;
  }
  if (n == 0) throw DataError("empty file");

  Dataset out;
  out.n = n;
  for (std::size_t j = 0; j < ncol; ++j) {
    std::vector<double> reals(n);
    bool numeric = true;
    for (long i = 0; i < n; ++i) {
      if (!parse_real(cells[j][i], reals[i])) {
        numeric = false;
        break;
      }
    }
    ColumnKind kind = numeric ? ColumnKind::Continuous : ColumnKind::Categorical;
    auto hint = hints.find(header[j]);
    if (hint != hints.end()) {
      if (hint->second == ColumnKind::Continuous && !numeric)
        throw DataError("column '" + header[j] +
                        "' hinted continuous but contains non-numeric cells");
      kind = hint->second;
    }
    if (kind == ColumnKind::Continuous) {
      out.add_continuous(header[j], std::move(reals));
    } else {
      std::vector<std::string> levels;
      std::map<std::string, int> index;
      std::vector<int> codes(n);
      for (long i = 0; i < n; ++i) {
        auto it = index.find(cells[j][i]);
        if (it == index.end()) {
          it = index.emplace(cells[j][i], static_cast<int>(levels.size())).first;
          levels.push_back(cells[j][i]);
        }
        codes[i] = it->second;
      }
      out.add_categorical(header[j], std::move(codes), std::move(levels));
    }
  }
  return out;
}

Dataset load_csv_file(const std::string& path,
                      const std::map<std::string, ColumnKind>& hints) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_table(in, hints);
}

// ---------------------------------------------------------------------------
// Proportions

int ProportionTable::var_index(const std::string& name) const {
  for (std::size_t k = 0; k < vars.size(); ++k)
    if (vars[k] == name) return static_cast<int>(k);
  throw DataError("proportion table has no variable '" + name + "'");
}

std::size_t ProportionTable::cells() const {
  std::size_t c = 1;
  for (const auto& lv : levels) c *= lv.size();
  return c;
}

Eigen::VectorXd ProportionTable::marginal(int k) const {
  const std::size_t K = vars.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(levels[k].size());
  std::vector<int> idx(K, 0);
  for (std::size_t cell = 0; cell < joint.size(); ++cell) {
    out[idx[k]] += joint[cell];
    for (std::size_t d = K; d-- > 0;) {
      if (++idx[d] < static_cast<int>(levels[d].size())) break;
      idx[d] = 0;
    }
  }
  return out;
}

Eigen::VectorXd ProportionTable::marginal(const std::string& var) const {
  return marginal(var_index(var));
}

Eigen::MatrixXd ProportionTable::pair_joint(int k, int k2) const {
  const std::size_t K = vars.size();
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(levels[k].size(), levels[k2].size());
  std::vector<int> idx(K, 0);
  for (std::size_t cell = 0; cell < joint.size(); ++cell) {
    out(idx[k], idx[k2]) += joint[cell];
    for (std::size_t d = K; d-- > 0;) {
      if (++idx[d] < static_cast<int>(levels[d].size())) break;
      idx[d] = 0;
    }
  }
  return out;
}

Eigen::VectorXd ProportionTable::conditional(int k, int k2, int l2) const {
  Eigen::MatrixXd pj = pair_joint(k, k2);
  double mass = pj.col(l2).sum();
  if (mass <= 0.0)
    throw DataError("conditioning cell " + vars[k2] + "=" +
                    levels[k2][l2] + " has zero mass");
  return pj.col(l2) / mass;
}

ProportionTable compute_proportions(const Dataset& data,
                                    const std::vector<std::string>& cats) {
  if (cats.empty()) throw DataError("no categorical variables given");
  ProportionTable out;
  out.vars = cats;
  out.n = data.n;
  out.source = ProportionTable::Source::Sample;
  std::vector<const Column*> cols;
  for (const auto& name : cats) {
    const Column& c = data.column(name);
    if (c.kind != ColumnKind::Categorical)
      throw DataError("variable '" + name + "' is not categorical");
    cols.push_back(&c);
    out.levels.push_back(c.levels);
  }
  out.joint.assign(out.cells(), 0.0);
  for (long i = 0; i < data.n; ++i) {
    std::size_t cell = 0;
    for (std::size_t k = 0; k < cols.size(); ++k)
      cell = cell * cols[k]->levels.size() + cols[k]->codes[i];
    out.joint[cell] += 1.0;
  }
  for (double& p : out.joint) p /= static_cast<double>(data.n);
  for (std::size_t k = 0; k < cats.size(); ++k) {
    Eigen::VectorXd m = out.marginal(static_cast<int>(k));
    for (int l = 0; l < m.size(); ++l)
      if (m[l] <= 0.0)
        throw DataError("empty level " + cats[k] + "=" + out.levels[k][l]);
  }
  return out;
}

ProportionTable population_proportions(
    std::vector<std::string> vars, std::vector<std::vector<std::string>> levels,
    std::vector<double> joint) {
  ProportionTable out;
  out.vars = std::move(vars);
  out.levels = std::move(levels);
  out.joint = std::move(joint);
  out.source = ProportionTable::Source::Population;
  if (out.joint.size() != out.cells())
    throw DataError("joint proportion table has wrong size");
  double total = std::accumulate(out.joint.begin(), out.joint.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12)
    throw DataError("joint proportions sum to " + std::to_string(total));
  for (double p : out.joint)
    if (p < 0.0) throw DataError("negative proportion");
  return out;
}

// ---------------------------------------------------------------------------
// Centering

CenterResult center_continuous(const Dataset& data,
                               const std::vector<std::string>& vars,
                               bool standardize) {
  CenterResult out;
  out.data = data;
  for (const auto& name : vars) {
    const Column& src = data.column(name);
    if (src.kind != ColumnKind::Continuous)
      throw DataError("variable '" + name + "' is not continuous");
    double mean =
        std::accumulate(src.values.begin(), src.values.end(), 0.0) /
        static_cast<double>(data.n);
    double scale = 1.0;
    if (standardize) {
      double ss = 0.0;
      for (double v : src.values) ss += (v - mean) * (v - mean);
      double sd = (data.n > 1) ? std::sqrt(ss / static_cast<double>(data.n - 1))
                               : 0.0;
      if (sd <= 0.0)
        throw DataError("zero-variance column '" + name +
                        "' cannot be standardized");
      scale = sd;
    }
    for (std::size_t i = 0; i < data.columns.size(); ++i) {
      if (data.names[i] != name) continue;
      for (double& v : out.data.columns[i].values) v = (v - mean) / scale;
    }
    out.centers[name] = mean;
    out.scales[name] = scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Design matrix

bool Term::operator==(const Term& o) const {
  return kind == o.kind && x == o.x && cat == o.cat && cat2 == o.cat2 &&
         level_label == o.level_label && level2_label == o.level2_label;
}

std::string Term::label() const {
  switch (kind) {
    case TermKind::Intercept: return "Intercept";
    case TermKind::Continuous: return x;
    case TermKind::CatMain: return level_label;
    case TermKind::CatCont: return x + ":" + level_label;
    case TermKind::CatCat: return level_label + ":" + level2_label;
  }
  return "";
}

std::vector<int> DesignMatrix::columns_of(TermKind kind, const std::string& a,
                                          const std::string& b) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const Term& t = terms[j];
    if (t.kind != kind) continue;
    switch (kind) {
      case TermKind::Continuous:
        if (t.x == a) out.push_back(static_cast<int>(j));
        break;
      case TermKind::CatMain:
        if (t.cat == a) out.push_back(static_cast<int>(j));
        break;
      case TermKind::CatCont:
        if (t.x == a && t.cat == b) out.push_back(static_cast<int>(j));
        break;
      case TermKind::CatCat:
        if (t.cat == a && t.cat2 == b) out.push_back(static_cast<int>(j));
        break;
      case TermKind::Intercept:
        out.push_back(static_cast<int>(j));
        break;
    }
  }
  return out;
}

namespace {

// Column layout shared by build_design and build_rows. `getters` resolve
// values per row: continuous value, categorical code.
struct DesignLayout {
  std::vector<Term> terms;
};

DesignLayout make_layout(const ModelSpec& spec, const Dataset& data) {
  if (!spec.resolved) throw DesignError("model spec is not validated");
  DesignLayout lay;
  Term t0;
  t0.kind = TermKind::Intercept;
  lay.terms.push_back(t0);
  for (const auto& x : spec.continuous) {
    Term t;
    t.kind = TermKind::Continuous;
    t.x = x;
    lay.terms.push_back(t);
  }
  for (const auto& c : spec.categorical) {
    const Column& col = data.column(c);
    for (std::size_t l = 0; l < col.levels.size(); ++l) {
      Term t;
      t.kind = TermKind::CatMain;
      t.cat = c;
      t.level = static_cast<int>(l);
      t.level_label = col.levels[l];
      lay.terms.push_back(t);
    }
  }
  for (const auto& [x, c] : spec.cat_cont) {
    const Column& col = data.column(c);
    for (std::size_t l = 0; l < col.levels.size(); ++l) {
      Term t;
      t.kind = TermKind::CatCont;
      t.x = x;
      t.cat = c;
      t.level = static_cast<int>(l);
      t.level_label = col.levels[l];
      lay.terms.push_back(t);
    }
  }
  for (const auto& [a, b] : spec.cat_cat) {
    const Column& ca = data.column(a);
    const Column& cb = data.column(b);
    for (std::size_t la = 0; la < ca.levels.size(); ++la) {
      for (std::size_t lb = 0; lb < cb.levels.size(); ++lb) {
        Term t;
        t.kind = TermKind::CatCat;
        t.cat = a;
        t.cat2 = b;
        t.level = static_cast<int>(la);
        t.level2 = static_cast<int>(lb);
        t.level_label = ca.levels[la];
        t.level2_label = cb.levels[lb];
        lay.terms.push_back(t);
      }
    }
  }
  return lay;
}

Eigen::MatrixXd fill_design(const std::vector<Term>& terms,
                            const Dataset& data) {
  const long n = data.n;
  Eigen::MatrixXd X(n, static_cast<long>(terms.size()));
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const Term& t = terms[j];
    switch (t.kind) {
      case TermKind::Intercept:
        X.col(j).setOnes();
        break;
      case TermKind::Continuous: {
        const Column& c = data.column(t.x);
        for (long i = 0; i < n; ++i) X(i, j) = c.values[i];
        break;
      }
      case TermKind::CatMain: {
        const Column& c = data.column(t.cat);
        for (long i = 0; i < n; ++i)
          X(i, j) = (c.codes[i] == t.level) ? 1.0 : 0.0;
        break;
      }
      case TermKind::CatCont: {
        const Column& cx = data.column(t.x);
        const Column& cc = data.column(t.cat);
        for (long i = 0; i < n; ++i)
          X(i, j) = (cc.codes[i] == t.level) ? cx.values[i] : 0.0;
        break;
      }
      case TermKind::CatCat: {
        const Column& ca = data.column(t.cat);
        const Column& cb = data.column(t.cat2);
        for (long i = 0; i < n; ++i)
          X(i, j) =
              (ca.codes[i] == t.level && cb.codes[i] == t.level2) ? 1.0 : 0.0;
        break;
      }
    }
  }
  return X;
}

}  // namespace

DesignMatrix build_design(const ModelSpec& spec, const Dataset& data) {
  for (const auto& c : spec.categorical) {
    const Column& col = data.column(c);
    if (col.kind != ColumnKind::Categorical)
      throw DesignError("variable '" + c + "' is not categorical");
    std::vector<long> counts(col.levels.size(), 0);
    for (int code : col.codes) ++counts[code];
    for (std::size_t l = 0; l < counts.size(); ++l)
      if (counts[l] == 0)
        throw DesignError("empty level " + c + "=" + col.levels[l]);
  }
  // Cat-cat interactions additionally require every joint cell nonempty,
  // otherwise the constrained OLS estimates are not unique.
  for (const auto& [a, b] : spec.cat_cat) {
    const Column& ca = data.column(a);
    const Column& cb = data.column(b);
    std::vector<long> counts(ca.levels.size() * cb.levels.size(), 0);
    for (long i = 0; i < data.n; ++i)
      ++counts[ca.codes[i] * cb.levels.size() + cb.codes[i]];
    for (std::size_t la = 0; la < ca.levels.size(); ++la)
      for (std::size_t lb = 0; lb < cb.levels.size(); ++lb)
        if (counts[la * cb.levels.size() + lb] == 0)
          throw DesignError("empty joint cell " + a + "=" + ca.levels[la] +
                            ", " + b + "=" + cb.levels[lb]);
  }

  DesignMatrix out;
  out.spec = spec;
  out.terms = make_layout(spec, data).terms;
  out.X = fill_design(out.terms, data);
  out.source = std::make_shared<Dataset>(data);
  return out;
}

Eigen::MatrixXd build_rows(const DesignMatrix& train, const Dataset& newdata) {
  // Transform continuous variables with the stored centers/scales and
  // re-code categoricals against the training levels.
  Dataset prepared;
  prepared.n = newdata.n;
  const Dataset& ref = *train.source;
  for (const auto& name : train.spec.continuous) {
    const Column& c = newdata.column(name);
    if (c.kind != ColumnKind::Continuous)
      throw DataError("variable '" + name + "' is not continuous in new data");
    std::vector<double> v = c.values;
    auto itc = train.centers.find(name);
    double center = (itc != train.centers.end()) ? itc->second : 0.0;
    auto its = train.scales.find(name);
    double scale = (its != train.scales.end()) ? its->second : 1.0;
    for (double& x : v) x = (x - center) / scale;
    prepared.add_continuous(name, std::move(v));
  }
  for (const auto& name : train.spec.categorical) {
    const Column& c = newdata.column(name);
    const Column& rc = ref.column(name);
    std::vector<int> codes(newdata.n);
    if (c.kind != ColumnKind::Categorical)
      throw DataError("variable '" + name + "' is not categorical in new data");
    std::map<std::string, int> index;
    for (std::size_t l = 0; l < rc.levels.size(); ++l)
      index[rc.levels[l]] = static_cast<int>(l);
    for (long i = 0; i < newdata.n; ++i) {
      auto it = index.find(c.levels[c.codes[i]]);
      if (it == index.end())
        throw DataError("unseen categorical level " + name + "=" +
                        c.levels[c.codes[i]]);
      codes[i] = it->second;
    }
    prepared.add_categorical(name, std::move(codes), rc.levels);
  }
  return fill_design(train.terms, prepared);
}

}  // namespace abcreg
