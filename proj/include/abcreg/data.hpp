#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abcreg/formula.hpp"

namespace abcreg {

struct Column {
  ColumnKind kind;
  std::vector<double> values;       // continuous
  std::vector<int> codes;           // categorical: level index per row
  std::vector<std::string> levels;  // categorical: labels, data order
};

// In-memory table. Columns are immutable after construction; no missing
// values are representable.
struct Dataset {
  long n = 0;
  std::vector<std::string> names;
  std::vector<Column> columns;

  const Column& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  Schema schema() const;
  // Row subset; categorical level lists are preserved from the parent so
  // level codes stay comparable (a vanished level keeps count zero).
  Dataset subset(const std::vector<long>& rows) const;
  void add_continuous(const std::string& name, std::vector<double> v);
  void add_categorical(const std::string& name, std::vector<int> codes,
                       std::vector<std::string> levels);
};

// Joint sample (or user-supplied population) proportions over the cross
// of all listed categorical variables, with marginal, pairwise, and
// conditional views derived from the joint table.
struct ProportionTable {
  enum class Source { Sample, Population };

  std::vector<std::string> vars;
  std::vector<std::vector<std::string>> levels;  // per variable
  std::vector<double> joint;  // mixed-radix over levels, sums to 1
  long n = 0;
  Source source = Source::Sample;

  int var_index(const std::string& name) const;
  std::size_t cells() const;
  Eigen::VectorXd marginal(int k) const;
  Eigen::VectorXd marginal(const std::string& var) const;
  // L_k x L_k2 joint over a pair, marginalizing the other variables.
  Eigen::MatrixXd pair_joint(int k, int k2) const;
  // Distribution of var k given var k2 fixed at level l2.
  Eigen::VectorXd conditional(int k, int k2, int l2) const;
};

ProportionTable compute_proportions(const Dataset& data,
                                    const std::vector<std::string>& cats);

// Alternative source: explicit joint probabilities (population ABCs).
ProportionTable population_proportions(
    std::vector<std::string> vars,
    std::vector<std::vector<std::string>> levels, std::vector<double> joint);

struct CenterResult {
  Dataset data;
  std::map<std::string, double> centers;
  std::map<std::string, double> scales;
};

CenterResult center_continuous(const Dataset& data,
                               const std::vector<std::string>& vars,
                               bool standardize);

// Loads comma-delimited text with a required header row. Columns where
// every cell parses as a real number become continuous; all others become
// categorical with levels in first-appearance order. Cells that are empty
// or "NA" are rejected. Hints override inference per column.
Dataset load_table(std::istream& in,
                   const std::map<std::string, ColumnKind>& hints = {});
Dataset load_csv_file(const std::string& path,
                      const std::map<std::string, ColumnKind>& hints = {});

enum class TermKind { Intercept, Continuous, CatMain, CatCont, CatCat };

// Tag for one design-matrix column.
struct Term {
  TermKind kind = TermKind::Intercept;
  std::string x;     // continuous variable (Continuous, CatCont)
  std::string cat;   // categorical (CatMain, CatCont, CatCat)
  std::string cat2;  // second categorical (CatCat)
  int level = -1;
  int level2 = -1;
  std::string level_label;
  std::string level2_label;

  bool operator==(const Term& o) const;
  bool is_main() const { return kind != TermKind::CatCont && kind != TermKind::CatCat; }
  std::string label() const;
};

// Full one-hot design: intercept, continuous columns, all levels of every
// categorical (no dropped level), and all interaction columns. Rank
// deficiency is intentional; identification lives in the constraints.
struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<Term> terms;
  ModelSpec spec;
  std::shared_ptr<const Dataset> source;
  std::map<std::string, double> centers;  // set by the fitting pipeline
  std::map<std::string, double> scales;
  bool centered = false;
  bool standardized = false;

  long P() const { return X.cols(); }
  std::vector<int> columns_of(TermKind kind, const std::string& a,
                              const std::string& b = "") const;
};

DesignMatrix build_design(const ModelSpec& spec, const Dataset& data);

// Builds design rows for new data using the training spec and level maps;
// stored centers/scales are applied to continuous variables first.
Eigen::MatrixXd build_rows(const DesignMatrix& train, const Dataset& newdata);

}  // namespace abcreg
