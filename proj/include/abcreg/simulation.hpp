#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "abcreg/constraints.hpp"
#include "abcreg/data.hpp"

namespace abcreg {

enum class Study { TwoWay, CatCont, Multi };

std::string study_name(Study s);
Study study_from_string(const std::string& s);

enum class ModelClass { MainOnly, CatModified };

struct StudyConfig {
  Study study = Study::TwoWay;
  long n = 500;
  double gamma = 0.0;
  double sigma_ac = 1.0;
  int replications = 500;
  std::uint64_t seed = 1;
  std::vector<Scheme> schemes = {Scheme::ABC, Scheme::RGE, Scheme::STZ};
  bool fit_main = true;
  bool fit_cm = true;
};

// Exact data-generating coefficients keyed by design term; terms absent
// from the record are true zeros. two_way additionally records the cell
// means mu(r, s).
struct TruthRecord {
  std::vector<std::pair<Term, double>> coef;
  std::map<std::pair<std::string, std::string>, double> cell_means;

  double lookup(const Term& t) const;
};

std::pair<Dataset, TruthRecord> gen_two_way(long n, double gamma,
                                            std::uint64_t seed);
std::pair<Dataset, TruthRecord> gen_cat_cont(long n, double gamma,
                                             double sigma_ac,
                                             std::uint64_t seed);
std::pair<Dataset, TruthRecord> gen_multi(long n, double gamma,
                                          double sigma_ac, std::uint64_t seed);

struct EffectRecord {
  Term term;
  double est = 0.0, se = 0.0, lo = 0.0, hi = 0.0;
  double truth = 0.0;
};

struct CellMetrics {
  double rmse_main = 0.0;   // over the study's compared main effects
  double rmse_all = 0.0;    // over every identified coefficient
  double width_main = 0.0;  // mean 95% interval width over compared effects
  double width_all = 0.0;   // median width over identified coefficients
  long cover_main = 0, total_main = 0;
  long cover_all = 0, total_all = 0;
};

struct RepResult {
  int rep = 0;
  bool ok = true;
  std::string error;
  // keyed by (scheme, model)
  std::map<std::pair<int, int>, std::vector<EffectRecord>> effects;
  std::map<std::pair<int, int>, CellMetrics> metrics;
};

struct CellAggregate {
  double mean_rmse_main = 0.0, mean_rmse_all = 0.0;
  double mean_width_main = 0.0, mean_width_all = 0.0;
  double coverage_main = 0.0, coverage_all = 0.0;
};

struct SchemeAggregate {
  // Cross-model comparisons for the compared main effects.
  double mean_se_ratio = 0.0;      // cm / main, pooled over (rep, effect)
  double frac_ratio_gt1 = 0.0;     // share of (rep, effect) with ratio > 1
  double frac_reps_all_gt1 = 0.0;  // share of reps where every ratio > 1
  double median_delta = 0.0;       // |est_cm - est_main|, pooled
  double median_signed_delta = 0.0;  // est_cm - est_main: systematic shift
  double median_max_delta = 0.0;   // per-rep max absolute delta
  double mean_max_delta = 0.0;
};

struct SimulationReport {
  StudyConfig config;
  std::vector<RepResult> reps;
  long failures = 0;
  bool dropped_cat_cat = false;  // multi study at small n
  std::map<std::pair<int, int>, CellAggregate> cells;
  std::map<int, SchemeAggregate> schemes;

  void write_replication_csv(std::ostream& os) const;
  void write_aggregate_csv(std::ostream& os) const;
  std::string summary_lines() const;
};

SimulationReport run_replications(const StudyConfig& config);

}  // namespace abcreg
