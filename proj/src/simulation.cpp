#include "abcreg/simulation.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "abcreg/errors.hpp"
#include "abcreg/model.hpp"
#include "abcreg/rng.hpp"

namespace abcreg {

namespace {

const std::vector<double> kRaceProbs = {0.4, 0.3, 0.2, 0.1};
const std::vector<std::string> kRaceLevels = {"A", "B", "C", "D"};
const std::vector<std::string> kSexLevels = {"uu", "vv"};
// P(uu | race), P(vv | race); marginally sex is (0.5, 0.5).
const double kSexGivenRace[4][2] = {
    {0.4, 0.6}, {0.6, 0.4}, {0.7, 0.3}, {0.2, 0.8}};

Term intercept_term() {
  Term t;
  t.kind = TermKind::Intercept;
  return t;
}

Term cont_term(const std::string& x) {
  Term t;
  t.kind = TermKind::Continuous;
  t.x = x;
  return t;
}

Term cat_term(const std::string& cat, const std::string& level) {
  Term t;
  t.kind = TermKind::CatMain;
  t.cat = cat;
  t.level_label = level;
  return t;
}

Term cat_cont_term(const std::string& x, const std::string& cat,
                   const std::string& level) {
  Term t;
  t.kind = TermKind::CatCont;
  t.x = x;
  t.cat = cat;
  t.level_label = level;
  return t;
}

Term cat_cat_term(const std::string& a, const std::string& la,
                  const std::string& b, const std::string& lb) {
  Term t;
  t.kind = TermKind::CatCat;
  t.cat = a;
  t.cat2 = b;
  t.level_label = la;
  t.level2_label = lb;
  return t;
}

void draw_race_sex(Rng& rng, long n, std::vector<int>& race,
                   std::vector<int>& sex) {
  race.resize(n);
  sex.resize(n);
  for (long i = 0; i < n; ++i) {
    int r = rng.categorical(kRaceProbs);
    race[i] = r;
    sex[i] = rng.uniform() < kSexGivenRace[r][0] ? 0 : 1;
  }
}

// x | race: A shifted normal, B scaled uniform, C shifted standardized
// t8, D Gamma(1,1); sigma_ac scales the A and C spreads.
double draw_x_given_race(Rng& rng, int race, double sigma_ac) {
  switch (race) {
    case 0: return 5.0 + sigma_ac * rng.normal();
    case 1: return std::sqrt(12.0) * rng.uniform();
    case 2: return -5.0 + sigma_ac * rng.student_t_std(8.0);
    default: return rng.gamma(1.0, 1.0);
  }
}

}  // namespace

std::string study_name(Study s) {
  switch (s) {
    case Study::TwoWay: return "two_way";
    case Study::CatCont: return "cat_cont";
    case Study::Multi: return "multi";
  }
  return "";
}

Study study_from_string(const std::string& s) {
  if (s == "two_way") return Study::TwoWay;
  if (s == "cat_cont") return Study::CatCont;
  if (s == "multi") return Study::Multi;
  throw DataError("unknown study '" + s + "'");
}

double TruthRecord::lookup(const Term& t) const {
  for (const auto& [term, value] : coef)
    if (term == t) return value;
  return 0.0;
}

std::pair<Dataset, TruthRecord> gen_two_way(long n, double gamma,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> race, sex;
  draw_race_sex(rng, n, race, sex);
  std::vector<double> y(n);
  for (long i = 0; i < n; ++i) {
    double mu = 1.0 - (race[i] == 2 ? 1.0 : 0.0) +
                gamma * ((race[i] == 1 && sex[i] == 1) ? 1.0 : 0.0);
    y[i] = mu + rng.student_t_std(4.0);
  }
  Dataset data;
  data.add_continuous("y", std::move(y));
  data.add_categorical("race", std::move(race), kRaceLevels);
  data.add_categorical("sex", std::move(sex), kSexLevels);

  TruthRecord truth;
  truth.coef.emplace_back(intercept_term(), 1.0);
  truth.coef.emplace_back(cat_term("race", "C"), -1.0);
  truth.coef.emplace_back(cat_cat_term("race", "B", "sex", "vv"), gamma);
  for (const auto& r : kRaceLevels)
    for (const auto& s : kSexLevels)
      truth.cell_means[{r, s}] = 1.0 - (r == "C" ? 1.0 : 0.0) +
                                 gamma * ((r == "B" && s == "vv") ? 1.0 : 0.0);
  return {std::move(data), std::move(truth)};
}

std::pair<Dataset, TruthRecord> gen_cat_cont(long n, double gamma,
                                             double sigma_ac,
                                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> race(n);
  std::vector<double> x(n), y(n);
  for (long i = 0; i < n; ++i) {
    race[i] = rng.categorical(kRaceProbs);
    x[i] = draw_x_given_race(rng, race[i], sigma_ac);
    double mu = 1.0 + x[i] - (race[i] == 2 ? 1.0 : 0.0) +
                gamma * x[i] * (race[i] == 1 ? 1.0 : 0.0);
    y[i] = mu + rng.student_t_std(4.0);
  }
  Dataset data;
  data.add_continuous("y", std::move(y));
  data.add_continuous("x", std::move(x));
  data.add_categorical("race", std::move(race), kRaceLevels);

  TruthRecord truth;
  truth.coef.emplace_back(intercept_term(), 1.0);
  truth.coef.emplace_back(cont_term("x"), 1.0);
  truth.coef.emplace_back(cat_term("race", "C"), -1.0);
  truth.coef.emplace_back(cat_cont_term("x", "race", "B"), gamma);
  return {std::move(data), std::move(truth)};
}

std::pair<Dataset, TruthRecord> gen_multi(long n, double gamma,
                                          double sigma_ac, std::uint64_t seed) {
  const int p = 10;
  Rng rng(seed);
  std::vector<int> race, sex;
  draw_race_sex(rng, n, race, sex);
  std::vector<std::vector<double>> x(p, std::vector<double>(n));
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      // 1-based odd covariates depend on race; the rest are standard normal.
      x[j][i] = (j % 2 == 0) ? draw_x_given_race(rng, race[i], sigma_ac)
                             : rng.normal();
    }
  }

  // alpha_j = 1 and race modifiers (0, g, -g, -g) for the first five
  // covariates; race mains (0, 1, -1, -1); sex effects all zero.
  auto gamma_rj = [&](int r, int j) -> double {
    if (j >= 5) return 0.0;
    if (r == 1) return gamma;
    if (r == 2 || r == 3) return -gamma;
    return 0.0;
  };
  const double beta_race[4] = {0.0, 1.0, -1.0, -1.0};

  std::vector<double> mu(n);
  for (long i = 0; i < n; ++i) {
    double m = 1.0 + beta_race[race[i]];
    for (int j = 0; j < 5; ++j)
      m += x[j][i] * (1.0 + gamma_rj(race[i], j));
    mu[i] = m;
  }
  double mbar = 0.0;
  for (double m : mu) mbar += m;
  mbar /= static_cast<double>(n);
  double svar = 0.0;
  for (double m : mu) svar += (m - mbar) * (m - mbar);
  svar /= static_cast<double>(n - 1);
  double sd_noise = std::sqrt(svar);  // realized signal-to-noise ratio of one

  std::vector<double> y(n);
  for (long i = 0; i < n; ++i) y[i] = mu[i] + sd_noise * rng.normal();

  Dataset data;
  data.add_continuous("y", std::move(y));
  for (int j = 0; j < p; ++j)
    data.add_continuous("x" + std::to_string(j + 1), std::move(x[j]));
  data.add_categorical("race", std::move(race), kRaceLevels);
  data.add_categorical("sex", std::move(sex), kSexLevels);

  TruthRecord truth;
  truth.coef.emplace_back(intercept_term(), 1.0);
  for (int j = 0; j < 5; ++j)
    truth.coef.emplace_back(cont_term("x" + std::to_string(j + 1)), 1.0);
  truth.coef.emplace_back(cat_term("race", "B"), 1.0);
  truth.coef.emplace_back(cat_term("race", "C"), -1.0);
  truth.coef.emplace_back(cat_term("race", "D"), -1.0);
  for (int j = 0; j < 5; ++j) {
    const std::string xj = "x" + std::to_string(j + 1);
    truth.coef.emplace_back(cat_cont_term(xj, "race", "B"), gamma);
    truth.coef.emplace_back(cat_cont_term(xj, "race", "C"), -gamma);
    truth.coef.emplace_back(cat_cont_term(xj, "race", "D"), -gamma);
  }
  return {std::move(data), std::move(truth)};
}

namespace {

struct StudyShape {
  std::string formula_main;
  std::string formula_cm;
  std::vector<Term> compared;  // main effects compared across models
  std::map<std::string, std::string> rge_refs;
  bool dropped_cat_cat = false;
};

StudyShape shape_for(const StudyConfig& config) {
  StudyShape s;
  switch (config.study) {
    case Study::TwoWay:
      s.formula_main = "y ~ race + sex";
      s.formula_cm = "y ~ race + sex + race:sex";
      s.compared = {cat_term("race", "B"), cat_term("race", "C"),
                    cat_term("race", "D"), cat_term("sex", "vv")};
      s.rge_refs = {{"race", "A"}, {"sex", "uu"}};
      break;
    case Study::CatCont:
      s.formula_main = "y ~ x + race";
      s.formula_cm = "y ~ x + race + x:race";
      s.compared = {cont_term("x")};
      s.rge_refs = {{"race", "A"}};
      break;
    case Study::Multi: {
      std::string xs = "x1";
      for (int j = 2; j <= 10; ++j) xs += " + x" + std::to_string(j);
      s.formula_main = "y ~ " + xs + " + sex + race";
      if (config.n <= 200) {
        // Small-n rule: the race:sex interaction is omitted to avoid rank
        // deficiency from empty joint cells.
        s.formula_cm = "y ~ (" + xs + ")*race + sex";
        s.dropped_cat_cat = true;
      } else {
        s.formula_cm = "y ~ (" + xs + " + sex)*race";
      }
      for (int j = 1; j <= 10; ++j)
        s.compared.push_back(cont_term("x" + std::to_string(j)));
      s.rge_refs = {{"race", "A"}, {"sex", "uu"}};
      break;
    }
  }
  return s;
}

std::pair<Dataset, TruthRecord> generate(const StudyConfig& config,
                                         std::uint64_t stream) {
  switch (config.study) {
    case Study::TwoWay: return gen_two_way(config.n, config.gamma, stream);
    case Study::CatCont:
      return gen_cat_cont(config.n, config.gamma, config.sigma_ac, stream);
    case Study::Multi:
      return gen_multi(config.n, config.gamma, config.sigma_ac, stream);
  }
  throw NumericError("unreachable");
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

const char* model_name(int m) {
  return m == static_cast<int>(ModelClass::MainOnly) ? "main_only"
                                                     : "cat_modified";
}

}  // namespace

SimulationReport run_replications(const StudyConfig& config) {
  if (config.n < 1 || config.replications < 1 || config.sigma_ac <= 0.0)
    throw NumericError("invalid study configuration");

  StudyShape shape = shape_for(config);
  ModelSpec spec_main = parse_formula(shape.formula_main);
  ModelSpec spec_cm = parse_formula(shape.formula_cm);

  SimulationReport report;
  report.config = config;
  report.dropped_cat_cat = shape.dropped_cat_cat;

  std::vector<int> models;
  if (config.fit_main) models.push_back(static_cast<int>(ModelClass::MainOnly));
  if (config.fit_cm) models.push_back(static_cast<int>(ModelClass::CatModified));

  for (int rep = 0; rep < config.replications; ++rep) {
    RepResult rr;
    rr.rep = rep;
    std::uint64_t stream = derive_stream(config.seed, rep);
    try {
      auto [data, truth] = generate(config, stream);
      for (Scheme scheme : config.schemes) {
        for (int m : models) {
          const ModelSpec& spec =
              (m == static_cast<int>(ModelClass::MainOnly)) ? spec_main
                                                            : spec_cm;
          FitOptions opts;
          opts.scheme = scheme;
          // Fits stay on the raw covariate scale: the recorded truths are
          // raw-scale functionals.
          opts.center = false;
          opts.rge_refs = shape.rge_refs;
          ModelFrame frame = prepare(data, spec, opts);
          FitResult fit = fit_linear(frame);

          boost::math::students_t tdist(
              static_cast<double>(fit.df_residual));
          double q = boost::math::quantile(tdist, 0.975);

          auto key = std::make_pair(static_cast<int>(scheme), m);
          auto& effs = rr.effects[key];
          CellMetrics met;
          double sq_main = 0.0;
          for (const Term& t : shape.compared) {
            int col = fit.column_of(t);
            if (col < 0) continue;
            EffectRecord e;
            e.term = t;
            e.est = fit.coef[col];
            e.se = fit.se(col);
            e.lo = e.est - q * e.se;
            e.hi = e.est + q * e.se;
            e.truth = truth.lookup(t);
            effs.push_back(e);
            sq_main += (e.est - e.truth) * (e.est - e.truth);
            met.width_main += e.hi - e.lo;
            met.total_main += 1;
            if (e.truth >= e.lo && e.truth <= e.hi) met.cover_main += 1;
          }
          met.rmse_main = std::sqrt(sq_main / effs.size());
          met.width_main /= static_cast<double>(met.total_main);

          double sq_all = 0.0;
          long n_all = 0;
          std::vector<double> widths_all;
          for (std::size_t j = 0; j < fit.design.terms.size(); ++j) {
            double se = fit.se(static_cast<int>(j));
            double est = fit.coef[static_cast<long>(j)];
            // RGE reference rows pin coefficients exactly; their SEs are
            // numerically zero and carry no estimate.
            if (se <= 1e-12 * (1.0 + std::abs(est))) continue;
            double tv = truth.lookup(fit.design.terms[j]);
            sq_all += (est - tv) * (est - tv);
            ++n_all;
            double lo = est - q * se, hi = est + q * se;
            widths_all.push_back(hi - lo);
            met.total_all += 1;
            if (tv >= lo && tv <= hi) met.cover_all += 1;
          }
          met.rmse_all = std::sqrt(sq_all / static_cast<double>(n_all));
          met.width_all = median_of(widths_all);
          rr.metrics[key] = met;
        }
      }
    } catch (const std::exception& e) {
      rr.ok = false;
      rr.error = e.what();
      rr.effects.clear();
      rr.metrics.clear();
      ++report.failures;
    }
    report.reps.push_back(std::move(rr));
  }

  // Aggregation, in fixed (scheme, model) order.
  for (Scheme scheme : config.schemes) {
    for (int m : models) {
      auto key = std::make_pair(static_cast<int>(scheme), m);
      CellAggregate agg;
      long ok = 0, cmain = 0, tmain = 0, call = 0, tall = 0;
      for (const auto& rr : report.reps) {
        if (!rr.ok) continue;
        const CellMetrics& met = rr.metrics.at(key);
        agg.mean_rmse_main += met.rmse_main;
        agg.mean_rmse_all += met.rmse_all;
        agg.mean_width_main += met.width_main;
        agg.mean_width_all += met.width_all;
        cmain += met.cover_main;
        tmain += met.total_main;
        call += met.cover_all;
        tall += met.total_all;
        ++ok;
      }
      if (ok > 0) {
        agg.mean_rmse_main /= ok;
        agg.mean_rmse_all /= ok;
        agg.mean_width_main /= ok;
        agg.mean_width_all /= ok;
        agg.coverage_main = static_cast<double>(cmain) / tmain;
        agg.coverage_all = static_cast<double>(call) / tall;
      }
      report.cells[key] = agg;
    }
  }

  if (config.fit_main && config.fit_cm) {
    for (Scheme scheme : config.schemes) {
      auto key_main = std::make_pair(static_cast<int>(scheme),
                                     static_cast<int>(ModelClass::MainOnly));
      auto key_cm = std::make_pair(static_cast<int>(scheme),
                                   static_cast<int>(ModelClass::CatModified));
      SchemeAggregate sa;
      std::vector<double> ratios, deltas, signed_deltas, max_deltas;
      long all_gt1_reps = 0, ok_reps = 0;
      for (const auto& rr : report.reps) {
        if (!rr.ok) continue;
        const auto& em = rr.effects.at(key_main);
        const auto& ec = rr.effects.at(key_cm);
        double max_delta = 0.0;
        bool all_gt1 = true;
        for (std::size_t i = 0; i < em.size(); ++i) {
          double ratio = ec[i].se / em[i].se;
          double sdelta = ec[i].est - em[i].est;
          ratios.push_back(ratio);
          deltas.push_back(std::abs(sdelta));
          signed_deltas.push_back(sdelta);
          max_delta = std::max(max_delta, std::abs(sdelta));
          if (!(ratio > 1.0)) all_gt1 = false;
        }
        max_deltas.push_back(max_delta);
        if (all_gt1) ++all_gt1_reps;
        ++ok_reps;
      }
      if (!ratios.empty()) {
        double s = 0.0;
        long gt1 = 0;
        for (double r : ratios) {
          s += r;
          if (r > 1.0) ++gt1;
        }
        sa.mean_se_ratio = s / static_cast<double>(ratios.size());
        sa.frac_ratio_gt1 =
            static_cast<double>(gt1) / static_cast<double>(ratios.size());
        sa.frac_reps_all_gt1 =
            static_cast<double>(all_gt1_reps) / static_cast<double>(ok_reps);
        sa.median_delta = median_of(deltas);
        sa.median_signed_delta = median_of(signed_deltas);
        sa.median_max_delta = median_of(max_deltas);
        double sm = 0.0;
        for (double d : max_deltas) sm += d;
        sa.mean_max_delta = sm / static_cast<double>(max_deltas.size());
      }
      report.schemes[static_cast<int>(scheme)] = sa;
    }
  }
  return report;
}

void SimulationReport::write_replication_csv(std::ostream& os) const {
  os.precision(17);
  os << "study,rep,ok,scheme,model,effect,est,se,lo,hi,truth\n";
  for (const auto& rr : reps) {
    if (!rr.ok) {
      std::string msg = rr.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      os << study_name(config.study) << "," << rr.rep << ",0,,,\"" << msg
         << "\",,,,,\n";
      continue;
    }
    for (const auto& [key, effs] : rr.effects) {
      for (const auto& e : effs) {
        os << study_name(config.study) << "," << rr.rep << ",1,"
           << scheme_name(static_cast<Scheme>(key.first)) << ","
           << model_name(key.second) << "," << e.term.label() << "," << e.est
           << "," << e.se << "," << e.lo << "," << e.hi << "," << e.truth
           << "\n";
      }
    }
  }
}

void SimulationReport::write_aggregate_csv(std::ostream& os) const {
  os.precision(17);
  os << "# study=" << study_name(config.study) << " n=" << config.n
     << " gamma=" << config.gamma << " sigma_ac=" << config.sigma_ac
     << " reps=" << config.replications << " seed=" << config.seed
     << " failures=" << failures
     << (dropped_cat_cat ? " race:sex_dropped=1" : "") << "\n";
  os << "scheme,model,metric,value\n";
  for (const auto& [key, agg] : cells) {
    const std::string sch = scheme_name(static_cast<Scheme>(key.first));
    const std::string mod = model_name(key.second);
    os << sch << "," << mod << ",rmse_main," << agg.mean_rmse_main << "\n";
    os << sch << "," << mod << ",rmse_all," << agg.mean_rmse_all << "\n";
    os << sch << "," << mod << ",width_main," << agg.mean_width_main << "\n";
    os << sch << "," << mod << ",width_all," << agg.mean_width_all << "\n";
    os << sch << "," << mod << ",coverage_main," << agg.coverage_main << "\n";
    os << sch << "," << mod << ",coverage_all," << agg.coverage_all << "\n";
  }
  for (const auto& [sch, sa] : schemes) {
    const std::string name = scheme_name(static_cast<Scheme>(sch));
    os << name << ",both,mean_se_ratio," << sa.mean_se_ratio << "\n";
    os << name << ",both,frac_se_ratio_gt1," << sa.frac_ratio_gt1 << "\n";
    os << name << ",both,frac_reps_all_se_gt1," << sa.frac_reps_all_gt1
       << "\n";
    os << name << ",both,median_delta," << sa.median_delta << "\n";
    os << name << ",both,median_signed_delta," << sa.median_signed_delta
       << "\n";
    os << name << ",both,median_max_delta," << sa.median_max_delta << "\n";
    os << name << ",both,mean_max_delta," << sa.mean_max_delta << "\n";
  }
}

std::string SimulationReport::summary_lines() const {
  std::ostringstream os;
  os.precision(4);
  if (dropped_cat_cat)
    os << "note: race:sex interaction dropped at n=" << config.n
       << " to avoid rank deficiency\n";
  for (const auto& [key, agg] : cells) {
    os << scheme_name(static_cast<Scheme>(key.first)) << " "
       << model_name(key.second) << ": rmse_main=" << agg.mean_rmse_main
       << " width_main=" << agg.mean_width_main
       << " coverage_main=" << agg.coverage_main << "\n";
  }
  for (const auto& [sch, sa] : schemes) {
    os << scheme_name(static_cast<Scheme>(sch))
       << " cm/main: mean_se_ratio=" << sa.mean_se_ratio
       << " median_max_delta=" << sa.median_max_delta << "\n";
  }
  if (failures > 0) os << "failed replications: " << failures << "\n";
  return os.str();
}

}  // namespace abcreg
