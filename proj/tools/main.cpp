// Command-line front-end: fit constrained regressions from CSV, run
// nested-model diagnostics, and execute the simulation studies.
//
// Exit codes: 0 success, 2 formula/flag parse error, 3 data error,
// 4 empty-cell/rank error, 5 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "abcreg/diagnostics.hpp"
#include "abcreg/errors.hpp"
#include "abcreg/glm.hpp"
#include "abcreg/model.hpp"
#include "abcreg/penalized.hpp"
#include "abcreg/simulation.hpp"

using namespace abcreg;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string data_path;
  std::string formula;
  std::string id = "abc";
  std::vector<std::string> refs;
  std::string family = "gaussian";
  double level = 0.95;
  bool center = true;
  bool standardize = false;
  std::vector<std::string> categorical_hints;
  std::string out = "table";
};

std::map<std::string, std::string> parse_refs(
    const std::vector<std::string>& refs) {
  std::map<std::string, std::string> out;
  for (const auto& r : refs) {
    auto eq = r.find('=');
    if (eq == std::string::npos)
      throw DataError("--ref expects VAR=LEVEL, got '" + r + "'");
    out[r.substr(0, eq)] = r.substr(eq + 1);
  }
  return out;
}

Dataset load_data(const CommonOpts& c) {
  std::map<std::string, ColumnKind> hints;
  for (const auto& name : c.categorical_hints)
    hints[name] = ColumnKind::Categorical;
  return load_csv_file(c.data_path, hints);
}

FitOptions fit_options(const CommonOpts& c) {
  FitOptions opts;
  opts.scheme = scheme_from_string(c.id);
  opts.center = c.center;
  opts.standardize = c.standardize;
  opts.rge_refs = parse_refs(c.refs);
  return opts;
}

json proportions_json(const ModelFrame& frame) {
  json out = json::object();
  if (!frame.props) return out;
  for (std::size_t k = 0; k < frame.props->vars.size(); ++k) {
    Eigen::VectorXd m = frame.props->marginal(static_cast<int>(k));
    json levels = json::object();
    for (long l = 0; l < m.size(); ++l)
      levels[frame.props->levels[k][l]] = m[l];
    out[frame.props->vars[k]] = levels;
  }
  return out;
}

json table_json(const CoefficientTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json row = {{"label", r.label},
                {"estimate", r.estimate},
                {"se", r.se},
                {"stat", r.stat},
                {"p", r.p},
                {"lo", r.lo},
                {"hi", r.hi},
                {"ref", r.ref},
                {"degenerate", r.degenerate}};
    if (r.degenerate || r.ref) row["p"] = nullptr;
    rows.push_back(row);
  }
  return rows;
}

int cmd_fit(const CommonOpts& c, const std::string& penalty, double lambda,
            int folds, const std::string& rule, int grid, std::uint64_t seed,
            const std::string& dump_constraints) {
  Dataset data = load_data(c);
  ModelSpec spec = parse_formula(c.formula);
  FitOptions opts = fit_options(c);

  auto maybe_dump = [&](const ModelFrame& frame) {
    if (dump_constraints.empty()) return;
    std::ofstream os(dump_constraints);
    if (!os) throw DataError("cannot write '" + dump_constraints + "'");
    frame.constraints.write_csv(os, frame.design.terms);
  };

  if (!penalty.empty()) {
    // Penalized path: covariates are standardized by default for penalty
    // fairness and reported back on the original scale.
    if (c.center) {
      opts.center = true;
      opts.standardize = true;
    }
    ModelFrame frame = prepare(data, spec, opts);
    maybe_dump(frame);
    PenaltyKind kind = penalty == "lasso" ? PenaltyKind::Lasso
                       : penalty == "ridge"
                           ? PenaltyKind::Ridge
                           : throw DataError("unknown penalty '" + penalty +
                                             "'");
    Eigen::VectorXd coef;
    PathResult path;
    bool have_path = false;
    if (lambda >= 0.0) {
      PenaltySpec p = PenaltySpec::make(kind, lambda, frame.design);
      coef = fit_penalized(frame.design, frame.y, frame.constraints, p);
    } else {
      path = cross_validate(frame.design, frame.y, frame.constraints, kind,
                            folds,
                            rule == "min" ? SelectionRule::Min
                                          : SelectionRule::OneSE,
                            seed, grid);
      have_path = true;
      int idx = path.selected_index(rule == "min" ? SelectionRule::Min
                                                  : SelectionRule::OneSE);
      coef = path.coefs.row(idx).transpose();
      lambda = path.lambdas[static_cast<std::size_t>(idx)];
    }
    Eigen::VectorXd orig = original_scale_coefficients(frame.design, coef);

    if (c.out == "csv") {
      if (have_path) {
        std::ostringstream os;
        path.write_csv(os, frame.design.terms);
        std::cout << os.str();
      } else {
        std::cout << "label,estimate\n";
        std::cout.precision(17);
        for (std::size_t j = 0; j < frame.design.terms.size(); ++j)
          std::cout << frame.design.terms[j].label() << "," << orig[j] << "\n";
      }
    } else if (c.out == "json") {
      json doc;
      doc["formula"] = frame.spec.render();
      doc["scheme"] = scheme_name(opts.scheme);
      doc["penalty"] = penalty;
      doc["lambda"] = lambda;
      if (have_path) {
        doc["lambda_min"] = path.lambda_min;
        doc["lambda_1se"] = path.lambda_1se;
        doc["folds"] = path.folds;
      }
      doc["proportions"] = proportions_json(frame);
      json coefs = json::object();
      for (std::size_t j = 0; j < frame.design.terms.size(); ++j)
        coefs[frame.design.terms[j].label()] = orig[j];
      doc["coefficients"] = coefs;
      std::cout << doc.dump(2) << "\n";
    } else {
      std::ostringstream os;
      os << "penalty: " << penalty << "  lambda: " << lambda;
      if (have_path) os << "  (selected by " << rule << ")";
      os << "\n\n";
      CoefficientTable t;
      for (std::size_t j = 0; j < frame.design.terms.size(); ++j) {
        CoefficientRow row;
        row.term = frame.design.terms[j];
        row.label = row.term.label();
        row.estimate = orig[j];
        row.degenerate = true;  // renders without p-values
        t.rows.push_back(row);
      }
      // simple two-column layout for penalized estimates
      os << "Variable            Estimate\n";
      os << "----------------------------\n";
      char buf[128];
      for (const auto& row : t.rows) {
        std::snprintf(buf, sizeof(buf), "%-18s  %8.3f\n", row.label.c_str(),
                      row.estimate);
        os << buf;
      }
      std::cout << os.str();
    }
    return 0;
  }

  ModelFrame frame = prepare(data, spec, opts);
  maybe_dump(frame);
  Family fam = family_from_string(c.family);
  FitResult fit = fam.kind == Family::Kind::Gaussian
                      ? fit_linear(frame)
                      : fit_family(frame, fam);
  CoefficientTable table = summarize(fit, c.level);

  if (c.out == "csv") {
    std::cout << table.to_csv();
  } else if (c.out == "json") {
    json doc;
    doc["formula"] = frame.spec.render();
    doc["scheme"] = scheme_name(opts.scheme);
    doc["family"] = fam.name();
    doc["n"] = fit.n;
    doc["identified_parameters"] = fit.d;
    doc["df_residual"] = fit.df_residual;
    doc["sigma2"] = fit.sigma2;
    doc["level"] = c.level;
    doc["proportions"] = proportions_json(frame);
    doc["coefficients"] = table_json(table);
    for (const auto& w : frame.spec.warnings)
      doc["warnings"].push_back(w);
    std::cout << doc.dump(2) << "\n";
  } else {
    for (const auto& w : frame.spec.warnings)
      std::cerr << "warning: " << w << "\n";
    std::cout << table.to_text();
  }
  return 0;
}

int cmd_diagnose(const CommonOpts& c, const std::string& formula_cm) {
  Dataset data = load_data(c);
  FitOptions opts = fit_options(c);
  ModelSpec spec_main = validate_spec(parse_formula(c.formula), data.schema());
  ModelSpec spec_cm = validate_spec(parse_formula(formula_cm), data.schema());
  if (!spec_main.nested_in(spec_cm))
    throw FormulaError("'" + c.formula + "' is not nested in '" + formula_cm +
                       "'");
  FitResult main = fit_linear(prepare(data, spec_main, opts));
  FitResult cm = fit_linear(prepare(data, spec_cm, opts));
  InvarianceReport rep = compare_nested(main, cm);
  if (c.out == "csv")
    std::cout << rep.to_csv();
  else
    std::cout << rep.to_text();
  return 0;
}

int cmd_simulate(const StudyConfig& config, const std::string& out_dir) {
  SimulationReport report = run_replications(config);

  std::filesystem::path dir = out_dir;
  std::filesystem::create_directories(dir);
  std::string stem = study_name(config.study);
  {
    std::ofstream os(dir / (stem + "_replications.csv"));
    report.write_replication_csv(os);
  }
  {
    std::ofstream os(dir / (stem + "_aggregate.csv"));
    report.write_aggregate_csv(os);
  }
  std::cout << report.summary_lines();
  std::cout << "wrote " << (dir / (stem + "_replications.csv")).string()
            << " and " << (dir / (stem + "_aggregate.csv")).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained regression with abundance-based identification"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string penalty, rule = "1se", formula_cm, dump_constraints;
  double lambda = -1.0;
  int folds = 10, grid = 100;
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* sub, bool need_formula) {
    sub->add_option("--data", common.data_path, "CSV input path")
        ->required();
    auto* f = sub->add_option("--formula", common.formula,
                              "model formula, e.g. \"y ~ x*race\"");
    if (need_formula) f->required();
    sub->add_option("--id", common.id, "identification: abc|rge|stz")
        ->check(CLI::IsMember({"abc", "rge", "stz"}));
    sub->add_option("--ref", common.refs,
                    "RGE reference level as VAR=LEVEL (repeatable)");
    sub->add_option("--level", common.level, "confidence level")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6));
    sub->add_flag("--center,!--no-center", common.center,
                  "center continuous covariates (default on)");
    sub->add_flag("--standardize", common.standardize,
                  "scale continuous covariates to unit variance");
    sub->add_option("--categorical", common.categorical_hints,
                    "treat a column as categorical (repeatable)");
    sub->add_option("--out", common.out, "output format")
        ->check(CLI::IsMember({"table", "csv", "json"}));
  };

  CLI::App* fit = app.add_subcommand("fit", "fit a model from CSV data");
  add_common(fit, true);
  fit->add_option("--family", common.family, "gaussian|binomial|poisson")
      ->check(CLI::IsMember({"gaussian", "binomial", "poisson"}));
  fit->add_option("--penalty", penalty, "lasso|ridge")
      ->check(CLI::IsMember({"lasso", "ridge"}));
  fit->add_option("--lambda", lambda,
                  "fixed penalty value (otherwise cross-validated)");
  fit->add_option("--folds", folds, "CV folds")->check(CLI::Range(2, 1000));
  fit->add_option("--rule", rule, "CV selection rule")
      ->check(CLI::IsMember({"min", "1se"}));
  fit->add_option("--grid", grid, "path grid size")->check(CLI::Range(2, 1000));
  fit->add_option("--seed", seed, "fold-assignment seed");
  fit->add_option("--dump-constraints", dump_constraints,
                  "write the identification constraint matrix to a CSV file");

  CLI::App* diag =
      app.add_subcommand("diagnose", "nested-model invariance report");
  add_common(diag, true);
  diag->add_option("--formula-cm", formula_cm, "the larger (cat-modified) formula")
      ->required();

  CLI::App* sim = app.add_subcommand("simulate", "run a simulation study");
  StudyConfig config;
  std::string study_str = "two_way", schemes_str = "abc,rge,stz";
  std::string out_dir;
  sim->add_option("--study", study_str, "two_way|cat_cont|multi")
      ->check(CLI::IsMember({"two_way", "cat_cont", "multi"}));
  sim->add_option("--n", config.n, "sample size per replication");
  sim->add_option("--gamma", config.gamma, "interaction magnitude");
  sim->add_option("--sigma-ac", config.sigma_ac, "scale-violation knob");
  sim->add_option("--reps", config.replications, "replication count");
  sim->add_option("--seed", config.seed, "master seed");
  sim->add_option("--schemes", schemes_str,
                  "comma-separated identification schemes");
  std::string models_str = "both";
  sim->add_option("--models", models_str, "fit main-only, cat-modified, or both")
      ->check(CLI::IsMember({"both", "main", "cm"}));
  sim->add_option("--out-dir", out_dir,
                  "output directory (default $ABCREG_OUT_DIR or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      if (fit->count("--lambda") == 0) lambda = -1.0;
      return cmd_fit(common, penalty, lambda, folds, rule, grid, seed,
                     dump_constraints);
    }
    if (diag->parsed()) return cmd_diagnose(common, formula_cm);
    if (sim->parsed()) {
      config.study = study_from_string(study_str);
      config.fit_main = models_str != "cm";
      config.fit_cm = models_str != "main";
      config.schemes.clear();
      std::stringstream ss(schemes_str);
      std::string tok;
      while (std::getline(ss, tok, ','))
        config.schemes.push_back(scheme_from_string(tok));
      if (out_dir.empty()) {
        const char* env = std::getenv("ABCREG_OUT_DIR");
        out_dir = env ? env : ".";
      }
      return cmd_simulate(config, out_dir);
    }
  } catch (const FormulaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DesignError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
