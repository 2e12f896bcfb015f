#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "abcreg/constraints.hpp"
#include "abcreg/data.hpp"
#include "abcreg/glm.hpp"
#include "abcreg/ols.hpp"

namespace abcreg {

struct FitOptions {
  Scheme scheme = Scheme::ABC;
  bool center = true;
  bool standardize = false;
  std::map<std::string, std::string> rge_refs;
  std::optional<ProportionTable> population_props;
};

// One prepared modeling problem: validated spec, transformed data,
// proportions, design, and constraints, ready for any of the fitters.
struct ModelFrame {
  ModelSpec spec;
  Dataset data;
  Eigen::VectorXd y;
  std::shared_ptr<ProportionTable> props;  // null when no categoricals
  DesignMatrix design;
  ConstraintMatrix constraints;
};

ModelFrame prepare(const Dataset& raw, const ModelSpec& spec,
                   const FitOptions& opts = {});

FitResult fit_linear(const ModelFrame& frame);
FitResult fit_family(const ModelFrame& frame, const Family& family);

}  // namespace abcreg
