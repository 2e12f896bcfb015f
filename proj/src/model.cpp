#include "abcreg/model.hpp"

#include "abcreg/errors.hpp"

namespace abcreg {

ModelFrame prepare(const Dataset& raw, const ModelSpec& spec,
                   const FitOptions& opts) {
  ModelFrame frame;
  frame.spec = spec.resolved ? spec : validate_spec(spec, raw.schema());

  const Column& resp = raw.column(frame.spec.response);
  if (resp.kind != ColumnKind::Continuous)
    throw DataError("response '" + frame.spec.response + "' is categorical");

  if ((opts.center || opts.standardize) && !frame.spec.continuous.empty()) {
    CenterResult cr =
        center_continuous(raw, frame.spec.continuous, opts.standardize);
    frame.data = std::move(cr.data);
    frame.design = build_design(frame.spec, frame.data);
    frame.design.centers = std::move(cr.centers);
    frame.design.scales = std::move(cr.scales);
  } else {
    frame.data = raw;
    frame.design = build_design(frame.spec, frame.data);
  }
  frame.design.centered = opts.center || opts.standardize;
  frame.design.standardized = opts.standardize;

  frame.y.resize(raw.n);
  for (long i = 0; i < raw.n; ++i) frame.y[i] = resp.values[i];

  if (!frame.spec.categorical.empty()) {
    if (opts.population_props) {
      frame.props = std::make_shared<ProportionTable>(*opts.population_props);
    } else {
      frame.props = std::make_shared<ProportionTable>(
          compute_proportions(frame.data, frame.spec.categorical));
    }
    frame.constraints =
        build_constraints(frame.design, *frame.props, opts.scheme,
                          opts.rge_refs);
  } else {
    frame.constraints.scheme = opts.scheme;
    frame.constraints.A = Eigen::MatrixXd::Zero(0, frame.design.P());
  }
  return frame;
}

FitResult fit_linear(const ModelFrame& frame) {
  FitResult fit = fit_ols(frame.design, frame.y, frame.constraints);
  fit.props = frame.props;
  return fit;
}

FitResult fit_family(const ModelFrame& frame, const Family& family) {
  FitResult fit = fit_glm(frame.design, frame.y, frame.constraints, family);
  fit.props = frame.props;
  return fit;
}

}  // namespace abcreg
