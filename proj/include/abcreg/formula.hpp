#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace abcreg {

enum class ColumnKind { Continuous, Categorical };

using Schema = std::map<std::string, ColumnKind>;

// Parsed and (optionally) schema-resolved model formula.
//
// Grammar accepted by parse_formula:
//   formula := ident "~" term ("+" term)*
//   term    := var | var ":" var | var "*" var
//            | "(" var ("+" var)* ")" "*" var
// "a*b" expands to the mains a, b plus the pairwise interaction a:b.
// Variable kinds are resolved later against a dataset schema by
// validate_spec, which also enforces hierarchy (auto-adding missing
// main terms with a warning) and fixes the canonical term order:
// continuous mains, categorical mains, cat-cont interactions, cat-cat
// interactions, each sorted lexicographically.
struct ModelSpec {
  std::string response;

  // As-parsed structure (interaction pairs unclassified).
  std::vector<std::string> mains;
  std::vector<std::pair<std::string, std::string>> interactions;

  // Filled by validate_spec.
  bool resolved = false;
  std::vector<std::string> continuous;
  std::vector<std::string> categorical;
  std::vector<std::pair<std::string, std::string>> cat_cont;  // (x, cat)
  std::vector<std::pair<std::string, std::string>> cat_cat;   // normalized
  std::vector<std::string> warnings;

  bool has_variable(const std::string& name) const;
  // Canonical rendering, e.g. "y ~ x1 + c1 + c2 + x1:c1 + c1:c2".
  std::string render() const;
  // True when every term of this spec appears in `other` (same response).
  bool nested_in(const ModelSpec& other) const;
};

ModelSpec parse_formula(const std::string& text);

ModelSpec validate_spec(const ModelSpec& spec, const Schema& schema);

}  // namespace abcreg
