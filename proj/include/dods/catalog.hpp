#pragma once

// Realizations of Lie algebras by planar vector fields (dimensions 1 to 4 and
// a six-dimensional so(3,1)) and the nonlinear DODS families invariant under
// them, with their elementary invariants.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dods/core.hpp"

namespace dods {

/// Parameter values as expression text: constants ("4/3") or functions of
/// the documented arguments ("z^2").
using ParamValues = std::map<std::string, std::string>;

struct ParamSpec {
  std::string name;
  bool function = false;
  std::vector<std::string> args;  // for function parameters
  std::string default_value;
  std::string range;  // human-readable admissible range
};

struct AlgebraRealization {
  std::string id;
  int dim = 0;
  std::vector<std::pair<std::string, std::string>> fields;  // (xi, eta) templates
  std::vector<ParamSpec> params;
  bool flagged = false;
  std::string note;

  /// Basis with parameters bound (defaults for anything not given).
  std::vector<VectorField> basis(const ParamValues& values = {}) const;
};

const std::vector<AlgebraRealization>& list_algebras();
/// Throws UnknownFamily.
const AlgebraRealization& find_algebra(std::string_view id);

struct ElementaryInvariant {
  std::string label;
  Expr expr;  // over the jet variables
  double operator()(const JetPoint& j) const;
};

struct InvariantFamily {
  std::string id;
  std::string algebra;
  std::vector<ParamSpec> params;
  std::string rhs_form;
  std::string delay_form;
  bool implicit_rhs = false;
  bool implicit_delay = false;
  std::vector<std::pair<std::string, std::string>> invariants;  // (label, template)
  Interval domain;
  SampleBox box;
  std::string domain_note;
};

const std::vector<InvariantFamily>& list_families();
/// Throws UnknownFamily.
const InvariantFamily& find_family(std::string_view id);

/// A validated system of the family. Throws ParamError for out-of-range or
/// incomplete parameters and DegenerateFamilyError where no DODS exists.
DODSystem invariant_family(std::string_view id, const ParamValues& params = {});

std::vector<ElementaryInvariant> elementary_invariants(std::string_view id, const ParamValues& params = {});

struct ResolvedParams {
  std::map<std::string, double> constants;
  std::map<std::string, Expr> functions;  // over the documented arguments
};
/// Parameters with defaults filled in; throws ParamError on bad text.
ResolvedParams resolve_family_params(std::string_view id, const ParamValues& params = {});

/// Basis of the family's symmetry algebra with the family parameters bound.
std::vector<VectorField> family_basis(std::string_view id, const ParamValues& params = {});

/// Full table as JSON.
nlohmann::json export_catalog();

}  // namespace dods
