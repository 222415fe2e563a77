#include "wmcf/cli/well_registry.hpp"

#include "wmcf/errors.hpp"

#include <algorithm>
#include <sstream>

namespace wmcf::cli {

const std::vector<WellEntry>& well_registry() {
  static const std::vector<WellEntry> entries = {
      {"canonical_quartic", "(u-a)^2 (u-b)^2 with constant wells", {{"a", "0"}, {"b", "1"}}},
      {"scaled_quartic", "m (u-a)^2 (u-b)^2 with constant m, a, b", {{"m", "1"}, {"a", "0"}, {"b", "1"}}},
      {"linear_weight_quartic", "(1 + q x1) u^2 (1-u)^2", {{"q", "1"}}},
      {"exp_weight_quartic", "m0 exp(2 kappa x1) u^2 (1-u)^2, sigma proportional to exp(kappa x1)",
       {{"m0", "1"}, {"kappa", "0.5"}}},
      {"sin2_weight_quartic", "c (1 + sin^2(pi x1)) u^2 (1-u)^2", {{"c", "1"}}},
      {"moving_quartic", "(u-a(x))^2 (u-b(x))^2 with a = a0 + a1 x1 + a2 x2, b = b0 + b1 x1 + b2 x2",
       {{"a0", "0"}, {"a1", "0"}, {"a2", "0"}, {"b0", "1"}, {"b1", "0"}, {"b2", "0"}}},
  };
  return entries;
}

bool is_known_well(const std::string& name) {
  const auto& r = well_registry();
  return std::any_of(r.begin(), r.end(), [&](const WellEntry& e) { return e.name == name; });
}

namespace {

std::string registry_names() {
  std::ostringstream out;
  bool first = true;
  for (const auto& e : well_registry()) {
    out << (first ? "" : ", ") << e.name;
    first = false;
  }
  return out.str();
}

}  // namespace

wells::WellSpec make_well(const std::string& name, const std::map<std::string, std::string>& params) {
  const auto& r = well_registry();
  const auto it = std::find_if(r.begin(), r.end(), [&](const WellEntry& e) { return e.name == name; });
  if (it == r.end()) throw InputError("unknown well '" + name + "'; registry: " + registry_names());

  std::map<std::string, double> p;
  for (const auto& [k, v] : it->defaults) p[k] = std::stod(v);
  for (const auto& [k, v] : params) {
    if (!p.count(k)) throw InputError("well '" + name + "' has no parameter '" + k + "'");
    try {
      p[k] = std::stod(v);
    } catch (const std::exception&) {
      throw InputError("well parameter '" + k + "' is not a number: '" + v + "'");
    }
  }

  using namespace wells;
  if (name == "canonical_quartic") return canonical_quartic(p["a"], p["b"]);
  WellSpec spec;
  if (name == "scaled_quartic") {
    if (!(p["b"] > p["a"]) || !(p["m"] > 0.0)) throw InputError("scaled_quartic needs a < b and m > 0");
    spec = quartic(constant_scalar(p["m"]), constant_scalar(p["a"]), constant_scalar(p["b"]), name);
    spec.delta_sep = p["b"] - p["a"];
    spec.x_independent = true;
    return spec;
  }
  if (name == "linear_weight_quartic") {
    spec = quartic(affine_scalar(1.0, {p["q"], 0.0}), constant_scalar(0.0), constant_scalar(1.0), name);
  } else if (name == "exp_weight_quartic") {
    spec = quartic(exponential_scalar(p["m0"], {2.0 * p["kappa"], 0.0}), constant_scalar(0.0), constant_scalar(1.0),
                   name);
  } else if (name == "sin2_weight_quartic") {
    spec = quartic(sin2_scalar(p["c"]), constant_scalar(0.0), constant_scalar(1.0), name);
  } else {
    spec = quartic(constant_scalar(1.0), affine_scalar(p["a0"], {p["a1"], p["a2"]}),
                   affine_scalar(p["b0"], {p["b1"], p["b2"]}), name);
    // Separation is only known pointwise; samplers check gamma against this floor.
    spec.delta_sep = 1e-3;
    return spec;
  }
  spec.delta_sep = 1.0;
  return spec;
}

}  // namespace wmcf::cli
