#pragma once

// JSON readers and writers for laws, kernels, weights, template graphs and
// Kolmogorov reports. All indices in files are 0-based.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bekit/chaos.hpp"
#include "bekit/dist.hpp"
#include "bekit/error.hpp"
#include "bekit/graph.hpp"
#include "bekit/mc.hpp"
#include "bekit/space.hpp"
#include "bekit/ustat.hpp"

namespace bekit {

using Json = nlohmann::ordered_json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed JSON in " + origin + ": " + e.what());
  }
}

inline Json load_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw InputError(what + " needs a \"" + key + "\" field");
  return j.at(key);
}

// Numbers may be given as JSON numbers or as decimal strings.
inline double number(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InputError(what + ": '" + s + "' is not a number");
    }
    if (used != s.size()) throw InputError(what + ": '" + s + "' is not a number");
    return v;
  }
  throw InputError(what + " must be a number");
}

inline int integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw InputError(what + " must be an integer");
  return j.get<int>();
}

inline std::vector<int> index_list(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be an array of indices");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(integer(v, what));
  return out;
}

}  // namespace detail

// {"type":"finite","atoms":[[v,p],...]} or {"type":"rademacher"}.
inline Distribution distribution_from_json(const Json& j) {
  const std::string type = detail::require(j, "type", "law").is_string() ? j.at("type").get<std::string>() : "";
  if (type == "rademacher") return Distribution::rademacher();
  if (type != "finite") throw InputError("law type must be \"finite\" or \"rademacher\"");
  const Json& atoms = detail::require(j, "atoms", "finite law");
  if (!atoms.is_array()) throw InputError("law atoms must be an array of [value, probability] pairs");
  std::vector<Atom> out;
  for (const auto& a : atoms) {
    if (!a.is_array() || a.size() != 2) throw InputError("law atoms must be [value, probability] pairs");
    out.push_back({detail::number(a[0], "atom value"), detail::number(a[1], "atom probability")});
  }
  return Distribution::finite(std::move(out));
}

inline Json distribution_to_json(const Distribution& d) {
  if (d.tag() == Distribution::Tag::kRademacher) return Json{{"type", "rademacher"}};
  Json atoms = Json::array();
  for (const Atom& a : d.atoms()) atoms.push_back(Json::array({a.value, a.prob}));
  return Json{{"type", "finite"}, {"atoms", atoms}};
}

// {"laws":[law, ...]} or {"law":law, "n":k}.
inline SpacePtr space_from_json(const Json& j) {
  if (j.is_object() && j.contains("laws")) {
    std::vector<Distribution> laws;
    for (const auto& l : j.at("laws")) laws.push_back(distribution_from_json(l));
    if (laws.empty()) throw InputError("space needs at least one coordinate");
    return OutcomeSpace::make(std::move(laws));
  }
  const Distribution law = distribution_from_json(detail::require(j, "law", "space"));
  const int n = detail::integer(detail::require(j, "n", "space"), "space size");
  if (n < 1) throw InputError("space needs at least one coordinate");
  return OutcomeSpace::iid(law, n);
}

inline Json space_to_json(const OutcomeSpace& s) {
  Json laws = Json::array();
  for (int i = 0; i < s.n(); ++i) laws.push_back(distribution_to_json(s.law(i)));
  return Json{{"laws", laws}};
}

// {"order":d, "entries":[{"subset":[i...], "array":[...]}...]}; each array is
// row-major over the atom indices of the subset's coordinates in increasing
// coordinate order.
inline ChaosKernel kernel_from_json(const Json& j, const SpacePtr& space) {
  const int d = detail::integer(detail::require(j, "order", "kernel"), "kernel order");
  ChaosKernel f(space, d);
  const Json& entries = detail::require(j, "entries", "kernel");
  if (!entries.is_array()) throw InputError("kernel entries must be an array");
  for (const auto& e : entries) {
    const auto idx = detail::index_list(detail::require(e, "subset", "kernel entry"), "kernel subset");
    for (int i : idx) {
      if (i < 0 || i >= space->n()) throw InputError("kernel subset index " + std::to_string(i) + " out of range");
    }
    const Subset s = subset_of(idx);
    if (subset_size(s) != static_cast<int>(idx.size())) throw InputError("kernel subset repeats an index");
    const Json& arr = detail::require(e, "array", "kernel entry");
    if (!arr.is_array()) throw InputError("kernel entry array must be an array");
    std::vector<double> values;
    for (const auto& v : arr) values.push_back(detail::number(v, "kernel value"));
    f.set(s, std::move(values));
  }
  return f;
}

inline Json kernel_to_json(const ChaosKernel& f) {
  Json entries = Json::array();
  for (const auto& [s, v] : f.entries()) entries.push_back(Json{{"subset", subset_members(s)}, {"array", v}});
  return Json{{"order", f.order()}, {"entries", entries}};
}

// Dense value array over the outcome space plus the space itself.
inline RandomFunctional functional_from_json(const Json& j) {
  const SpacePtr space = space_from_json(detail::require(j, "space", "functional"));
  const Json& values = detail::require(j, "values", "functional");
  if (!values.is_array() || values.size() != space->size()) {
    throw InputError("functional needs " + std::to_string(space->size()) + " values");
  }
  RandomFunctional x(space);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = detail::number(values[i], "functional value");
  return x;
}

inline Json functional_to_json(const RandomFunctional& x) {
  return Json{{"space", space_to_json(x.space())}, {"values", std::vector<double>(x.values().begin(), x.values().end())}};
}

// {"n":n, "order":d, "entries":[{"subset":[i...], "value":w}...]}.
inline WeightTensor weights_from_json(const Json& j) {
  const int n = detail::integer(detail::require(j, "n", "weights"), "weights n");
  const int d = detail::integer(detail::require(j, "order", "weights"), "weights order");
  WeightTensor w(n, d);
  const Json& entries = detail::require(j, "entries", "weights");
  if (!entries.is_array()) throw InputError("weight entries must be an array");
  for (const auto& e : entries) {
    w.set(detail::index_list(detail::require(e, "subset", "weight entry"), "weight subset"),
          detail::number(detail::require(e, "value", "weight entry"), "weight value"));
  }
  return w;
}

inline Json weights_to_json(const WeightTensor& w) {
  Json entries = Json::array();
  for (const auto& [s, v] : w.values()) entries.push_back(Json{{"subset", subset_members(s)}, {"value", v}});
  return Json{{"n", w.n()}, {"order", w.d()}, {"entries", entries}};
}

// {"order":d, "table":[...]} on the law's atoms; the flat index has slot 1 as
// the fastest-varying digit.
inline UKernel ukernel_from_json(const Json& j, const Distribution& law) {
  const int d = detail::integer(detail::require(j, "order", "U-kernel"), "U-kernel order");
  const Json& t = detail::require(j, "table", "U-kernel");
  if (!t.is_array()) throw InputError("U-kernel table must be an array");
  std::vector<double> values;
  for (const auto& v : t) values.push_back(detail::number(v, "U-kernel value"));
  return UKernel(law, d, std::move(values));
}

// {"vertices":k, "edges":[[u,v],...]}.
inline GraphTemplate graph_from_json(const Json& j) {
  const int v = detail::integer(detail::require(j, "vertices", "graph"), "graph vertices");
  const Json& edges = detail::require(j, "edges", "graph");
  if (!edges.is_array()) throw InputError("graph edges must be an array");
  std::vector<std::pair<int, int>> out;
  for (const auto& e : edges) {
    const auto ab = detail::index_list(e, "graph edge");
    if (ab.size() != 2) throw InputError("graph edges must be [u, v] pairs");
    out.emplace_back(ab[0], ab[1]);
  }
  return GraphTemplate(v, std::move(out));
}

inline Json graph_to_json(const GraphTemplate& g) {
  Json edges = Json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back(Json::array({a, b}));
  return Json{{"vertices", g.vertices()}, {"edges", edges}};
}

inline Json kdist_to_json(const KDistReport& r) {
  Json j{{"value", r.value}, {"method", KDistReport::method_name(r.method)}};
  if (r.method == KDistReport::Method::kEmpirical) {
    j["n"] = r.n_samples;
    j["dkw"] = r.dkw_radius;
    j["delta"] = r.delta;
    j["seed"] = r.seed;
  } else {
    j["dkw"] = 0.0;
  }
  return j;
}

}  // namespace bekit
