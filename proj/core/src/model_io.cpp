#include "kansid/model_io.hpp"

#include <cmath>

#include "kansid/error.hpp"

namespace kansid {

namespace json_detail {

const Json& require(const Json& obj, const char* field, const std::string& path) {
  if (!obj.is_object()) throw ParseError("expected an object at '" + path + "'");
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError("missing field '" + path + (path.empty() ? "" : ".") + field + "'");
  return *it;
}

double require_number(const Json& obj, const char* field, const std::string& path) {
  const Json& v = require(obj, field, path);
  if (!v.is_number()) throw ParseError("field '" + path + (path.empty() ? "" : ".") + field + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError("field '" + path + "." + field + "' is not finite");
  return x;
}

std::string require_string(const Json& obj, const char* field, const std::string& path) {
  const Json& v = require(obj, field, path);
  if (!v.is_string()) throw ParseError("field '" + path + (path.empty() ? "" : ".") + field + "' must be a string");
  return v.get<std::string>();
}

}  // namespace json_detail

using json_detail::require;
using json_detail::require_number;
using json_detail::require_string;

namespace {

std::vector<double> require_reals(const Json& obj, const char* field, const std::string& path) {
  const Json& v = require(obj, field, path);
  if (!v.is_array()) throw ParseError("field '" + path + "." + field + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw ParseError("field '" + path + "." + field + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

Json save_model(const KanNetwork& net) {
  Json doc;
  doc["shape"] = net.shape;
  doc["input_labels"] = net.input_labels;
  doc["output_label"] = net.output_label;
  doc["seed"] = net.seed;
  doc["ts_seconds"] = net.ts_seconds;
  Json layers = Json::array();
  for (const auto& layer : net.layers) {
    Json edges = Json::array();
    for (const auto& e : layer.edges) {
      Json je;
      je["grid"] = {{"order", e.grid.order},
                    {"intervals", e.grid.intervals},
                    {"min", e.grid.range_min},
                    {"max", e.grid.range_max}};
      je["coeffs"] = e.coeffs;
      je["w_base"] = e.w_base;
      je["w_spline"] = e.w_spline;
      je["trainable"] = e.trainable;
      if (e.symbolic) {
        je["symbolic"] = {{"primitive", std::string(primitive_name(e.symbolic->primitive))},
                          {"a", e.symbolic->a},
                          {"b", e.symbolic->b},
                          {"c", e.symbolic->c},
                          {"d", e.symbolic->d}};
      }
      edges.push_back(std::move(je));
    }
    layers.push_back(Json{{"edges", std::move(edges)}});
  }
  doc["layers"] = std::move(layers);
  return doc;
}

KanNetwork load_model(const Json& doc) {
  KanNetwork net;
  const Json& shape = require(doc, "shape", "");
  if (!shape.is_array() || shape.size() < 2) throw ParseError("field 'shape' must be an array of at least 2 widths");
  for (const auto& w : shape) {
    if (!w.is_number_unsigned()) throw ParseError("field 'shape' must hold non-negative integers");
    net.shape.push_back(w.get<std::size_t>());
  }
  const Json& labels = require(doc, "input_labels", "");
  if (!labels.is_array()) throw ParseError("field 'input_labels' must be an array");
  for (const auto& s : labels) {
    if (!s.is_string()) throw ParseError("field 'input_labels' must hold strings");
    net.input_labels.push_back(s.get<std::string>());
  }
  if (net.input_labels.size() != net.shape.front()) {
    throw ParseError("field 'input_labels' does not match shape[0]");
  }
  if (auto it = doc.find("output_label"); it != doc.end() && it->is_string()) net.output_label = it->get<std::string>();
  const Json& seed = require(doc, "seed", "");
  if (!seed.is_number_unsigned()) throw ParseError("field 'seed' must be a non-negative integer");
  net.seed = seed.get<std::uint64_t>();
  net.ts_seconds = require_number(doc, "ts_seconds", "");

  const Json& layers = require(doc, "layers", "");
  if (!layers.is_array() || layers.size() + 1 != net.shape.size()) {
    throw ParseError("field 'layers' must hold shape.size()-1 layers");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string lpath = "layers[" + std::to_string(l) + "]";
    KanLayer layer;
    layer.in_dim = net.shape[l];
    layer.out_dim = net.shape[l + 1];
    const Json& edges = require(layers[l], "edges", lpath);
    if (!edges.is_array() || edges.size() != layer.in_dim * layer.out_dim) {
      throw ParseError("field '" + lpath + ".edges' must hold in_dim*out_dim edges");
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const std::string epath = lpath + ".edges[" + std::to_string(k) + "]";
      const Json& je = edges[k];
      const Json& jg = require(je, "grid", epath);
      const std::string gpath = epath + ".grid";
      const Json& order = require(jg, "order", gpath);
      const Json& intervals = require(jg, "intervals", gpath);
      if (!order.is_number_integer() || !intervals.is_number_integer()) {
        throw ParseError("field '" + gpath + "' order/intervals must be integers");
      }
      SplineEdge e;
      try {
        e.grid = make_uniform_grid(require_number(jg, "min", gpath), require_number(jg, "max", gpath),
                                   intervals.get<int>(), order.get<int>());
      } catch (const InvalidArgument& err) {
        throw ParseError("field '" + gpath + "' is invalid: " + err.what());
      }
      e.coeffs = require_reals(je, "coeffs", epath);
      if (e.coeffs.size() != e.grid.basis_count()) {
        throw ParseError("field '" + epath + ".coeffs' length does not match the grid basis count");
      }
      e.w_base = require_number(je, "w_base", epath);
      e.w_spline = require_number(je, "w_spline", epath);
      if (auto it = je.find("trainable"); it != je.end()) {
        if (!it->is_boolean()) throw ParseError("field '" + epath + ".trainable' must be a boolean");
        e.trainable = it->get<bool>();
      }
      if (auto it = je.find("symbolic"); it != je.end() && !it->is_null()) {
        const std::string spath = epath + ".symbolic";
        SymbolicFn s;
        try {
          s.primitive = primitive_from_name(require_string(*it, "primitive", spath));
        } catch (const InvalidArgument& err) {
          throw ParseError("field '" + spath + ".primitive': " + err.what());
        }
        s.a = require_number(*it, "a", spath);
        s.b = require_number(*it, "b", spath);
        s.c = require_number(*it, "c", spath);
        s.d = require_number(*it, "d", spath);
        e.symbolic = s;
      }
      layer.edges.push_back(std::move(e));
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

KanNetwork load_model_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& err) {
    throw ParseError(std::string("model document is not valid JSON: ") + err.what());
  }
  return load_model(doc);
}

Json save_equation(const SymbolicEquation& eq) {
  Json doc;
  doc["state_label"] = eq.state_label;
  doc["input_labels"] = eq.input_labels;
  Json slopes = Json::object();
  for (std::size_t i = 0; i < eq.slopes.size(); ++i) slopes[eq.input_labels[i]] = eq.slopes[i];
  doc["slopes"] = std::move(slopes);
  doc["constant"] = eq.constant;
  doc["ts_rescaled"] = eq.scale_applied;
  doc["edge_r2"] = eq.edge_r2;
  return doc;
}

SymbolicEquation load_equation(const Json& doc) {
  SymbolicEquation eq;
  eq.state_label = require_string(doc, "state_label", "");
  const Json& labels = require(doc, "input_labels", "");
  if (!labels.is_array()) throw ParseError("field 'input_labels' must be an array");
  for (const auto& s : labels) {
    if (!s.is_string()) throw ParseError("field 'input_labels' must hold strings");
    eq.input_labels.push_back(s.get<std::string>());
  }
  const Json& slopes = require(doc, "slopes", "");
  for (const auto& label : eq.input_labels) eq.slopes.push_back(require_number(slopes, label.c_str(), "slopes"));
  eq.constant = require_number(doc, "constant", "");
  const Json& rescaled = require(doc, "ts_rescaled", "");
  if (!rescaled.is_boolean()) throw ParseError("field 'ts_rescaled' must be a boolean");
  eq.scale_applied = rescaled.get<bool>();
  if (auto it = doc.find("edge_r2"); it != doc.end() && it->is_object()) {
    for (auto kv = it->begin(); kv != it->end(); ++kv) {
      if (kv->is_number()) eq.edge_r2[kv.key()] = kv->get<double>();
    }
  }
  return eq;
}

}  // namespace kansid
