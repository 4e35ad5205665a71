#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "kansid/kan.hpp"
#include "kansid/symbolic.hpp"

namespace kansid {

using Json = nlohmann::json;

/// Model document: shape, input_labels, output_label, seed, ts_seconds and
/// layers[{edges[{grid{order,intervals,min,max}, coeffs[], w_base, w_spline,
/// trainable, symbolic{primitive,a,b,c,d}?}]}]. Reals round-trip exactly.
[[nodiscard]] Json save_model(const KanNetwork& net);
/// Throws ParseError naming the first missing or malformed field.
[[nodiscard]] KanNetwork load_model(const Json& doc);
[[nodiscard]] KanNetwork load_model_text(const std::string& text);

/// Equation document: state_label, input_labels[], slopes{label: value},
/// constant, ts_rescaled, edge_r2{}.
[[nodiscard]] Json save_equation(const SymbolicEquation& eq);
[[nodiscard]] SymbolicEquation load_equation(const Json& doc);

namespace json_detail {
/// Field access helpers shared by the document loaders.
const Json& require(const Json& obj, const char* field, const std::string& path);
double require_number(const Json& obj, const char* field, const std::string& path);
std::string require_string(const Json& obj, const char* field, const std::string& path);
}  // namespace json_detail

}  // namespace kansid
