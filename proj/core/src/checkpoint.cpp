#include "opil/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "opil/error.hpp"

namespace opil {

using nlohmann::json;

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& doc, std::string_view field) {
  if (!doc.is_array()) {
    throw ParseError(0, "field '" + std::string(field) + "' must be an array");
  }
  Vector v(static_cast<Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_number()) {
      throw ParseError(0, "field '" + std::string(field) +
                              "' contains a non-numeric entry");
    }
    v(static_cast<Index>(i)) = doc[i].get<double>();
  }
  return v;
}

json network_to_json(const NetworkParams& params) {
  json layers = json::array();
  for (Index k = 0; k < params.num_layers(); ++k) {
    const LayerSpec& spec = params.layer(k);
    json w = json::array();
    const auto weights = params.weights(k);
    for (Index r = 0; r < spec.out; ++r) {
      for (Index c = 0; c < spec.in; ++c) w.push_back(weights(r, c));
    }
    layers.push_back({{"in", spec.in},
                      {"out", spec.out},
                      {"activation", std::string(to_string(spec.activation))},
                      {"weights", std::move(w)},
                      {"bias", vector_to_json(params.bias(k))}});
  }
  return json{{"layers", std::move(layers)}};
}

NetworkParams network_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array()) {
    throw ParseError(0, "checkpoint has no 'layers' array");
  }
  std::vector<LayerSpec> specs;
  for (const json& layer : doc["layers"]) {
    try {
      specs.push_back({layer.at("in").get<Index>(), layer.at("out").get<Index>(),
                       activation_from_string(
                           layer.at("activation").get<std::string>())});
    } catch (const json::exception& e) {
      throw ParseError(0, std::string("bad layer header: ") + e.what());
    } catch (const ConfigError& e) {
      throw ParseError(0, e.what());
    }
  }
  NetworkParams params = [&] {
    try {
      return NetworkParams(specs);
    } catch (const DimensionError& e) {
      throw ParseError(0, e.what());
    }
  }();
  for (Index k = 0; k < params.num_layers(); ++k) {
    const json& layer = doc["layers"][static_cast<std::size_t>(k)];
    if (!layer.contains("weights") || !layer.contains("bias")) {
      throw ParseError(0, "layer " + std::to_string(k) + " lacks weights/bias");
    }
    const Vector w = vector_from_json(layer["weights"], "weights");
    const Vector b = vector_from_json(layer["bias"], "bias");
    const LayerSpec& spec = params.layer(k);
    if (w.size() != spec.in * spec.out || b.size() != spec.out) {
      throw ParseError(0, "layer " + std::to_string(k) +
                              " parameter count does not match its shape");
    }
    params.weights(k) = Eigen::Map<const RowMatrix>(w.data(), spec.out, spec.in);
    params.bias(k) = b;
  }
  return params;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(std::count(
                text.begin(), text.begin() + static_cast<std::ptrdiff_t>(
                                                 offset == 0 ? 0 : offset - 1),
                '\n'));
    throw ParseError(line, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace opil
