#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gresnet/network.hpp"

namespace gresnet {
namespace {

using Json = nlohmann::ordered_json;

const std::set<std::string>& normalization_keys() {
  static const std::set<std::string> keys{"batch_norm", "batchnorm", "normalization",
                                          "layer_norm", "bn", "norm"};
  return keys;
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ModelFormatError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (normalization_keys().count(key)) {
      throw ModelFormatError(where + ": normalization layers ('" + key +
                             "') are not supported; they are not Lipschitz-constrained");
    }
    if (!allowed.count(key)) throw ModelFormatError(where + ": unknown key '" + key + "'");
  }
  for (const auto& key : allowed) {
    if (!obj.contains(key)) throw ModelFormatError(where + ": missing key '" + key + "'");
  }
}

double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ModelFormatError(where + ": expected a number");
  return j.get<double>();
}

Vector get_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ModelFormatError(where + ": expected an array of numbers");
  Vector out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(get_number(v, where));
  return out;
}

Matrix get_matrix(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ModelFormatError(where + ": expected nested arrays");
  if (j.empty()) return {};
  std::vector<double> data;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    Vector row = get_vector(j[r], where);
    if (r == 0) cols = row.size();
    if (row.size() != cols) throw ModelFormatError(where + ": ragged matrix rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(j.size(), cols, std::move(data));
}

std::size_t get_size(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ModelFormatError(where + ": expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (double v : m.row(r)) row.push_back(v);
    out.push_back(std::move(row));
  }
  return out;
}

Json vector_json(std::span<const double> v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Json activations_json(const std::vector<ActivationSpec>& acts) {
  Json out = Json::array();
  for (const auto& a : acts) {
    Json params = Json::object();
    for (const auto& [k, v] : a.params) params[k] = v;
    out.push_back(Json{{"name", a.name}, {"params", params}});
  }
  return out;
}

std::vector<ActivationSpec> activations_from(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ModelFormatError(where + ": activations must be an array");
  std::vector<ActivationSpec> out;
  for (std::size_t l = 0; l < j.size(); ++l) {
    const std::string at = where + ".activations[" + std::to_string(l) + "]";
    if (!j[l].is_object() || !j[l].contains("name") || !j[l]["name"].is_string()) {
      throw ModelFormatError(at + ": expected {name, params}");
    }
    for (const auto& [key, value] : j[l].items()) {
      if (key != "name" && key != "params") throw ModelFormatError(at + ": unknown key '" + key + "'");
    }
    ActivationParams params;
    if (j[l].contains("params")) {
      if (!j[l]["params"].is_object()) throw ModelFormatError(at + ": params must be an object");
      for (const auto& [k, v] : j[l]["params"].items()) params[k] = get_number(v, at + "." + k);
    }
    const std::string name = j[l]["name"].get<std::string>();
    try {
      out.push_back(make_activation(name, params));
    } catch (const InfiniteConstantsError& e) {
      throw ModelFormatError(at + ": activation '" + name +
                             "' has infinite slope constants and cannot be certified (" + e.what() +
                             ")");
    } catch (const std::invalid_argument& e) {
      throw ModelFormatError(at + ": " + e.what());
    }
  }
  return out;
}

BlockShape shape_from(const Json& jb, const std::string& where) {
  BlockShape shape;
  shape.state_dim = get_size(jb["d_x"], where + ".d_x");
  if (!jb["dims"].is_array()) throw ModelFormatError(where + ".dims: expected an array");
  for (const auto& d : jb["dims"]) shape.dims.push_back(get_size(d, where + ".dims"));
  try {
    shape.validate();
  } catch (const ConstraintError& e) {
    throw ModelFormatError(where + ": " + e.what());
  }
  return shape;
}

void check_version(const Json& root) {
  if (!root.contains("version") || !root["version"].is_number_integer()) {
    throw ModelFormatError("model: missing integer 'version'");
  }
  const int version = root["version"].get<int>();
  if (version != kModelFormatVersion) {
    throw ModelFormatError("model: unsupported version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelFormatVersion) + ")");
  }
}

Json parse(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ModelFormatError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string model_to_json(const Model& model) {
  model.validate();
  Json root;
  root["version"] = kModelFormatVersion;
  root["lipschitz_total"] = model.lipschitz_total;
  Json blocks = Json::array();
  for (const auto& b : model.blocks) {
    Json jb;
    jb["d_x"] = b.shape.state_dim;
    jb["dims"] = b.shape.dims;
    jb["activations"] = activations_json(b.activations);
    Json weights = Json::array();
    for (const auto& w : b.weights_raw) weights.push_back(matrix_json(w));
    jb["W_raw"] = std::move(weights);
    jb["a_raw"] = vector_json(b.a_raw);
    jb["b_raw"] = vector_json(b.b_raw);
    Json biases = Json::array();
    for (const auto& v : b.biases) biases.push_back(vector_json(v));
    jb["biases"] = std::move(biases);
    blocks.push_back(std::move(jb));
  }
  root["blocks"] = std::move(blocks);
  return root.dump(2) + "\n";
}

Model model_from_json(std::string_view text) {
  const Json root = parse(text);
  check_version(root);
  check_keys(root, {"version", "lipschitz_total", "blocks"}, "model");
  Model model;
  model.lipschitz_total = get_number(root["lipschitz_total"], "model.lipschitz_total");
  if (!root["blocks"].is_array() || root["blocks"].empty()) {
    throw ModelFormatError("model.blocks: expected a non-empty array");
  }
  if (!(model.lipschitz_total > 0.0)) throw ModelFormatError("model.lipschitz_total must be positive");
  const double per_block = block_lipschitz(model.lipschitz_total, root["blocks"].size());
  for (std::size_t k = 0; k < root["blocks"].size(); ++k) {
    const std::string where = "model.blocks[" + std::to_string(k) + "]";
    const Json& jb = root["blocks"][k];
    check_keys(jb, {"d_x", "dims", "activations", "W_raw", "a_raw", "b_raw", "biases"}, where);
    RawBlock raw;
    raw.shape = shape_from(jb, where);
    raw.lipschitz = per_block;
    raw.activations = activations_from(jb["activations"], where);
    if (!jb["W_raw"].is_array() || !jb["biases"].is_array()) {
      throw ModelFormatError(where + ": W_raw and biases must be arrays");
    }
    for (const auto& w : jb["W_raw"]) raw.weights_raw.push_back(get_matrix(w, where + ".W_raw"));
    for (const auto& v : jb["biases"]) raw.biases.push_back(get_vector(v, where + ".biases"));
    raw.a_raw = get_vector(jb["a_raw"], where + ".a_raw");
    raw.b_raw = get_vector(jb["b_raw"], where + ".b_raw");
    model.blocks.push_back(std::move(raw));
  }
  try {
    model.validate();
  } catch (const ConstraintError& e) {
    throw ModelFormatError(e.what());
  }
  return model;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model));
}

Model load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

std::string materialized_to_json(const MaterializedModel& model) {
  Json root;
  root["version"] = kModelFormatVersion;
  root["kind"] = "materialized";
  root["lipschitz_total"] = model.lipschitz_total;
  Json blocks = Json::array();
  for (const auto& b : model.blocks) {
    Json jb;
    jb["d_x"] = b.shape.state_dim;
    jb["dims"] = b.shape.dims;
    jb["lipschitz"] = b.lipschitz;
    jb["activations"] = activations_json(b.activations);
    jb["A"] = vector_json(b.a);
    jb["B"] = vector_json(b.b);
    Json weights = Json::array();
    for (const auto& w : b.weights) weights.push_back(matrix_json(w));
    jb["C"] = std::move(weights);
    Json lambdas = Json::array();
    for (const auto& v : b.lambdas) lambdas.push_back(vector_json(v));
    jb["lambda"] = std::move(lambdas);
    Json biases = Json::array();
    for (const auto& v : b.biases) biases.push_back(vector_json(v));
    jb["biases"] = std::move(biases);
    blocks.push_back(std::move(jb));
  }
  root["blocks"] = std::move(blocks);
  return root.dump(2) + "\n";
}

MaterializedModel materialized_from_json(std::string_view text) {
  const Json root = parse(text);
  check_version(root);
  check_keys(root, {"version", "kind", "lipschitz_total", "blocks"}, "materialized");
  if (root["kind"] != "materialized") throw ModelFormatError("materialized: kind must be 'materialized'");
  MaterializedModel model;
  model.lipschitz_total = get_number(root["lipschitz_total"], "materialized.lipschitz_total");
  if (!root["blocks"].is_array() || root["blocks"].empty()) {
    throw ModelFormatError("materialized.blocks: expected a non-empty array");
  }
  for (std::size_t k = 0; k < root["blocks"].size(); ++k) {
    const std::string where = "materialized.blocks[" + std::to_string(k) + "]";
    const Json& jb = root["blocks"][k];
    check_keys(jb, {"d_x", "dims", "lipschitz", "activations", "A", "B", "C", "lambda", "biases"},
               where);
    MaterializedBlock b;
    b.shape = shape_from(jb, where);
    b.lipschitz = get_number(jb["lipschitz"], where + ".lipschitz");
    b.activations = activations_from(jb["activations"], where);
    b.a = get_vector(jb["A"], where + ".A");
    b.b = get_vector(jb["B"], where + ".B");
    if (!jb["C"].is_array() || !jb["lambda"].is_array() || !jb["biases"].is_array()) {
      throw ModelFormatError(where + ": C, lambda and biases must be arrays");
    }
    for (const auto& w : jb["C"]) b.weights.push_back(get_matrix(w, where + ".C"));
    for (const auto& v : jb["lambda"]) b.lambdas.push_back(get_vector(v, where + ".lambda"));
    for (const auto& v : jb["biases"]) b.biases.push_back(get_vector(v, where + ".biases"));
    const std::size_t n = b.shape.depth();
    if (b.activations.size() != n || b.weights.size() != n || b.lambdas.size() != n ||
        b.biases.size() != n || b.a.size() != b.shape.state_dim || b.b.size() != b.shape.state_dim) {
      throw ModelFormatError(where + ": per-layer arrays do not match dims");
    }
    for (std::size_t l = 0; l < n; ++l) {
      if (b.weights[l].rows() != b.shape.output_dim(l) || b.weights[l].cols() != b.shape.input_dim(l) ||
          b.lambdas[l].size() != b.shape.output_dim(l) || b.biases[l].size() != b.shape.output_dim(l)) {
        throw ModelFormatError(where + ": layer " + std::to_string(l + 1) + " has the wrong shape");
      }
    }
    model.blocks.push_back(std::move(b));
  }
  return model;
}

}  // namespace gresnet
