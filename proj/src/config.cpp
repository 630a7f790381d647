#include "demr/config.hpp"

#include <fstream>

#include "schema_text.hpp"

namespace demr {

using nlohmann::json;

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::kPose: return "pose";
    case TaskKind::kSubspace: return "subspace";
    case TaskKind::kProps: return "props";
  }
  return "?";
}

const json& experiment_schema() {
  static const json schema = json::parse(kExperimentSchemaText);
  return schema;
}

namespace {

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  return false;
}

void validate(const json& v, const json& schema, const std::string& where,
              std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    const auto type = schema["type"].get<std::string>();
    if (!type_matches(v, type)) {
      errors.push_back(where + ": expected " + type);
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || (e == v);
    if (!found) errors.push_back(where + ": value " + v.dump() + " is not allowed");
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>())
      errors.push_back(where + ": below minimum " + schema["minimum"].dump());
    if (schema.contains("maximum") && x > schema["maximum"].get<double>())
      errors.push_back(where + ": above maximum " + schema["maximum"].dump());
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
      errors.push_back(where + ": must exceed " + schema["exclusiveMinimum"].dump());
    if (schema.contains("exclusiveMaximum") && x >= schema["exclusiveMaximum"].get<double>())
      errors.push_back(where + ": must be below " + schema["exclusiveMaximum"].dump());
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      errors.push_back(where + ": needs at least " + schema["minItems"].dump() + " items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i)
        validate(v[i], schema["items"], where + "[" + std::to_string(i) + "]", errors);
  }
  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!v.contains(key.get<std::string>()))
          errors.push_back(where + ": missing required key '" + key.get<std::string>() + "'");
    const json props = schema.value("properties", json::object());
    const bool closed = schema.contains("additionalProperties") &&
                        schema["additionalProperties"] == false;
    for (const auto& [key, value] : v.items()) {
      if (props.contains(key)) {
        validate(value, props[key], where + "." + key, errors);
      } else if (closed) {
        errors.push_back(where + ": unknown key '" + key + "'");
      }
    }
  }
}

std::vector<std::size_t> widths(const json& doc, const char* key,
                                std::vector<std::size_t> fallback) {
  return doc.contains(key) ? doc[key].get<std::vector<std::size_t>>() : fallback;
}

}  // namespace

std::vector<std::string> schema_violations(const json& doc, const json& schema) {
  std::vector<std::string> errors;
  validate(doc, schema, "$", errors);
  return errors;
}

ExperimentConfig parse_config(const json& doc) {
  const auto errors = schema_violations(doc, experiment_schema());
  if (!errors.empty()) {
    std::string msg = errors.front();
    if (errors.size() > 1) msg += " (+" + std::to_string(errors.size() - 1) + " more)";
    throw Error(ErrorCode::kBadConfig, msg);
  }

  ExperimentConfig c;
  c.source = doc;
  const auto task = doc["task"].get<std::string>();
  c.task = task == "pose" ? TaskKind::kPose
         : task == "subspace" ? TaskKind::kSubspace
                              : TaskKind::kProps;
  c.seed = doc["seed"].get<std::uint64_t>();
  c.output_dir = doc.value("output_dir", std::string("out/") + task);

  c.tag = parse_tag(doc.value("tag", std::string("nine9")));
  auto& pd = c.pose_data;
  pd.mode = parse_mode(doc.value("mode", std::string("so3")));
  pd.fraction = doc.value("fraction", 1.0);
  pd.points = doc.value("points", pd.points);
  pd.train_count = doc.value("train_count", pd.train_count);
  pd.test_count = doc.value("test_count", pd.test_count);
  pd.jitter = doc.value("jitter", 0.0);
  if (doc.contains("cloud_csv")) pd.cloud_csv = doc["cloud_csv"].get<std::string>();
  c.pose_arch.encoder_widths = widths(doc, "encoder_widths", c.pose_arch.encoder_widths);
  c.pose_arch.head_widths = widths(doc, "head_widths", c.pose_arch.head_widths);

  auto& sd = c.subspace_data;
  sd.n = doc.value("n", sd.n);
  sd.m = doc.value("m", sd.m);
  sd.identities = doc.value("identities", sd.identities);
  sd.images_per_identity = doc.value("images_per_identity", sd.images_per_identity);
  sd.noise = doc.value("noise", sd.noise);
  sd.train_ratio = doc.value("train_ratio", sd.train_ratio);
  sd.split = doc.value("split", std::string("images")) == "images" ? SplitUnit::kImages
                                                                   : SplitUnit::kIdentities;
  sd.center_pca = doc.value("center_pca", false);
  for (const auto& p : doc.value("image_files", json::array()))
    sd.image_files.emplace_back(p.get<std::string>());
  c.hidden_widths = widths(doc, "hidden_widths", c.hidden_widths);
  c.hidden_activation = parse_activation(doc.value("hidden_activation", std::string("relu")));
  if (sd.m >= sd.n) throw Error(ErrorCode::kBadConfig, "m must be smaller than n");

  if (c.task == TaskKind::kSubspace) {
    c.train = {1500, 32, 1e-3};
  }
  c.train.iterations = doc.value("iterations", c.train.iterations);
  c.train.batch = doc.value("batch", c.train.batch);
  c.train.lr = doc.value("lr", c.train.lr);

  auto& dimr = c.dimr;
  dimr.data.n = 6;
  dimr.data.m = 2;
  dimr.data.identities = 8;
  dimr.data.images_per_identity = 20;
  dimr.data.noise = sd.noise;
  dimr.data.train_ratio = sd.train_ratio;
  dimr.data.split = sd.split;
  dimr.train = {2400, 8, 1e-2};
  if (doc.contains("dimr_fd")) {
    const json& d = doc["dimr_fd"];
    dimr.data.n = d.value("n", dimr.data.n);
    dimr.data.m = d.value("m", dimr.data.m);
    dimr.data.identities = d.value("identities", dimr.data.identities);
    dimr.data.images_per_identity = d.value("images_per_identity", dimr.data.images_per_identity);
    dimr.hidden_widths = widths(d, "hidden_widths", dimr.hidden_widths);
    dimr.train.iterations = d.value("iterations", dimr.train.iterations);
    dimr.train.batch = d.value("batch", dimr.train.batch);
    dimr.train.lr = d.value("lr", dimr.train.lr);
  }
  if (dimr.data.m >= dimr.data.n)
    throw Error(ErrorCode::kBadConfig, "dimr_fd.m must be smaller than dimr_fd.n");

  c.props.sigma = doc.value("sigma", c.props.sigma);
  c.props.samples = doc.value("samples", c.props.samples);
  c.props.means = doc.value("means", c.props.means);
  c.props.pairs = doc.value("pairs", c.props.pairs);
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIoError, "cannot read config " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kBadConfig, path.string() + ": " + e.what());
  }
}

}  // namespace demr
