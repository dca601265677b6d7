#include "collapsar/model/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/matrix_io.hpp"

namespace collapsar {

namespace {

constexpr const char* kFormat = "collapsar-checkpoint";
constexpr int kVersion = 1;

std::string param_file(std::size_t i) {
  std::string n = std::to_string(i);
  return "params/" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n + ".cmx";
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "params");
  const ParamStore& ps = model.params();
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["schema"] = model.schema().to_yaml();
  j["spec"] = model.spec().to_json();
  j["table_sizes"] = model.spec().table_dims;
  j["blocks"] = ps.blocks();
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Param& p = ps[i];
    const std::string file = param_file(i);
    write_matrix_binary(p.value, dir / file);
    params.push_back({{"name", p.name},
                      {"block", ps.blocks()[p.block]},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"file", file}});
  }
  j["params"] = params;
  nlohmann::json masks = nlohmann::json::object();
  for (std::size_t t = 0; t < model.num_towers(); ++t) {
    nlohmann::json row = nlohmann::json::object();
    for (const auto& b : ps.blocks()) row[b] = std::string(to_string(model.route(t, b)));
    masks[model.spec().towers[t]] = row;
  }
  j["masks"] = masks;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write checkpoint manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

Model load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no checkpoint manifest in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion) {
    throw IoError("unsupported checkpoint format in " + dir.string());
  }
  const Schema schema = Schema::from_config(Config::from_string(j.at("schema").get<std::string>()));
  Model model(schema, ModelSpec::from_json(j.at("spec")), 0);
  ParamStore& ps = model.params();
  const auto& params = j.at("params");
  if (params.size() != ps.size()) throw IoError("checkpoint parameter count does not match its spec");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& meta = params[i];
    if (meta.at("name").get<std::string>() != ps[i].name) {
      throw IoError("checkpoint parameter " + std::to_string(i) + " is '" +
                    meta.at("name").get<std::string>() + "', expected '" + ps[i].name + "'");
    }
    Matrix m = read_matrix_binary(dir / meta.at("file").get<std::string>());
    if (m.rows() != ps[i].value.rows() || m.cols() != ps[i].value.cols()) {
      throw IoError("checkpoint parameter '" + ps[i].name + "' has the wrong shape");
    }
    ps[i].value = std::move(m);
  }
  return model;
}

}  // namespace collapsar
