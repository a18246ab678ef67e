#include "celltrack/models/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "celltrack/error.hpp"
#include "celltrack/numerics/ctn.hpp"

namespace celltrack::models {

namespace {

nlohmann::json read_document(const std::filesystem::path& directory, const std::string& kind) {
  const auto path = directory / "manifest.json";
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("missing checkpoint manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (doc.value("kind", "") != kind) {
    throw IoError(path.string() + ": expected a " + kind + " checkpoint, found '" + doc.value("kind", "") + "'");
  }
  return doc;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& directory, const std::string& kind, const nlohmann::json& meta,
                     const numerics::NamedParameters<float>& params) {
  std::filesystem::create_directories(directory);
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [name, tensor] : params) {
    const std::string file = name + ".ctn";
    numerics::write_ctn(directory / file, tensor->dims(), tensor->data());
    entries.push_back({{"name", name}, {"file", file}, {"dims", tensor->dims()}});
  }
  const nlohmann::json doc = {{"kind", kind}, {"meta", meta}, {"parameters", entries}};
  std::ofstream out(directory / "manifest.json");
  if (!out) throw IoError("cannot write " + (directory / "manifest.json").string());
  out << doc.dump(2) << '\n';
}

nlohmann::json read_manifest(const std::filesystem::path& directory, const std::string& kind) {
  return read_document(directory, kind).value("meta", nlohmann::json::object());
}

nlohmann::json load_checkpoint(const std::filesystem::path& directory, const std::string& kind,
                               const numerics::NamedParameters<float>& params) {
  const auto doc = read_document(directory, kind);
  for (const auto& [name, tensor] : params) {
    const auto it = std::find_if(doc["parameters"].begin(), doc["parameters"].end(),
                                 [&](const nlohmann::json& e) { return e.value("name", "") == name; });
    if (it == doc["parameters"].end()) throw IoError(directory.string() + ": checkpoint lacks parameter " + name);
    const auto arr = numerics::read_ctn(directory / it->at("file").get<std::string>());
    if (arr.dims != tensor->dims()) {
      throw IoError(directory.string() + ": parameter " + name + " has dims " + numerics::shape_string(arr.dims) +
                    ", model expects " + numerics::shape_string(tensor->dims()));
    }
    auto dst = tensor->mutable_data();
    std::copy(arr.data.begin(), arr.data.end(), dst.begin());
  }
  return doc.value("meta", nlohmann::json::object());
}

}  // namespace celltrack::models
