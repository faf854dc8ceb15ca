#include "bladeenv/pipeline/artifacts.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"

#include <filesystem>
#include <fstream>

namespace bladeenv::pipeline {

namespace fs = std::filesystem;

Workspace::Workspace(PipelineConfig config, std::string out_dir, int jobs)
    : config_(std::move(config)), dir_(std::move(out_dir)), jobs_(jobs < 1 ? 1 : jobs) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir_ + "': " + ec.message());
}

std::string Workspace::path(const std::string& file) const { return (fs::path(dir_) / file).string(); }

Provenance Workspace::provenance(const std::string& stage, const std::vector<std::string>& inputs) const {
  Provenance p{stage, config_.stage_hash(stage), {}};
  for (const auto& f : inputs) p.inputs.push_back({f, io::hex64(io::hash_file(path(f)))});
  return p;
}

ingest::Header Workspace::csv_header(const Provenance& p) const {
  ingest::Header h;
  h["stage"] = p.stage;
  h["config"] = p.config;
  std::string in;
  for (const auto& i : p.inputs) in += (in.empty() ? "" : ";") + i.file + ":" + i.hash;
  h["inputs"] = in.empty() ? "-" : in;
  return h;
}

nlohmann::json Workspace::json_provenance(const Provenance& p) const {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& i : p.inputs) inputs[i.file] = i.hash;
  return {{"schema_version", io::kSchemaVersion}, {"stage", p.stage}, {"config", p.config}, {"inputs", inputs}};
}

namespace {

Provenance from_header(const ingest::Header& h) {
  Provenance p;
  if (auto it = h.find("stage"); it != h.end()) p.stage = it->second;
  if (auto it = h.find("config"); it != h.end()) p.config = it->second;
  if (auto it = h.find("inputs"); it != h.end() && it->second != "-") {
    for (const auto& tok : io::split(it->second, ';')) {
      const auto colon = tok.rfind(':');
      if (colon == std::string::npos) continue;
      p.inputs.push_back({tok.substr(0, colon), tok.substr(colon + 1)});
    }
  }
  return p;
}

std::vector<std::string> leading_comments(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') out.push_back(line.substr(1));
  return out;
}

}  // namespace

Provenance read_provenance(const std::string& path) {
  if (fs::path(path).extension() == ".json") {
    const auto j = read_json(path);
    if (!j.contains("provenance")) throw DomainError("'" + path + "' has no provenance block");
    const auto& pj = j.at("provenance");
    if (pj.value("schema_version", 0) != io::kSchemaVersion) {
      throw DomainError("'" + path + "': unsupported schema version");
    }
    Provenance p;
    p.stage = pj.value("stage", "");
    p.config = pj.value("config", "");
    for (const auto& [k, v] : pj.at("inputs").items()) p.inputs.push_back({k, v.get<std::string>()});
    return p;
  }
  const auto h = ingest::parse_header(leading_comments(path));
  if (h.count("schema") == 0 || h.at("schema") != std::to_string(io::kSchemaVersion)) {
    throw DomainError("'" + path + "': missing or unsupported schema version");
  }
  return from_header(h);
}

void Workspace::require(const std::string& stage, const std::string& file) const {
  const auto p = path(file);
  if (!fs::exists(p)) throw ArtifactError(stage, "missing artifact '" + p + "'");
  Provenance prov;
  try {
    prov = read_provenance(p);
  } catch (const std::exception& e) {
    throw ArtifactError(stage, "unreadable artifact '" + p + "': " + e.what());
  }
  if (prov.stage != stage) throw ArtifactError(stage, "'" + p + "' was written by stage '" + prov.stage + "'");
  if (prov.config != config_.stage_hash(stage)) {
    throw ArtifactError(stage, "'" + p + "' is stale: the " + stage + " configuration changed");
  }
  for (const auto& in : prov.inputs) {
    const auto ip = path(in.file);
    if (!fs::exists(ip)) throw ArtifactError(stage, "input '" + ip + "' of '" + p + "' is missing");
    if (io::hex64(io::hash_file(ip)) != in.hash) {
      throw ArtifactError(stage, "'" + p + "' is stale: its input '" + in.file + "' changed");
    }
  }
}

void Workspace::write_resolved_config() const { write_json(path(files::kResolvedConfig), config_.resolved()); }

void write_json(const std::string& path, const nlohmann::json& j) { io::write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace bladeenv::pipeline
