#include "optnet/config_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace optnet {

namespace {

using nlohmann::json;

bool read_double(const json& j, const char* key, double& out, ConfigParse& p, bool required) {
  if (!j.contains(key)) {
    if (required) p.errors.push_back(std::string("missing required field ") + key);
    return false;
  }
  if (!j[key].is_number()) {
    p.errors.push_back(std::string(key) + " must be a number");
    return false;
  }
  out = j[key].get<double>();
  return true;
}

bool read_int(const json& j, const char* key, int& out, ConfigParse& p, bool required) {
  if (!j.contains(key)) {
    if (required) p.errors.push_back(std::string("missing required field ") + key);
    return false;
  }
  if (!j[key].is_number_integer()) {
    p.errors.push_back(std::string(key) + " must be an integer");
    return false;
  }
  out = j[key].get<int>();
  return true;
}

}  // namespace

std::string geometry_name(Geometry g) {
  switch (g) {
    case Geometry::Torus: return "torus";
    case Geometry::Cylinder: return "cylinder";
    case Geometry::Plane: return "plane";
  }
  return "?";
}

ConfigParse parse_config_text(const std::string& json_text) {
  ConfigParse p;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    p.errors.push_back(std::string("invalid JSON: ") + e.what());
    return p;
  }
  if (!j.is_object()) {
    p.errors.push_back("config must be a JSON object");
    return p;
  }

  NetworkConfig& c = p.config;
  read_int(j, "Nx", c.Nx, p, true);
  read_int(j, "Ny", c.Ny, p, true);
  read_double(j, "theta0", c.theta0, p, true);

  if (!j.contains("geometry")) {
    p.errors.push_back("missing required field geometry");
  } else if (!j["geometry"].is_string()) {
    p.errors.push_back("geometry must be a string");
  } else {
    const std::string g = j["geometry"].get<std::string>();
    if (g == "torus")
      c.geometry = Geometry::Torus;
    else if (g == "cylinder")
      c.geometry = Geometry::Cylinder;
    else if (g == "plane")
      c.geometry = Geometry::Plane;
    else
      p.errors.push_back("geometry must be one of torus, cylinder, plane");
  }

  read_double(j, "L", c.L, p, false);
  read_double(j, "r_bs", c.r_bs, p, false);
  read_double(j, "chi", c.chi, p, false);
  read_double(j, "r_BM", c.r_BM, p, false);
  read_double(j, "loss_eta", c.loss_eta, p, false);
  read_double(j, "disorder_delta", c.disorder_delta, p, false);

  if (j.contains("rng_seed")) {
    if (!j["rng_seed"].is_number_integer()) {
      p.errors.push_back("rng_seed must be an integer");
    } else {
      c.rng_seed = j["rng_seed"].get<std::uint64_t>();
      p.has_seed = true;
    }
  }

  if (!p.errors.empty()) return p;

  if (c.Nx < 1) p.errors.push_back("Nx must be >= 1");
  if (c.Ny < 1) p.errors.push_back("Ny must be >= 1");
  if (c.r_bs < 0.0 || c.r_bs > 1.0) p.errors.push_back("r_bs must be in [0,1]");
  if (c.r_BM < 0.0 || c.r_BM > 1.0) p.errors.push_back("r_BM must be in [0,1]");
  if (!(c.loss_eta > 0.0) || c.loss_eta > 1.0) p.errors.push_back("loss_eta must be in (0,1]");
  if (c.disorder_delta < 0.0) p.errors.push_back("disorder_delta must be >= 0");
  if (c.L <= 0.0) p.errors.push_back("L must be > 0");
  if (c.disorder_delta > 0.0 && !p.has_seed)
    p.errors.push_back("rng_seed is required when disorder_delta > 0");
  return p;
}

ConfigParse load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ConfigParse p;
    p.errors.push_back("cannot open config file: " + path);
    return p;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (ss.str().empty()) {
    ConfigParse p;
    p.errors.push_back("config file is empty: " + path);
    return p;
  }
  return parse_config_text(ss.str());
}

std::string config_to_json(const NetworkConfig& c, bool has_seed) {
  json j;
  j["Nx"] = c.Nx;
  j["Ny"] = c.Ny;
  j["theta0"] = c.theta0;
  j["L"] = c.L;
  j["geometry"] = geometry_name(c.geometry);
  j["r_bs"] = c.r_bs;
  j["chi"] = c.chi;
  j["r_BM"] = c.r_BM;
  j["loss_eta"] = c.loss_eta;
  j["disorder_delta"] = c.disorder_delta;
  if (has_seed) j["rng_seed"] = c.rng_seed;
  return j.dump(2);
}

}  // namespace optnet
