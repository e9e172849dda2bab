#pragma once

#include <string>
#include <vector>

#include "optnet/types.hpp"

namespace optnet {

// JSON config document with keys mirroring NetworkConfig field names:
//   Nx, Ny, theta0, geometry            required
//   L, r_bs, chi, r_BM, loss_eta,
//   disorder_delta, rng_seed            optional (documented defaults)
// rng_seed becomes required when disorder_delta > 0.
struct ConfigParse {
  NetworkConfig config;
  bool has_seed = false;
  std::vector<std::string> errors;  // empty on success
  bool ok() const { return errors.empty(); }
};

ConfigParse parse_config_text(const std::string& json_text);
ConfigParse load_config(const std::string& path);

std::string geometry_name(Geometry g);

// Normalized echo of a parsed config as a JSON document (used by the run
// manifest and the validate path).
std::string config_to_json(const NetworkConfig& config, bool has_seed);

}  // namespace optnet
