// optnet: simulation CLI for 2D passive optical scattering networks.
// Subcommands cover closed spectra, band structures, driven response,
// Kerr steady states, continuation sweeps, stability and squeezing spectra.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "optnet/assembly.hpp"
#include "optnet/config_io.hpp"
#include "optnet/csv.hpp"
#include "optnet/drive.hpp"
#include "optnet/fabry_perot.hpp"
#include "optnet/fluctuation.hpp"
#include "optnet/kerr.hpp"
#include "optnet/parallel.hpp"
#include "optnet/rootfinding.hpp"
#include "optnet/spectrum.hpp"

namespace fs = std::filesystem;
using namespace optnet;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitNumerical = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void apply_env_overrides(CommonOpts& c) {
  if (const char* v = std::getenv("OPTNET_OUT")) c.out_dir = v;
  if (const char* v = std::getenv("OPTNET_FORMAT")) c.format = v;
  if (const char* v = std::getenv("OPTNET_THREADS")) c.threads = std::atoi(v);
}

struct Manifest {
  std::string subcommand;
  json flags = json::object();
  std::vector<std::string> outputs;
  std::optional<NetworkConfig> config;
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& out_dir) const {
    json j;
    j["subcommand"] = subcommand;
    j["flags"] = flags;
    j["outputs"] = outputs;
    if (config) j["config"] = json::parse(config_to_json(*config, has_seed));
    if (has_seed) j["seed"] = seed;
    j["tool_version"] = OPTNET_VERSION;
    j["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream out(fs::path(out_dir) / "run_manifest.json");
    out << j.dump(2) << "\n";
  }
};

int config_error(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
  return kExitConfig;
}

std::optional<NetworkConfig> load(const CommonOpts& common, Manifest& manifest,
                                  int& exit_code) {
  if (common.config_path.empty()) {
    std::cerr << "config error: --config PATH is required for this subcommand\n";
    exit_code = kExitConfig;
    return std::nullopt;
  }
  ConfigParse parsed = load_config(common.config_path);
  if (common.seed) {
    // The --seed flag satisfies the schema's seed requirement.
    parsed.config.rng_seed = *common.seed;
    parsed.has_seed = true;
    std::erase_if(parsed.errors, [](const std::string& e) {
      return e.find("rng_seed is required") != std::string::npos;
    });
  }
  if (!parsed.ok()) {
    exit_code = config_error(parsed.errors);
    return std::nullopt;
  }
  manifest.config = parsed.config;
  manifest.has_seed = parsed.has_seed;
  manifest.seed = parsed.config.rng_seed;
  return parsed.config;
}

std::string out_path(const CommonOpts& common, Manifest& manifest, const std::string& name) {
  fs::create_directories(common.out_dir);
  const std::string p = (fs::path(common.out_dir) / name).string();
  manifest.outputs.push_back(p);
  return p;
}

std::vector<double> make_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * (i + 0.5) / n;
  return g;
}

Sigma parse_sector(int sigma, int& exit_code) {
  if (sigma == 1) return Sigma::Plus;
  if (sigma == -1) return Sigma::Minus;
  std::cerr << "config error: sigma must be +1 or -1\n";
  exit_code = kExitConfig;
  return Sigma::Plus;
}

bool require_ideal(const NetworkConfig& cfg) {
  if (cfg.ideal()) return true;
  std::cerr << "config error: nonlinear subcommands require loss_eta = 1 and "
               "disorder_delta = 0 (the steady-state model is the ideal network)\n";
  return false;
}

void write_spectrum_csv(const std::string& path, const std::vector<EigenMode>& modes, double L,
                        const NetworkConfig& cfg) {
  CsvWriter csv(path, {"kx", "re_energy_L", "im_energy_L", "sector", "edge_weight_top",
                       "edge_weight_bottom"});
  csv.metadata("geometry", geometry_name(cfg.geometry));
  csv.metadata("Nx", static_cast<double>(cfg.Nx));
  csv.metadata("Ny", static_cast<double>(cfg.Ny));
  csv.metadata("theta0", cfg.theta0);
  for (const auto& m : modes) {
    csv.field(m.kx)
        .field(m.energy.real() * L)
        .field(m.energy.imag() * L)
        .field(sigma_value(m.sector))
        .field(m.edge_weight_top)
        .field(m.edge_weight_bottom);
    csv.end_row();
  }
}

int run_spectrum(const CommonOpts& common, const NetworkConfig& cfg, int sigma, double kx,
                 Manifest& manifest) {
  int ec = kExitOk;
  const Sigma sector = parse_sector(sigma, ec);
  if (ec) return ec;

  std::vector<EigenMode> modes;
  if (cfg.geometry == Geometry::Plane) {
    LinearAssembly a = assemble_plane(cfg, sector);
    if (!cfg.ideal()) a = apply_imperfections(a, cfg);
    modes = closed_spectrum(a, cfg.L).modes;
  } else {
    LinearAssembly a = assemble_closed(cfg, sector, kx);
    if (!cfg.ideal()) a = apply_imperfections(a, cfg);
    auto spec = closed_spectrum(a, cfg.L);
    for (auto& m : spec.modes) m.kx = kx;
    modes = spec.modes;
  }
  write_spectrum_csv(out_path(common, manifest, "spectrum.csv"), modes, cfg.L, cfg);
  return kExitOk;
}

int run_bands(const CommonOpts& common, const NetworkConfig& cfg, int sigma_flag,
              Manifest& manifest) {
  if (cfg.geometry == Geometry::Plane) {
    std::cerr << "config error: bands requires torus or cylinder geometry\n";
    return kExitConfig;
  }
  const auto grid = kx_grid(cfg.Nx);

  const std::string path = out_path(common, manifest, "bands.csv");
  CsvWriter csv(path, {"kx", "re_energy_L", "im_energy_L", "sector", "edge_weight_top",
                       "edge_weight_bottom"});
  csv.metadata("geometry", geometry_name(cfg.geometry));
  csv.metadata("Nx", static_cast<double>(cfg.Nx));
  csv.metadata("Ny", static_cast<double>(cfg.Ny));
  csv.metadata("theta0", cfg.theta0);

  CsvWriter gaps_csv(out_path(common, manifest, "gaps.csv"),
                     {"sector", "gap_lo_L", "gap_hi_L", "width_L"});

  std::vector<Sigma> sectors;
  if (sigma_flag == 0 || sigma_flag == 1) sectors.push_back(Sigma::Plus);
  if (sigma_flag == 0 || sigma_flag == -1) sectors.push_back(Sigma::Minus);
  for (Sigma sector : sectors) {
    const BandStructure band = band_structure(cfg, sector, grid);
    for (std::size_t ik = 0; ik < grid.size(); ++ik)
      for (const auto& m : band.modes[ik]) {
        csv.field(grid[ik])
            .field(m.energy.real() * cfg.L)
            .field(m.energy.imag() * cfg.L)
            .field(sigma_value(sector))
            .field(m.edge_weight_top)
            .field(m.edge_weight_bottom);
        csv.end_row();
      }
    for (const auto& g : band.gaps) {
      gaps_csv.field(sigma_value(sector))
          .field(g.lo * cfg.L)
          .field(g.hi * cfg.L)
          .field(g.width() * cfg.L);
      gaps_csv.end_row();
    }
  }
  return kExitOk;
}

int run_drive_cyl(const CommonOpts& common, const NetworkConfig& cfg, int sigma, double kx,
                  double w_lo, double w_hi, int n, Manifest& manifest) {
  int ec = kExitOk;
  const Sigma sector = parse_sector(sigma, ec);
  if (ec) return ec;
  if (cfg.geometry != Geometry::Cylinder) {
    std::cerr << "config error: drive-cyl requires cylinder geometry\n";
    return kExitConfig;
  }
  const auto grid = make_grid(w_lo, w_hi, n);
  const PhaseScan scan = reflection_phase_scan(cfg, sector, kx, grid);

  const std::string path = out_path(common, manifest, "drive_cyl.csv");
  CsvWriter csv(path, {"omega_d", "kx", "re_A_out", "im_A_out", "delta", "delta_windowed",
                       "ddelta_domega"});
  csv.metadata("r_BM", cfg.r_BM);
  csv.metadata("sector", static_cast<double>(sigma));
  for (const auto& p : scan.points) {
    csv.field(p.omega_d)
        .field(kx)
        .field(p.A_out.real())
        .field(p.A_out.imag())
        .field(p.delta)
        .field(p.delta_windowed)
        .field(p.ddelta_domega);
    csv.end_row();
  }
  if (scan.unwrap_warning) {
    std::cerr << "warning: the omega grid is too coarse to unwrap the phase reliably\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_drive_plane(const CommonOpts& common, const NetworkConfig& cfg, int sigma, double w_lo,
                    double w_hi, int n, double map_at, Manifest& manifest) {
  int ec = kExitOk;
  const Sigma sector = parse_sector(sigma, ec);
  if (ec) return ec;
  if (cfg.geometry != Geometry::Plane) {
    std::cerr << "config error: drive-plane requires plane geometry\n";
    return kExitConfig;
  }
  const auto grid = make_grid(w_lo, w_hi, n);
  const auto scan = driven_plane_scan(cfg, sector, grid, 1.0);

  CsvWriter csv(out_path(common, manifest, "drive_plane.csv"),
                {"omega_d", "transmission", "reflection"});
  csv.metadata("r_BM", cfg.r_BM);
  bool flagged = false;
  for (const auto& s : scan) {
    csv.field(s.omega_d).field(std::norm(s.A_T)).field(std::norm(s.A_R));
    csv.end_row();
    flagged = flagged || s.near_singular;
  }

  // Internal field map at the requested drive frequency.
  const auto sol = solve_driven_plane(cfg, sector, map_at, 1.0);
  CsvWriter field(out_path(common, manifest, "field_map.csv"), {"n", "m", "s", "intensity"});
  field.metadata("omega_d", map_at);
  const IndexMap map(cfg.Ny, cfg.Nx);
  for (int m = 1; m <= cfg.Nx; ++m)
    for (int nn = 1; nn <= cfg.Ny; ++nn)
      for (Dir s : kDirs) {
        field.field(nn).field(m).field(std::string(1, dir_char(s)))
            .field(std::norm(sol.amplitudes[map.at(s, nn, m)]));
        field.end_row();
      }
  return flagged ? kExitNumerical : kExitOk;
}

int run_steady(const CommonOpts& common, const NetworkConfig& cfg, int sigma, double kx,
               double omega_d, double chi_ain2, Manifest& manifest) {
  int ec = kExitOk;
  const Sigma sector = parse_sector(sigma, ec);
  if (ec) return ec;
  if (cfg.geometry != Geometry::Cylinder) {
    std::cerr << "config error: steady requires cylinder geometry\n";
    return kExitConfig;
  }
  if (!require_ideal(cfg)) return kExitConfig;

  SteadyParams p{cfg, sector, kx, omega_d, {0, 0}};
  const double abs_chi = std::abs(cfg.chi);
  p.A_in = abs_chi > 0 ? Complex(std::sqrt(chi_ain2 / abs_chi), 0)
                       : Complex(std::sqrt(chi_ain2), 0);
  const SteadyState st = solve_steady_homotopy(p);
  if (!st.converged) {
    std::cerr << "solver error: steady state did not converge (residual "
              << st.residual_norm << ")\n";
    return kExitNoConvergence;
  }

  const IntensityTable table = observables(st);
  CsvWriter csv(out_path(common, manifest, "steady.csv"), {"n", "s", "chi_intensity"});
  csv.metadata("omega_d", omega_d);
  csv.metadata("kx", kx);
  csv.metadata("chi_ain2", chi_ain2);
  csv.metadata("chi_Np", abs_chi * st.N_p);
  csv.metadata("residual", st.residual_norm);
  const double scale = abs_chi > 0 ? abs_chi : 1.0;
  for (int nn = 1; nn <= cfg.Ny; ++nn)
    for (int s = 0; s < 4; ++s) {
      csv.field(nn).field(std::string(1, dir_char(kDirs[s])))
          .field(scale * table.intensity(nn - 1, s));
      csv.end_row();
    }
  return kExitOk;
}

ContinuationCurve sweep_curve(const NetworkConfig& cfg, Sigma sector, double kx, double omega_d,
                              double drive_max) {
  SteadyParams p{cfg, sector, kx, omega_d, {0, 0}};
  ContinuationOptions opts;
  opts.max_step = 0.1;
  return continuation_sweep(p, 0.0, drive_max, opts);
}

int run_sweep(const CommonOpts& common, const NetworkConfig& cfg, int sigma, double kx,
              double omega_d, double drive_max, Manifest& manifest) {
  int ec = kExitOk;
  const Sigma sector = parse_sector(sigma, ec);
  if (ec) return ec;
  if (cfg.geometry != Geometry::Cylinder || !require_ideal(cfg)) return kExitConfig;
  if (std::abs(cfg.chi) == 0.0) {
    std::cerr << "config error: sweep requires chi != 0\n";
    return kExitConfig;
  }

  const ContinuationCurve curve = sweep_curve(cfg, sector, kx, omega_d, drive_max);
  CsvWriter csv(out_path(common, manifest, "sweep.csv"),
                {"chi_ain2", "chi_Np", "branch_id", "fold_flag", "stable_flag"});
  csv.metadata("omega_d", omega_d);
  csv.metadata("kx", kx);
  csv.metadata("r_BM", cfg.r_BM);
  for (const auto& pt : curve.points) {
    csv.field(pt.drive_intensity)
        .field(pt.total_intensity)
        .field(pt.branch_id)
        .field(pt.fold ? 1 : 0)
        .field(pt.state.stable ? (*pt.state.stable ? 1 : 0) : -1);
    csv.end_row();
  }
  if (curve.truncated) {
    std::cerr << "warning: continuation step underflow, branch truncated\n";
    return kExitNumerical;
  }
  return kExitOk;
}

std::optional<SteadyState> locate_state(const NetworkConfig& cfg, Sigma sector, double kx,
                                        double omega_d, double chi_np, double drive_max) {
  SteadyParams p{cfg, sector, kx, omega_d, {0, 0}};
  const ContinuationCurve curve = sweep_curve(cfg, sector, kx, omega_d, drive_max);
  return state_at_total_intensity(curve, p, chi_np);
}

int run_stability(const CommonOpts& common, const NetworkConfig& cfg, int sigma, double kx,
                  double omega_d, double chi_np, double px, double drive_max,
                  Manifest& manifest) {
  int ec = kExitOk;
  const Sigma sector = parse_sector(sigma, ec);
  if (ec) return ec;
  if (cfg.geometry != Geometry::Cylinder || !require_ideal(cfg)) return kExitConfig;

  const auto st = locate_state(cfg, sector, kx, omega_d, chi_np, drive_max);
  if (!st) {
    std::cerr << "solver error: no steady state with |chi| N_p = " << chi_np
              << " on the traced branch\n";
    return kExitNoConvergence;
  }
  const NearAxisSpectrum nas = near_axis_spectrum(*st, px);

  CsvWriter csv(out_path(common, manifest, "stability_roots.csv"), {"re_Ef", "im_Ef"});
  csv.metadata("omega_d", omega_d);
  csv.metadata("p_x", px);
  csv.metadata("chi_Np", chi_np);
  csv.metadata("max_im", nas.max_im);
  csv.metadata("stable", nas.stable ? 1.0 : 0.0);
  for (const Complex& r : nas.roots) {
    csv.field(r.real()).field(r.imag());
    csv.end_row();
  }
  std::cout << "stable = " << (nas.stable ? "yes" : "no") << " (max Im = " << nas.max_im
            << ", roots tracked = " << nas.roots.size() << ", lost = " << nas.lost << ")\n";
  return nas.lost == 0 ? kExitOk : kExitNumerical;
}

int run_squeeze(const CommonOpts& common, const NetworkConfig& cfg, int sigma, double kx,
                double omega_d, double chi_np, double px, double wf_lo, double wf_hi, int n,
                double drive_max, Manifest& manifest) {
  int ec = kExitOk;
  const Sigma sector = parse_sector(sigma, ec);
  if (ec) return ec;
  if (cfg.geometry != Geometry::Cylinder || !require_ideal(cfg)) return kExitConfig;

  const auto st = locate_state(cfg, sector, kx, omega_d, chi_np, drive_max);
  if (!st) {
    std::cerr << "solver error: no steady state with |chi| N_p = " << chi_np
              << " on the traced branch\n";
    return kExitNoConvergence;
  }
  const auto grid = make_grid(wf_lo, wf_hi, n);
  const BogoliubovResponse resp = bogoliubov_response(*st, px, 1.0, 0.0, grid);

  CsvWriter csv(out_path(common, manifest, "squeeze.csv"),
                {"omega_f", "S_plus", "S_minus", "re_M11", "im_M11", "re_M21", "im_M21"});
  csv.metadata("p_x", px);
  csv.metadata("q_x", resp.q_x);
  csv.metadata("omega_d", omega_d);
  csv.metadata("chi_Np", chi_np);
  bool flagged = false;
  for (int i = 0; i < n; ++i) {
    csv.field(grid[i])
        .field(resp.S_plus(i))
        .field(resp.S_minus(i))
        .field(resp.M_io[i](0, 0).real())
        .field(resp.M_io[i](0, 0).imag())
        .field(resp.M_io[i](1, 0).real())
        .field(resp.M_io[i](1, 0).imag());
    csv.end_row();
    flagged = flagged || resp.near_singular[i];
  }

  // Fluctuation field profile at the strongest response.
  int ipk = 0;
  for (int i = 0; i < n; ++i)
    if (resp.S_plus(i) > resp.S_plus(ipk)) ipk = i;
  CsvWriter field(out_path(common, manifest, "fluct_map.csv"),
                  {"n", "s", "abs_delta_a_p", "abs_delta_a_q"});
  field.metadata("omega_f", grid[ipk]);
  const IndexMap map(cfg.Ny);
  for (int nn = 1; nn <= cfg.Ny; ++nn)
    for (Dir s : kDirs) {
      field.field(nn).field(std::string(1, dir_char(s)))
          .field(std::abs(resp.delta_a_p(map.at(s, nn), ipk)))
          .field(std::abs(resp.delta_a_q_conj(map.at(s, nn), ipk)));
      field.end_row();
    }
  return flagged ? kExitNumerical : kExitOk;
}

int run_fp(const CommonOpts& common, double omega, double rbm, double theta0, double chi,
           const std::string& sweep_y, double chi_ain2, bool with_roots, Manifest& manifest) {
  FPParams p;
  p.omega_d = omega;
  p.r_BM = rbm;
  p.theta0 = theta0;
  p.chi = chi;

  if (!sweep_y.empty()) {
    double lo = 0, hi = 0;
    int n = 0;
    if (std::sscanf(sweep_y.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 2) {
      std::cerr << "config error: --sweep-y expects lo:hi:n\n";
      return kExitConfig;
    }
    CsvWriter csv(out_path(common, manifest, "fp_curve.csv"), {"x", "y", "stable"});
    csv.metadata("omega_d", omega);
    csv.metadata("r_BM", rbm);
    for (int i = 0; i < n; ++i) {
      const double y = lo + (hi - lo) * i / (n - 1);
      const double x = fp_input_intensity(y, p);
      int stable = -1;
      if (with_roots && x > 0) {
        FPState s;
        s.y = y;
        s.x = x;
        const double k = p.omega_d - 3.0 * y;
        const double t = std::sqrt(1 - rbm * rbm);
        s.a_r = t * std::sqrt(x) /
                (std::exp(Complex(0, -k * p.L)) - kI * rbm * std::exp(Complex(0, k * p.L)));
        const FPStability fs = fp_stability(s, p);
        if (fs.consistent) stable = fs.stable ? 1 : 0;
      }
      csv.field(x).field(y).field(stable);
      csv.end_row();
    }
    return kExitOk;
  }

  // Solve all steady states at one drive and report the resonance roots.
  const auto states = fp_solve(std::sqrt(std::abs(chi_ain2 / chi)), p);
  CsvWriter csv(out_path(common, manifest, "fp_states.csv"), {"x", "y", "stable"});
  CsvWriter roots(out_path(common, manifest, "fp_roots.csv"), {"y", "re_Ef", "im_Ef"});
  bool flagged = false;
  for (const auto& s : states) {
    const FPStability fs = fp_stability(s, p);
    flagged = flagged || !fs.consistent;
    csv.field(s.x).field(s.y).field(fs.consistent ? (fs.stable ? 1 : 0) : -1);
    csv.end_row();
    for (const Complex& r : fs.roots) {
      roots.field(s.y).field(r.real()).field(r.imag());
      roots.end_row();
    }
  }
  return flagged ? kExitNumerical : kExitOk;
}

int run_validate(const CommonOpts& common) {
  if (common.config_path.empty()) {
    std::cerr << "config error: --config PATH is required\n";
    return kExitConfig;
  }
  const ConfigParse parsed = load_config(common.config_path);
  if (!parsed.ok()) return config_error(parsed.errors);
  std::cout << config_to_json(parsed.config, parsed.has_seed) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D passive optical network simulator"};
  app.require_subcommand(1);

  CommonOpts common;
  apply_env_overrides(common);
  app.add_option("--config", common.config_path, "network config JSON");
  app.add_option("--out", common.out_dir, "output directory");
  app.add_option("--format", common.format, "output format")->check(CLI::IsMember({"csv"}));
  std::uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "override rng_seed");
  app.add_option("--threads", common.threads, "worker threads (0 = auto)");

  int sigma = 1;
  double kx = 0.0, omega_d = 0.0, w_lo = -kPi, w_hi = kPi;
  int npts = 2000;
  double chi_ain2 = 0.0, chi_np = 0.0, px = 0.0, drive_max = 40.0;
  double wf_lo = 0.02, wf_hi = 1.6;
  double map_at = 0.0;
  double fp_omega = 3 * kPi / 4, fp_rbm = 0.9, fp_theta0 = 0.0, fp_chi = 1.0;
  std::string sweep_y;
  bool fp_roots = false;

  auto* c_spectrum = app.add_subcommand("spectrum", "closed-network spectrum at one kx");
  c_spectrum->fallthrough();
  c_spectrum->add_option("--sigma", sigma);
  c_spectrum->add_option("--kx", kx);

  auto* c_bands = app.add_subcommand("bands", "band structure over the kx grid");
  c_bands->fallthrough();
  int bands_sigma = 0;
  c_bands->add_option("--sigma", bands_sigma, "+1, -1 or 0 for both");

  auto* c_dcyl = app.add_subcommand("drive-cyl", "cylinder reflection-phase spectroscopy");
  c_dcyl->fallthrough();
  c_dcyl->add_option("--sigma", sigma);
  c_dcyl->add_option("--kx", kx);
  c_dcyl->add_option("--omega-min", w_lo);
  c_dcyl->add_option("--omega-max", w_hi);
  c_dcyl->add_option("--points", npts);

  auto* c_dplane = app.add_subcommand("drive-plane", "plane transmission and field maps");
  c_dplane->fallthrough();
  c_dplane->add_option("--sigma", sigma);
  c_dplane->add_option("--omega-min", w_lo);
  c_dplane->add_option("--omega-max", w_hi);
  c_dplane->add_option("--points", npts);
  c_dplane->add_option("--map-at", map_at, "omega_d for the internal field map");

  auto* c_steady = app.add_subcommand("steady", "one nonlinear steady state");
  c_steady->fallthrough();
  c_steady->add_option("--sigma", sigma);
  c_steady->add_option("--kx", kx);
  c_steady->add_option("--omega-d", omega_d)->required();
  c_steady->add_option("--chi-ain2", chi_ain2, "|chi| |A_in|^2")->required();

  auto* c_sweep = app.add_subcommand("sweep", "pseudo-arclength continuation curve");
  c_sweep->fallthrough();
  c_sweep->add_option("--sigma", sigma);
  c_sweep->add_option("--kx", kx);
  c_sweep->add_option("--omega-d", omega_d)->required();
  c_sweep->add_option("--drive-max", drive_max, "stop at |chi||A_in|^2 = this");

  auto* c_stab = app.add_subcommand("stability", "det-D roots around a steady state");
  c_stab->fallthrough();
  c_stab->add_option("--sigma", sigma);
  c_stab->add_option("--kx", kx);
  c_stab->add_option("--omega-d", omega_d)->required();
  c_stab->add_option("--chi-np", chi_np, "|chi| N_p of the state")->required();
  c_stab->add_option("--px", px)->required();
  c_stab->add_option("--drive-max", drive_max);

  auto* c_squeeze = app.add_subcommand("squeeze", "squeezing spectra around a steady state");
  c_squeeze->fallthrough();
  c_squeeze->add_option("--sigma", sigma);
  c_squeeze->add_option("--kx", kx);
  c_squeeze->add_option("--omega-d", omega_d)->required();
  c_squeeze->add_option("--chi-np", chi_np)->required();
  c_squeeze->add_option("--px", px)->required();
  c_squeeze->add_option("--omega-f-min", wf_lo);
  c_squeeze->add_option("--omega-f-max", wf_hi);
  c_squeeze->add_option("--points", npts);
  c_squeeze->add_option("--drive-max", drive_max);

  auto* c_fp = app.add_subcommand("fp", "single Kerr cavity: bistability and stability");
  c_fp->fallthrough();
  c_fp->add_option("--omega", fp_omega);
  c_fp->add_option("--rbm", fp_rbm);
  c_fp->add_option("--theta0", fp_theta0);
  c_fp->add_option("--chi", fp_chi);
  c_fp->add_option("--sweep-y", sweep_y, "lo:hi:n sweep of y = chi |a_r|^2");
  c_fp->add_option("--chi-ain2", chi_ain2);
  c_fp->add_flag("--roots", fp_roots, "also classify stability along the sweep");

  auto* c_validate = app.add_subcommand("validate", "parse a config and echo it normalized");
  c_validate->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() > 0) common.seed = seed_flag;
  set_thread_count(common.threads);

  Manifest manifest;
  int ec = kExitOk;
  try {
    if (*c_validate) return run_validate(common);

    if (*c_fp) {
      manifest.subcommand = "fp";
      manifest.flags = {{"omega", fp_omega}, {"rbm", fp_rbm},       {"theta0", fp_theta0},
                        {"chi", fp_chi},     {"sweep_y", sweep_y},  {"chi_ain2", chi_ain2}};
      ec = run_fp(common, fp_omega, fp_rbm, fp_theta0, fp_chi, sweep_y, chi_ain2, fp_roots,
                  manifest);
      manifest.write(common.out_dir);
      return ec;
    }

    const auto cfg = load(common, manifest, ec);
    if (!cfg) return ec;

    if (*c_spectrum) {
      manifest.subcommand = "spectrum";
      manifest.flags = {{"sigma", sigma}, {"kx", kx}};
      ec = run_spectrum(common, *cfg, sigma, kx, manifest);
    } else if (*c_bands) {
      manifest.subcommand = "bands";
      manifest.flags = {{"sigma", bands_sigma}};
      ec = run_bands(common, *cfg, bands_sigma, manifest);
    } else if (*c_dcyl) {
      manifest.subcommand = "drive-cyl";
      manifest.flags = {{"sigma", sigma},     {"kx", kx},      {"omega_min", w_lo},
                        {"omega_max", w_hi},  {"points", npts}};
      ec = run_drive_cyl(common, *cfg, sigma, kx, w_lo, w_hi, npts, manifest);
    } else if (*c_dplane) {
      manifest.subcommand = "drive-plane";
      manifest.flags = {{"sigma", sigma},    {"omega_min", w_lo}, {"omega_max", w_hi},
                        {"points", npts},    {"map_at", map_at}};
      ec = run_drive_plane(common, *cfg, sigma, w_lo, w_hi, npts, map_at, manifest);
    } else if (*c_steady) {
      manifest.subcommand = "steady";
      manifest.flags = {{"sigma", sigma}, {"kx", kx}, {"omega_d", omega_d},
                        {"chi_ain2", chi_ain2}};
      ec = run_steady(common, *cfg, sigma, kx, omega_d, chi_ain2, manifest);
    } else if (*c_sweep) {
      manifest.subcommand = "sweep";
      manifest.flags = {{"sigma", sigma}, {"kx", kx}, {"omega_d", omega_d},
                        {"drive_max", drive_max}};
      ec = run_sweep(common, *cfg, sigma, kx, omega_d, drive_max, manifest);
    } else if (*c_stab) {
      manifest.subcommand = "stability";
      manifest.flags = {{"sigma", sigma},   {"kx", kx}, {"omega_d", omega_d},
                        {"chi_np", chi_np}, {"px", px}, {"drive_max", drive_max}};
      ec = run_stability(common, *cfg, sigma, kx, omega_d, chi_np, px, drive_max, manifest);
    } else if (*c_squeeze) {
      manifest.subcommand = "squeeze";
      manifest.flags = {{"sigma", sigma},       {"kx", kx},           {"omega_d", omega_d},
                        {"chi_np", chi_np},     {"px", px},           {"omega_f_min", wf_lo},
                        {"omega_f_max", wf_hi}, {"points", npts}};
      ec = run_squeeze(common, *cfg, sigma, kx, omega_d, chi_np, px, wf_lo, wf_hi, npts,
                       drive_max, manifest);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  manifest.write(common.out_dir);
  return ec;
}
