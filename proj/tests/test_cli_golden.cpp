// Golden-schema and determinism checks for the CLI, run as a subprocess.
// argv[1] = path to the optnet binary, argv[2] = golden directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAIL: " << what << "\n";
  }
}

int run(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string header_of(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') return line;
  return "";
}

int count_rows(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  int rows = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: optnet_cli_tests <optnet-binary> <golden-dir>\n";
    return 1;
  }
  const std::string bin = argv[1];
  const fs::path golden = argv[2];
  const fs::path work = fs::temp_directory_path() / "optnet_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);

  const fs::path cfg = work / "config.json";
  {
    std::ofstream out(cfg);
    out << R"({"Nx": 6, "Ny": 4, "theta0": 1.5707963267948966,
               "geometry": "cylinder", "r_BM": 0.9, "chi": -1.0})";
  }
  const fs::path plane_cfg = work / "plane.json";
  {
    std::ofstream out(plane_cfg);
    out << R"({"Nx": 4, "Ny": 4, "theta0": 1.5707963267948966,
               "geometry": "plane", "r_BM": 0.9})";
  }

  struct Case {
    std::string name;
    std::string args;
    std::string output;
  };
  const std::vector<Case> cases = {
      {"spectrum", "spectrum --config " + cfg.string() + " --kx 0.26", "spectrum.csv"},
      {"bands", "bands --config " + cfg.string(), "bands.csv"},
      {"drive-cyl",
       "drive-cyl --config " + cfg.string() + " --kx 0.26 --points 200", "drive_cyl.csv"},
      {"drive-plane",
       "drive-plane --config " + plane_cfg.string() + " --points 100 --map-at 0.3",
       "drive_plane.csv"},
      {"steady",
       "steady --config " + cfg.string() + " --kx 0.26 --omega-d 0.9 --chi-ain2 0.01",
       "steady.csv"},
      {"sweep",
       "sweep --config " + cfg.string() + " --kx 0.26 --omega-d 0.9 --drive-max 0.2",
       "sweep.csv"},
      {"fp", "fp --omega 2.3562 --rbm 0.9 --sweep-y 0:3:200", "fp_curve.csv"},
  };

  for (const auto& c : cases) {
    const fs::path out1 = work / (c.name + "_run1");
    const fs::path out2 = work / (c.name + "_run2");
    const int rc1 = run(bin + " " + c.args + " --out " + out1.string());
    const int rc2 = run(bin + " " + c.args + " --out " + out2.string());
    check(rc1 == 0, c.name + ": first run exit code");
    check(rc2 == 0, c.name + ": second run exit code");
    const std::string a = slurp(out1 / c.output);
    const std::string b = slurp(out2 / c.output);
    check(!a.empty(), c.name + ": output exists");
    check(a == b, c.name + ": byte-identical across reruns");
    check(fs::exists(out1 / "run_manifest.json"), c.name + ": manifest written");

    const fs::path golden_file = golden / (c.name + ".header");
    if (fs::exists(golden_file)) {
      std::string expected = slurp(golden_file);
      while (!expected.empty() && (expected.back() == '\n' || expected.back() == '\r'))
        expected.pop_back();
      check(header_of(a) == expected, c.name + ": header matches golden schema (got '" +
                                          header_of(a) + "', want '" + expected + "')");
    }
    check(count_rows(a) > 0, c.name + ": has data rows");
  }

  // Error paths: missing field and unreadable file must exit with code 2.
  {
    const fs::path bad = work / "bad.json";
    std::ofstream(bad) << R"({"Ny": 4, "theta0": 0.5, "geometry": "torus"})";
    const int rc = run(bin + " bands --config " + bad.string() + " --out " +
                       (work / "bad_out").string() + " 2>/dev/null");
    check(WEXITSTATUS(rc) == 2, "missing Nx exits with code 2");
    const int rc2 = run(bin + " bands --config /nonexistent.json --out " +
                        (work / "bad_out2").string() + " 2>/dev/null");
    check(WEXITSTATUS(rc2) == 2, "unreadable config exits with code 2");
    const int rc3 =
        run(bin + " frobnicate 2>/dev/null");
    check(WEXITSTATUS(rc3) == 2, "unknown subcommand exits with code 2");
  }

  // Disorder without seed fails; with seed is deterministic.
  {
    const fs::path dis = work / "disorder.json";
    std::ofstream(dis) << R"({"Nx": 4, "Ny": 4, "theta0": 1.57, "geometry": "torus",
                              "disorder_delta": 0.2})";
    const int rc = run(bin + " spectrum --config " + dis.string() + " --out " +
                       (work / "dis_out").string() + " 2>/dev/null");
    check(WEXITSTATUS(rc) == 2, "disorder without seed exits with code 2");
    const int rc2 = run(bin + " spectrum --config " + dis.string() + " --seed 7 --out " +
                        (work / "dis_a").string());
    const int rc3 = run(bin + " spectrum --config " + dis.string() + " --seed 7 --out " +
                        (work / "dis_b").string());
    check(rc2 == 0 && rc3 == 0, "seeded disorder runs succeed");
    check(slurp(work / "dis_a" / "spectrum.csv") == slurp(work / "dis_b" / "spectrum.csv"),
          "seeded disorder output is deterministic");
  }

  if (failures == 0) std::cout << "cli golden tests passed\n";
  return failures == 0 ? 0 : 1;
}
