#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "upconv_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const std::string cmd = std::string("\"") + UPCONV_BINARY + "\" " + args + " > \"" +
                          out.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out)};
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

// Narrow scan so the CLI tests stay quick.
const std::string kPlan = " --start 1945 --stop 1955 --step 0.05";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").status == 2);
  CHECK(run("no-such-command").status == 2);
  CHECK(run("fom").status == 2);  // --pump-power is required
  CHECK(run("fom --pump-power abc").status == 2);
  CHECK(run("scan --input " + path("missing.csv") + " --out " + path("x.csv")).status == 2);
  CHECK(run("nep --nep-convention sqrtD").status == 2);
  CHECK(run("--help").status == 0);
}

TEST_CASE("config errors exit with 3") {
  std::ofstream(path("bad.json")) << R"({"waveguide": {"length_mm": -5}})";
  const Run r = run("--config " + path("bad.json") + " fom --pump-power 30");
  CHECK(r.status == 3);
  CHECK(r.out.find("waveguide.length_mm") != std::string::npos);
  std::ofstream(path("typo.json")) << R"({"waveguid": {}})";
  CHECK(run("--config " + path("typo.json") + " config").status == 3);
  CHECK(run("--config " + path("absent.json") + " config").status == 3);
}

TEST_CASE("numerical errors exit with 4") {
  const Run r = run("fom --pump-power 0");
  CHECK(r.status == 4);
  CHECK(r.out.find("NEP") != std::string::npos);
  std::ofstream(path("bad_points.csv")) << "pump_mw,efficiency\n10,0.9\n40,0.1\n";
  CHECK(run("fom --pump-power 30 --conversion-points " + path("bad_points.csv")).status == 4);
}

TEST_CASE("fom reproduces the calibration points") {
  const Run r = run("--report " + path("fom58.json") + " fom --pump-power 58");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(slurp(path("fom58.json")));
  CHECK(j["efficiency"].get<double>() == doctest::Approx(0.286).epsilon(1e-9));
  CHECK(j["noise_cps"].get<double>() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(j["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("nep at the spectrometer operating point") {
  const Run r = run("--report " + path("nep.json") + " nep --efficiency 0.2 --noise 60");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(slurp(path("nep.json")));
  CHECK(j["nep_dbm"].get<double>() == doctest::Approx(-143.04).epsilon(1e-4));
}

TEST_CASE("synth, scan, deconvolve and detect pipeline") {
  REQUIRE(run("synth --kind comb --out " + path("comb.csv") + kPlan).status == 0);
  CHECK(fs::exists(path("comb.json")));
  REQUIRE(run("--seed 11 scan --input " + path("comb.csv") + " --out " + path("scan_a.csv") + kPlan)
              .status == 0);
  REQUIRE(run("--seed 11 --threads 1 scan --input " + path("comb.csv") + " --out " +
              path("scan_b.csv") + kPlan)
              .status == 0);
  REQUIRE(run("--seed 12 scan --input " + path("comb.csv") + " --out " + path("scan_c.csv") + kPlan)
              .status == 0);
  const std::string a = slurp(path("scan_a.csv"));
  CHECK(a == slurp(path("scan_b.csv")));
  CHECK(a != slurp(path("scan_c.csv")));
  CHECK(a.find("# config_hash: ") != std::string::npos);
  CHECK(a.find("# seed: 11") != std::string::npos);
  CHECK(a.find("pump_nm,signal_nm_mapped,vbg_center_nm,expected_rate_cps,counts,dwell_s") !=
        std::string::npos);
  const auto report = nlohmann::json::parse(slurp(path("scan_a.json")));
  CHECK(report["seed"].get<std::uint64_t>() == 11);

  REQUIRE(run("kernel --out " + path("kernel.csv") + kPlan).status == 0);
  REQUIRE(run("deconvolve --raw " + path("scan_a.csv") + " --kernel " + path("kernel.csv") +
              " --out " + path("est.csv"))
              .status == 0);
  const auto est = nlohmann::json::parse(slurp(path("est.json")));
  CHECK(est["stop_reason"].get<std::string>() == "discrepancy_reached");
  CHECK(slurp(path("est.csv")).find("wavelength_nm,power_w_per_nm") != std::string::npos);

  REQUIRE(run("deconvolve --raw " + path("scan_a.csv") + " --kernel model --out " +
              path("est_model.csv") + kPlan)
              .status == 0);
  CHECK(run("deconvolve --raw " + path("scan_a.csv") + " --out " + path("est2.csv")).status == 2);

  const Run d = run("--report " + path("detect.json") + " detect --raw " + path("scan_a.csv"));
  REQUIRE(d.status == 0);
  CHECK(nlohmann::json::parse(slurp(path("detect.json")))["detected"].get<bool>());
}

TEST_CASE("config command round trips the bundled defaults") {
  const fs::path bundled = fs::path(UPCONV_SOURCE_DIR) / "configs" / "paper-defaults.json";
  REQUIRE(run("config --out " + path("defaults.json")).status == 0);
  CHECK(slurp(path("defaults.json")) == slurp(bundled));
  const Run r = run("--config " + bundled.string() + " config");
  CHECK(r.status == 0);
}
