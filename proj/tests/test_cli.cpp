#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string cli_path() {
  const char* env = std::getenv("VPATCH_CLI");
  REQUIRE(env != nullptr);
  return env;
}

fs::path workspace() {
  const fs::path dir = fs::current_path() / "cli_workspace";
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  REQUIRE(out.good());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json three_layer_config() {
  json j;
  j["schema_version"] = 1;
  j["family"] = "three_layer";
  j["m"] = 2;
  j["b2"] = 0.5;
  j["theta2"] = -5.0;
  j["truncation"] = 12;
  j["quadrature_nodes"] = 128;
  j["n_max"] = 30;
  j["solver"] = {{"step", 5e-4}, {"max_steps", 2}, {"newton_tol", 1e-11},
                 {"max_newton_iters", 12}, {"mode", "newton"}};
  return j;
}

}  // namespace

TEST_CASE("certification round trip and window rejections") {
  const fs::path ws = workspace();
  fs::remove_all(ws);
  fs::create_directories(ws);

  write_file(ws / "three.json", three_layer_config().dump(2));
  CHECK(run("bifurcate --config " + (ws / "three.json").string() +
            " --out " + (ws / "cert3").string()) == 0);
  const json cert = json::parse(read_file(ws / "cert3" / "certificate.json"));
  CHECK(cert.at("family") == "three_layer");
  CHECK(std::abs(cert.at("parameters").at("b3").get<double>() - 0.172607) < 1e-4);
  CHECK(std::abs(cert.at("theta_star").get<double>() - 8.3912) < 2e-3);
  CHECK(cert.at("certificates").at("det_CM33").get<double>() > 0.0);
  CHECK(cert.contains("config_hash"));
  CHECK(cert.at("tool_version").is_string());

  json two = three_layer_config();
  two["family"] = "two_layer";
  two["b"] = 0.3;
  two["root"] = "plus";
  write_file(ws / "two.json", two.dump(2));
  CHECK(run("bifurcate --config " + (ws / "two.json").string() + " --out " +
            (ws / "cert2").string()) == 0);
  const json cert2 = json::parse(read_file(ws / "cert2" / "certificate.json"));
  CHECK(std::abs(cert2.at("theta_star").get<double>() - 0.493625) < 1e-5);

  // b beyond the critical radius: exit 2
  json too_large = two;
  too_large["b"] = 0.5;
  write_file(ws / "too_large.json", too_large.dump(2));
  CHECK(run("bifurcate --config " + (ws / "too_large.json").string() + " --out " +
            (ws / "certx").string()) == 2);

  // explicit zero-mean strength theta = b^2: typed refusal, exit 2
  json zero_mean = two;
  zero_mean["theta"] = 0.09;
  write_file(ws / "zero_mean.json", zero_mean.dump(2));
  CHECK(run("bifurcate --config " + (ws / "zero_mean.json").string() + " --out " +
            (ws / "certy").string()) == 2);

  // window violation for the three-layer family: exit 2
  json bad_window = three_layer_config();
  bad_window["theta2"] = -3.0;
  write_file(ws / "bad_window.json", bad_window.dump(2));
  CHECK(run("bifurcate --config " + (ws / "bad_window.json").string() + " --out " +
            (ws / "certz").string()) == 2);

  // missing config file: exit 3; unknown flag: exit 2
  CHECK(run("bifurcate --config " + (ws / "absent.json").string() + " --out " +
            (ws / "certw").string()) == 3);
  CHECK(run("bifurcate --no-such-flag") == 2);
}

TEST_CASE("continuation, verification, sampling and spectrum") {
  const fs::path ws = workspace();  // reuses the certificates from the previous case
  REQUIRE(fs::exists(ws / "cert3" / "certificate.json"));

  const std::string cfg = (ws / "three.json").string();
  const std::string cert = (ws / "cert3" / "certificate.json").string();

  CHECK(run("continue --config " + cfg + " --certificate " + cert + " --out " +
            (ws / "branch").string()) == 0);
  REQUIRE(fs::exists(ws / "branch" / "branch.json"));
  REQUIRE(fs::exists(ws / "branch" / "branch.csv"));

  const json branch = json::parse(read_file(ws / "branch" / "branch.json"));
  CHECK(branch.at("states").size() == 2);
  CHECK(branch.at("summary").at("stop_reason") == "max_steps");
  const std::string csv = read_file(ws / "branch" / "branch.csv");
  CHECK(csv.rfind("# tool_version=", 0) == 0);
  CHECK(csv.find("index,s,theta,b3,residual") != std::string::npos);
  CHECK(csv.find("config_hash=") != std::string::npos);

  // byte-identical reruns
  CHECK(run("continue --config " + cfg + " --certificate " + cert + " --out " +
            (ws / "branch_rerun").string()) == 0);
  CHECK(read_file(ws / "branch_rerun" / "branch.json") ==
        read_file(ws / "branch" / "branch.json"));
  CHECK(read_file(ws / "branch_rerun" / "branch.csv") ==
        read_file(ws / "branch" / "branch.csv"));

  // verification passes on the fresh branch
  CHECK(run("verify --record " + (ws / "branch" / "branch.json").string() + " --out " +
            (ws / "report").string()) == 0);
  const json report = json::parse(read_file(ws / "report" / "report.json"));
  CHECK(report.at("all_pass").get<bool>());

  // stricter quadrature still passes
  CHECK(run("verify --record " + (ws / "branch" / "branch.json").string() +
            " --strict 4 --out " + (ws / "report4").string()) == 0);

  // hand-corrupted coefficient: exit 1 and the failing metric is named
  json corrupted = branch;
  corrupted["states"][1]["coefficients"][1][1] = "0x1.0p-9";
  write_file(ws / "corrupted.json", corrupted.dump(2));
  CHECK(run("verify --record " + (ws / "corrupted.json").string() + " --out " +
            (ws / "report_bad").string()) == 1);
  const json bad_report = json::parse(read_file(ws / "report_bad" / "report.json"));
  CHECK_FALSE(bad_report.at("all_pass").get<bool>());
  bool residual_named = false;
  for (const auto& f : bad_report.at("states").at(1).at("failures"))
    residual_named = residual_named || f.get<std::string>() == "residual";
  CHECK(residual_named);

  // certificate/config mismatch: exit 2
  json other = three_layer_config();
  other["theta2"] = -4.5;
  write_file(ws / "other.json", other.dump(2));
  CHECK(run("continue --config " + (ws / "other.json").string() + " --certificate " + cert +
            " --out " + (ws / "mismatch").string()) == 2);

  // missing record: exit 3
  CHECK(run("verify --record " + (ws / "missing_record.json").string() + " --out " +
            (ws / "reportx").string()) == 3);

  // field sampling
  CHECK(run("sample --record " + (ws / "branch" / "branch.json").string() +
            " --state 0 --nx 9 --ny 9 --xmin -2 --xmax 2 --ymin -2 --ymax 2 --out " +
            (ws / "fields").string()) == 0);
  const std::string fields = read_file(ws / "fields" / "fields.csv");
  CHECK(fields.find("x,y,flag,ux,uy,speed,psi") != std::string::npos);
  CHECK(std::count(fields.begin(), fields.end(), '\n') == 3 + 81);
  REQUIRE(fs::exists(ws / "fields" / "boundaries.csv"));

  // zero-circulation solution: exterior field samples vanish
  {
    std::istringstream lines(fields);
    std::string line;
    int exterior_rows = 0;
    while (std::getline(lines, line)) {
      if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
      double x, y, ux, uy, speed;
      int flag;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%d,%lf,%lf,%lf", &x, &y, &flag, &ux, &uy,
                          &speed) == 6);
      if (flag == 0 && std::hypot(x, y) > 1.5) {
        ++exterior_rows;
        CHECK(speed < 1e-6);
      }
    }
    CHECK(exterior_rows > 10);
  }

  // boundary-crossing grid points are flagged, not fatal: sample exactly at
  // the outer boundary node of angle zero
  double rho0 = 1.0;
  for (const auto& c : branch.at("states").at(0).at("coefficients").at(0))
    rho0 += std::strtod(c.get<std::string>().c_str(), nullptr);
  char rho_buf[64];
  std::snprintf(rho_buf, sizeof(rho_buf), "%.17g", rho0);
  CHECK(run("sample --record " + (ws / "branch" / "branch.json").string() +
            " --state 0 --nx 1 --ny 1 --xmin " + rho_buf + " --xmax " + rho_buf +
            " --ymin 0 --ymax 0 --out " + (ws / "fields_flagged").string()) == 0);
  const std::string flagged = read_file(ws / "fields_flagged" / "fields.csv");
  CHECK(flagged.find(",1,nan") != std::string::npos);

  // spectrum dump; --n-max overrides the table depth
  CHECK(run("spectrum --config " + cfg + " --out " + (ws / "spec").string()) == 0);
  const std::string spec = read_file(ws / "spec" / "spectrum.csv");
  CHECK(spec.find("n,frequency,") != std::string::npos);
  CHECK(std::count(spec.begin(), spec.end(), '\n') == 3 + 30);
  CHECK(run("spectrum --config " + cfg + " --n-max 7 --out " + (ws / "spec7").string()) == 0);
  const std::string spec7 = read_file(ws / "spec7" / "spectrum.csv");
  CHECK(std::count(spec7.begin(), spec7.end(), '\n') == 3 + 7);

  // certification itself is byte-deterministic
  CHECK(run("bifurcate --config " + cfg + " --out " + (ws / "cert3_rerun").string()) == 0);
  CHECK(read_file(ws / "cert3_rerun" / "certificate.json") ==
        read_file(ws / "cert3" / "certificate.json"));
}

TEST_CASE("nash-moser continuation mode records traces") {
  const fs::path ws = workspace();
  REQUIRE(fs::exists(ws / "cert3" / "certificate.json"));
  const std::string cfg = (ws / "three.json").string();
  const std::string cert = (ws / "cert3" / "certificate.json").string();

  CHECK(run("continue --config " + cfg + " --certificate " + cert +
            " --mode nash-moser --max-steps 1 --out " + (ws / "branch_nm").string()) == 0);
  const json branch = json::parse(read_file(ws / "branch_nm" / "branch.json"));
  REQUIRE(branch.at("states").size() == 1);
  CHECK(branch.at("states").at(0).at("residual").get<double>() < 1e-11);
  REQUIRE(branch.contains("nash_moser_traces"));
  const json& trace = branch.at("nash_moser_traces").at(0);
  CHECK(trace.at("residual_norm").size() == trace.at("correction_norm").size());
  CHECK(trace.at("residual_norm").size() == trace.at("cutoff").size());
  CHECK(!trace.at("residual_norm").empty());
}
