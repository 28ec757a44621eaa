// Command-line front end: bifurcation-point certification, branch
// continuation, solution verification, field sampling and spectrum dumps for
// nested vortex patch systems. All outputs are deterministic: no timestamps,
// fixed float formatting, every file carries the config hash and tool version.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "vpatch/contour.hpp"
#include "vpatch/solver.hpp"
#include "vpatch/spectral.hpp"
#include "vpatch/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vpatch;

namespace {

// ---------------------------------------------------------------------------
// exit codes: 0 success, 1 verification failure, 2 parameter-window rejection,
// 3 I/O, 4 solver non-convergence
// ---------------------------------------------------------------------------

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::b_too_large:
    case ErrorCode::param_window:
    case ErrorCode::no_root:
    case ErrorCode::not_a_root:
    case ErrorCode::domain:
    case ErrorCode::negative_radicand:
    case ErrorCode::not_nested:
    case ErrorCode::degenerate:
    case ErrorCode::invalid_config:
      return 2;
    case ErrorCode::io:
      return 3;
    default:
      return 4;
  }
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s) {
  return std::strtod(s.c_str(), nullptr);
}

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(const std::string& s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a(s));
  return buf;
}

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string family = "three_layer";
  int m = 2;
  double b = 0.3;                 // two-layer inner radius
  std::string root = "plus";      // two-layer root selection
  std::optional<double> theta;    // explicit two-layer strength (validated as a root)
  double b2 = 0.5;
  double theta2 = -5.0;
  int truncation = 64;
  int quadrature_nodes = 512;
  int n_max = 50;
  ContinuationConfig solver;
};

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  if (j.value("schema_version", 1) != 1)
    fail(ErrorCode::invalid_config, "unsupported config schema version");
  cfg.family = j.value("family", cfg.family);
  if (cfg.family != "two_layer" && cfg.family != "three_layer")
    fail(ErrorCode::invalid_config, "family must be two_layer or three_layer");
  cfg.m = j.value("m", cfg.m);
  cfg.b = j.value("b", cfg.b);
  cfg.root = j.value("root", cfg.root);
  if (j.contains("theta")) cfg.theta = j.at("theta").get<double>();
  cfg.b2 = j.value("b2", cfg.b2);
  cfg.theta2 = j.value("theta2", cfg.theta2);
  cfg.truncation = j.value("truncation", cfg.truncation);
  cfg.quadrature_nodes = j.value("quadrature_nodes", cfg.quadrature_nodes);
  cfg.n_max = j.value("n_max", cfg.n_max);
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    cfg.solver.step = s.value("step", cfg.solver.step);
    cfg.solver.max_steps = s.value("max_steps", cfg.solver.max_steps);
    cfg.solver.newton_tol = s.value("newton_tol", cfg.solver.newton_tol);
    cfg.solver.max_newton_iters = s.value("max_newton_iters", cfg.solver.max_newton_iters);
    cfg.solver.fd_step = s.value("fd_step", cfg.solver.fd_step);
    cfg.solver.threads = s.value("threads", cfg.solver.threads);
    cfg.solver.cutoff_base = s.value("cutoff_base", cfg.solver.cutoff_base);
    cfg.solver.cutoff_ratio = s.value("cutoff_ratio", cfg.solver.cutoff_ratio);
    cfg.solver.nm_max_iters = s.value("nm_max_iters", cfg.solver.nm_max_iters);
    cfg.solver.trace_order = s.value("trace_order", cfg.solver.trace_order);
    cfg.solver.smoothing_gain = s.value("smoothing_gain", cfg.solver.smoothing_gain);
    const std::string mode = s.value("mode", std::string("newton"));
    if (mode == "newton")
      cfg.solver.mode = ContinuationConfig::Mode::newton;
    else if (mode == "nash-moser" || mode == "nash_moser")
      cfg.solver.mode = ContinuationConfig::Mode::nash_moser;
    else
      fail(ErrorCode::invalid_config, "solver mode must be newton or nash-moser");
  }
  cfg.solver.truncation = cfg.truncation;
  cfg.solver.quadrature_nodes = cfg.quadrature_nodes;
  return cfg;
}

json problem_subset(const RunConfig& cfg) {
  json j;
  j["family"] = cfg.family;
  j["m"] = cfg.m;
  if (cfg.family == "two_layer") {
    j["b"] = cfg.b;
    if (cfg.theta)
      j["theta"] = format17(*cfg.theta);
    else
      j["root"] = cfg.root;
  } else {
    j["b2"] = format17(cfg.b2);
    j["theta2"] = format17(cfg.theta2);
  }
  j["truncation"] = cfg.truncation;
  j["quadrature_nodes"] = cfg.quadrature_nodes;
  return j;
}

std::string problem_hash(const RunConfig& cfg) { return hash_hex(problem_subset(cfg).dump()); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::invalid_config, std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

json config_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["family"] = cfg.family;
  j["m"] = cfg.m;
  if (cfg.family == "two_layer") {
    j["b"] = cfg.b;
    if (cfg.theta)
      j["theta"] = *cfg.theta;
    else
      j["root"] = cfg.root;
  } else {
    j["b2"] = cfg.b2;
    j["theta2"] = cfg.theta2;
  }
  j["truncation"] = cfg.truncation;
  j["quadrature_nodes"] = cfg.quadrature_nodes;
  j["n_max"] = cfg.n_max;
  json s;
  s["step"] = cfg.solver.step;
  s["max_steps"] = cfg.solver.max_steps;
  s["newton_tol"] = cfg.solver.newton_tol;
  s["max_newton_iters"] = cfg.solver.max_newton_iters;
  s["mode"] = cfg.solver.mode == ContinuationConfig::Mode::newton ? "newton" : "nash-moser";
  s["fd_step"] = cfg.solver.fd_step;
  s["threads"] = cfg.solver.threads;
  s["cutoff_base"] = cfg.solver.cutoff_base;
  s["cutoff_ratio"] = cfg.solver.cutoff_ratio;
  s["nm_max_iters"] = cfg.solver.nm_max_iters;
  s["trace_order"] = cfg.solver.trace_order;
  s["smoothing_gain"] = cfg.solver.smoothing_gain;
  j["solver"] = s;
  return j;
}

std::string config_hash(const RunConfig& cfg) { return hash_hex(config_json(cfg).dump()); }

// ---------------------------------------------------------------------------
// certification
// ---------------------------------------------------------------------------

BifurcationPoint certify(const RunConfig& cfg) {
  if (cfg.family == "two_layer") {
    if (cfg.theta) return two_layer_bifurcation_at(cfg.b, cfg.m, *cfg.theta, cfg.n_max);
    if (cfg.root != "plus" && cfg.root != "minus")
      fail(ErrorCode::invalid_config, "root must be plus or minus");
    return two_layer_bifurcation(cfg.b, cfg.m,
                                 cfg.root == "plus" ? RootSign::plus : RootSign::minus,
                                 cfg.n_max);
  }
  return three_layer_bifurcation(cfg.b2, cfg.theta2, cfg.m, cfg.n_max);
}

json tuple_to_json(const EvenTuple& t) {
  json out = json::array();
  for (const auto& c : t) {
    json comp = json::array();
    for (int j = 1; j <= c.truncation(); ++j) comp.push_back(hex_double(c.coeff(j)));
    out.push_back(comp);
  }
  return out;
}

json tuple_to_json(const OddTuple& t) {
  json out = json::array();
  for (const auto& c : t) {
    json comp = json::array();
    for (int j = 1; j <= c.truncation(); ++j) comp.push_back(hex_double(c.coeff(j)));
    out.push_back(comp);
  }
  return out;
}

EvenTuple even_tuple_from_json(const json& j, int fold) {
  EvenTuple out;
  for (const auto& comp : j) {
    std::vector<double> coeffs;
    for (const auto& v : comp) coeffs.push_back(parse_hex_double(v.get<std::string>()));
    out.emplace_back(fold, std::move(coeffs));
  }
  return out;
}

OddTuple odd_tuple_from_json(const json& j, int fold) {
  OddTuple out;
  for (const auto& comp : j) {
    std::vector<double> coeffs;
    for (const auto& v : comp) coeffs.push_back(parse_hex_double(v.get<std::string>()));
    out.emplace_back(fold, std::move(coeffs));
  }
  return out;
}

json certificate_json(const RunConfig& cfg, const BifurcationPoint& point) {
  json j;
  j["schema_version"] = 1;
  j["tool_version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  j["problem_hash"] = problem_hash(cfg);
  j["family"] = point.family == Family::two_layer ? "two_layer" : "three_layer";
  j["m"] = point.fold;
  json params;
  if (point.family == Family::two_layer) {
    params["b"] = point.b;
  } else {
    params["b2"] = point.b2;
    params["theta2"] = point.theta2;
    params["b3"] = point.b3;
    params["b3_hex"] = hex_double(point.b3);
  }
  j["parameters"] = params;
  j["theta_star"] = point.theta_star;
  j["theta_star_hex"] = hex_double(point.theta_star);
  j["kernel"] = tuple_to_json(point.kernel);
  j["cokernel"] = tuple_to_json(point.cokernel);
  j["transversality"] = point.transversality;
  j["n_max"] = point.n_max;
  j["higher_mode_margin"] = point.higher_mode_margin;
  j["det_mode_block_normalized"] = point.det_mode_block_normalized;
  json certs;
  for (const auto& [name, value] : point.certificates) certs[name] = value;
  j["certificates"] = certs;
  return j;
}

BifurcationPoint point_from_certificate(const json& cert) {
  BifurcationPoint point;
  const std::string family = cert.at("family").get<std::string>();
  point.family = family == "two_layer" ? Family::two_layer : Family::three_layer;
  point.fold = cert.at("m").get<int>();
  point.theta_star = parse_hex_double(cert.at("theta_star_hex").get<std::string>());
  const json& params = cert.at("parameters");
  if (point.family == Family::two_layer) {
    point.b = params.at("b").get<double>();
  } else {
    point.b2 = params.at("b2").get<double>();
    point.theta2 = params.at("theta2").get<double>();
    point.b3 = parse_hex_double(params.at("b3_hex").get<std::string>());
  }
  point.kernel = even_tuple_from_json(cert.at("kernel"), point.fold);
  point.cokernel = odd_tuple_from_json(cert.at("cokernel"), point.fold);
  point.transversality = cert.at("transversality").get<double>();
  point.n_max = cert.at("n_max").get<int>();
  point.higher_mode_margin = cert.at("higher_mode_margin").get<double>();
  point.det_mode_block_normalized = cert.at("det_mode_block_normalized").get<double>();
  for (const auto& [name, value] : cert.at("certificates").items())
    point.certificates[name] = value.get<double>();
  return point;
}

// ---------------------------------------------------------------------------
// file helpers
// ---------------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out << content;
  if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::io, std::string("parse error in ") + path.string() + ": " + e.what());
  }
  return j;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory " + dir.string());
}

// ---------------------------------------------------------------------------
// branch serialization
// ---------------------------------------------------------------------------

json state_to_json(const BranchState& st) {
  json j;
  j["s"] = st.amplitude;
  j["theta"] = st.theta;
  j["theta_hex"] = hex_double(st.theta);
  if (!std::isnan(st.b3)) j["b3"] = st.b3;
  j["residual"] = st.residual;
  j["circulation"] = st.circulation;
  j["exterior_velocity"] = st.exterior_velocity;
  j["min_gap"] = st.min_gap;
  j["constraint_residual"] = st.constraint_residual;
  j["newton_iterations"] = st.newton_iterations;
  j["fold_flag"] = st.fold_flag;
  j["near_trivial"] = st.near_trivial;
  j["coefficients"] = tuple_to_json(st.perturbations);
  return j;
}

BranchState state_from_json(const json& j, int fold) {
  BranchState st;
  st.amplitude = j.at("s").get<double>();
  st.theta = parse_hex_double(j.at("theta_hex").get<std::string>());
  if (j.contains("b3")) st.b3 = j.at("b3").get<double>();
  st.residual = j.at("residual").get<double>();
  st.circulation = j.at("circulation").get<double>();
  st.exterior_velocity = j.at("exterior_velocity").get<double>();
  st.min_gap = j.at("min_gap").get<double>();
  st.constraint_residual = j.at("constraint_residual").get<double>();
  st.newton_iterations = j.at("newton_iterations").get<int>();
  st.fold_flag = j.at("fold_flag").get<bool>();
  st.near_trivial = j.at("near_trivial").get<bool>();
  st.perturbations = even_tuple_from_json(j.at("coefficients"), fold);
  return st;
}

std::string csv_preamble(const std::string& hash) {
  return std::string("# tool_version=") + kVersion + "\n# config_hash=" + hash + "\n";
}

std::string branch_csv(const std::vector<BranchState>& states, const std::string& hash) {
  std::ostringstream out;
  out << csv_preamble(hash);
  out << "index,s,theta,b3,residual,circulation,exterior_velocity,min_gap,"
         "constraint_residual,newton_iterations,fold_flag,near_trivial\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    const BranchState& st = states[i];
    out << i << ',' << format17(st.amplitude) << ',' << format17(st.theta) << ','
        << format17(st.b3) << ',' << format17(st.residual) << ',' << format17(st.circulation)
        << ',' << format17(st.exterior_velocity) << ',' << format17(st.min_gap) << ','
        << format17(st.constraint_residual) << ',' << st.newton_iterations << ','
        << (st.fold_flag ? 1 : 0) << ',' << (st.near_trivial ? 1 : 0) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int cmd_bifurcate(const RunConfig& cfg, const fs::path& out_dir) {
  const BifurcationPoint point = certify(cfg);
  ensure_dir(out_dir);
  const json cert = certificate_json(cfg, point);
  write_text(out_dir / "certificate.json", cert.dump(2) + "\n");
  json status;
  status["status"] = "ok";
  status["certificate"] = (out_dir / "certificate.json").string();
  status["theta_star"] = point.theta_star;
  std::cout << status.dump() << "\n";
  return 0;
}

int cmd_continue(const RunConfig& cfg, const fs::path& cert_path, const fs::path& out_dir) {
  const json cert = read_json(cert_path);
  if (cert.at("problem_hash").get<std::string>() != problem_hash(cfg))
    fail(ErrorCode::invalid_config,
         "certificate does not match the configured problem (hash mismatch)");
  const BifurcationPoint point = point_from_certificate(cert);
  const Problem problem(point, cfg.truncation, cfg.quadrature_nodes);

  Branch branch;
  json nm_traces = json::array();
  if (cfg.solver.mode == ContinuationConfig::Mode::newton) {
    branch = continue_branch(problem, cfg.solver);
  } else {
    // amplitude sweep with the smoothed iteration
    branch.stop_reason = "max_steps";
    for (int k = 1; k <= cfg.solver.max_steps; ++k) {
      const double s = k * cfg.solver.step;
      try {
        auto [state, trace] = nash_moser_solve(problem, s, cfg.solver);
        branch.max_amplitude = std::max(branch.max_amplitude, std::abs(state.amplitude));
        branch.states.push_back(std::move(state));
        json t;
        t["s"] = s;
        t["correction_norm"] = trace.correction_norm;
        t["residual_norm"] = trace.residual_norm;
        t["cutoff"] = trace.cutoff;
        t["higher_norm"] = trace.higher_norm;
        nm_traces.push_back(t);
      } catch (const Error& e) {
        branch.stop_reason = to_string(e.code());
        break;
      }
    }
  }
  if (branch.states.empty())
    fail(ErrorCode::no_convergence, "no branch state produced (" + branch.stop_reason + ")");

  ensure_dir(out_dir);
  json j;
  j["schema_version"] = 1;
  j["tool_version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  j["problem_hash"] = problem_hash(cfg);
  j["config"] = config_json(cfg);
  j["certificate"] = cert;
  json states = json::array();
  for (const auto& st : branch.states) states.push_back(state_to_json(st));
  j["states"] = states;
  if (!nm_traces.empty()) j["nash_moser_traces"] = nm_traces;
  json summary;
  summary["states"] = branch.states.size();
  summary["max_amplitude"] = branch.max_amplitude;
  summary["stop_reason"] = branch.stop_reason;
  summary["fold_count"] = branch.fold_count;
  j["summary"] = summary;
  write_text(out_dir / "branch.json", j.dump(2) + "\n");
  write_text(out_dir / "branch.csv", branch_csv(branch.states, config_hash(cfg)));

  json status;
  status["status"] = "ok";
  status["states"] = branch.states.size();
  status["stop_reason"] = branch.stop_reason;
  std::cout << status.dump() << "\n";
  return 0;
}

int cmd_verify(const fs::path& record_path, int strict, const fs::path& out_dir) {
  const json record = read_json(record_path);
  const RunConfig cfg = parse_config(record.at("config"));
  const BifurcationPoint point = point_from_certificate(record.at("certificate"));
  const Problem problem(point, cfg.truncation, cfg.quadrature_nodes);

  json reports = json::array();
  bool all_pass = true;
  for (const auto& js : record.at("states")) {
    const BranchState st = state_from_json(js, point.fold);
    const VerifyReport rep = verify_solution(problem, st, strict, cfg.solver);
    all_pass = all_pass && rep.pass;
    json r;
    r["pass"] = rep.pass;
    json metrics;
    for (const auto& [name, value] : rep.metrics) metrics[name] = value;
    r["metrics"] = metrics;
    r["failures"] = rep.failures;
    reports.push_back(r);
  }

  json j;
  j["schema_version"] = 1;
  j["tool_version"] = kVersion;
  j["config_hash"] = record.at("config_hash");
  j["strict"] = strict;
  j["all_pass"] = all_pass;
  j["states"] = reports;
  ensure_dir(out_dir);
  write_text(out_dir / "report.json", j.dump(2) + "\n");
  std::cout << json{{"status", all_pass ? "pass" : "fail"}}.dump() << "\n";
  return all_pass ? 0 : 1;
}

struct GridSpec {
  int nx = 64, ny = 64;
  double xmin = -2.0, xmax = 2.0, ymin = -2.0, ymax = 2.0;
};

int cmd_sample(const fs::path& record_path, int state_index, const GridSpec& grid,
               const fs::path& out_dir) {
  const json record = read_json(record_path);
  const RunConfig cfg = parse_config(record.at("config"));
  const BifurcationPoint point = point_from_certificate(record.at("certificate"));
  const Problem problem(point, cfg.truncation, cfg.quadrature_nodes);
  const json& states = record.at("states");
  if (state_index < 0 || state_index >= static_cast<int>(states.size()))
    fail(ErrorCode::invalid_config, "state index out of range");
  const BranchState st = state_from_json(states[static_cast<std::size_t>(state_index)], point.fold);
  const PatchSystem sys = problem.system(st.theta, st.perturbations);

  ensure_dir(out_dir);
  const std::string hash = config_hash(cfg);
  {
    std::ostringstream out;
    out << csv_preamble(hash);
    out << "layer,x,px,py\n";
    const Grid& g = sys.grid();
    for (int i = 0; i < sys.layer_count(); ++i) {
      const auto rho = sys.rho(i);
      for (int q = 0; q < g.size(); ++q) {
        const double r = rho[static_cast<std::size_t>(q)];
        out << i << ',' << format17(g.node(q)) << ',' << format17(r * g.cos_at(q)) << ','
            << format17(r * g.sin_at(q)) << '\n';
      }
    }
    write_text(out_dir / "boundaries.csv", out.str());
  }
  {
    std::ostringstream out;
    out << csv_preamble(hash);
    out << "x,y,flag,ux,uy,speed,psi\n";
    for (int iy = 0; iy < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        const double x =
            grid.nx == 1 ? grid.xmin
                         : grid.xmin + (grid.xmax - grid.xmin) * ix / double(grid.nx - 1);
        const double y =
            grid.ny == 1 ? grid.ymin
                         : grid.ymin + (grid.ymax - grid.ymin) * iy / double(grid.ny - 1);
        int flag = 0;
        double ux = 0.0, uy = 0.0, psi = 0.0;
        try {
          const Vec2 u = velocity_at(sys, {x, y});
          ux = u.x;
          uy = u.y;
          psi = stream_at(sys, {x, y});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::point_on_boundary) throw;
          flag = 1;
          ux = uy = psi = std::numeric_limits<double>::quiet_NaN();
        }
        out << format17(x) << ',' << format17(y) << ',' << flag << ',' << format17(ux) << ','
            << format17(uy) << ',' << format17(std::hypot(ux, uy)) << ',' << format17(psi)
            << '\n';
      }
    }
    write_text(out_dir / "fields.csv", out.str());
  }
  std::cout << json{{"status", "ok"}}.dump() << "\n";
  return 0;
}

int cmd_spectrum(const RunConfig& cfg, const fs::path& out_dir) {
  const BifurcationPoint point = certify(cfg);
  ensure_dir(out_dir);
  std::ostringstream out;
  out << csv_preamble(config_hash(cfg));
  if (point.family == Family::two_layer) {
    out << "n,frequency,m11,m12,m21,m22,det\n";
    for (int n = 1; n <= cfg.n_max; ++n) {
      const LinearizationBlock blk = two_layer_block(point.b, point.theta_star, n * point.fold);
      out << n << ',' << blk.frequency;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) out << ',' << format17(blk.entries(r, c));
      out << ',' << format17(blk.det) << '\n';
    }
  } else {
    out << "n,frequency,m11,m12,m13,m21,m22,m23,m31,m32,m33,det\n";
    for (int n = 1; n <= cfg.n_max; ++n) {
      const LinearizationBlock blk =
          three_layer_block(point.b2, point.theta2, point.b3, point.theta_star, n * point.fold);
      out << n << ',' << blk.frequency;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out << ',' << format17(blk.entries(r, c));
      out << ',' << format17(blk.det) << '\n';
    }
  }
  write_text(out_dir / "spectrum.csv", out.str());
  std::cout << json{{"status", "ok"}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stationary multi-layer vortex patch solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string cert_path;
  std::string record_path;
  int strict = 2;
  int n_max_override = -1;
  std::string mode_override;
  int state_index = 0;
  GridSpec grid;
  double ds_override = 0.0;
  int max_steps_override = 0;

  auto add_config_opts = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "JSON run configuration");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--n-max", n_max_override, "override higher-mode certification depth");
    cmd->add_option("--mode", mode_override, "solver mode: newton or nash-moser");
    cmd->add_option("--ds", ds_override, "override continuation step");
    cmd->add_option("--max-steps", max_steps_override, "override continuation step count");
  };

  CLI::App* bifurcate = app.add_subcommand("bifurcate", "compute a bifurcation certificate");
  add_config_opts(bifurcate, true);

  CLI::App* cont = app.add_subcommand("continue", "trace a branch from a certificate");
  add_config_opts(cont, true);
  cont->add_option("--certificate", cert_path, "certificate.json path")->required();

  CLI::App* verify = app.add_subcommand("verify", "re-verify a branch record");
  verify->add_option("--record", record_path, "branch.json path")->required();
  verify->add_option("--strict", strict, "quadrature refinement factor");
  verify->add_option("--out", out_dir, "output directory");

  CLI::App* sample = app.add_subcommand("sample", "sample boundary and field data");
  sample->add_option("--record", record_path, "branch.json path")->required();
  sample->add_option("--state", state_index, "branch state index");
  sample->add_option("--out", out_dir, "output directory");
  sample->add_option("--nx", grid.nx, "grid points in x");
  sample->add_option("--ny", grid.ny, "grid points in y");
  sample->add_option("--xmin", grid.xmin, "grid x minimum");
  sample->add_option("--xmax", grid.xmax, "grid x maximum");
  sample->add_option("--ymin", grid.ymin, "grid y minimum");
  sample->add_option("--ymax", grid.ymax, "grid y maximum");

  CLI::App* spectrum = app.add_subcommand("spectrum", "dump per-mode linearization blocks");
  add_config_opts(spectrum, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors fall under parameter rejection
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
      if (n_max_override > 0) cfg.n_max = n_max_override;
      if (ds_override > 0.0) cfg.solver.step = ds_override;
      if (max_steps_override > 0) cfg.solver.max_steps = max_steps_override;
      if (!mode_override.empty()) {
        if (mode_override == "newton")
          cfg.solver.mode = ContinuationConfig::Mode::newton;
        else if (mode_override == "nash-moser" || mode_override == "nash_moser")
          cfg.solver.mode = ContinuationConfig::Mode::nash_moser;
        else
          fail(ErrorCode::invalid_config, "mode must be newton or nash-moser");
      }
    }
    if (*bifurcate) return cmd_bifurcate(cfg, out_dir);
    if (*cont) return cmd_continue(cfg, cert_path, out_dir);
    if (*verify) return cmd_verify(record_path, strict, out_dir);
    if (*sample) return cmd_sample(record_path, state_index, grid, out_dir);
    if (*spectrum) return cmd_spectrum(cfg, out_dir);
  } catch (const Error& e) {
    json status;
    status["status"] = "error";
    status["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    std::cout << status.dump() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    json status;
    status["status"] = "error";
    status["error"] = {{"code", "INTERNAL"}, {"message", e.what()}};
    std::cout << status.dump() << "\n";
    return 4;
  }
  return 0;
}
