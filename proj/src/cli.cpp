#include "eitdg/cli.hpp"

#include <chrono>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include "eitdg/parallel.hpp"

namespace eitdg {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"mode", "threads", "out"}},
      {"mesh", {"xmin", "xmax", "ymin", "ymax", "n", "fine_factor"}},
      {"phantom", {"name"}},
      {"noise", {"epsilon", "seed"}},
      {"inverse", {"alpha", "tau", "rho", "max_outer", "max_inner", "sigma0", "cg_inner_product"}},
      {"eoc", {"case", "meshes"}},
      {"forward", {"boundary"}},
  };
  return keys;
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError(fmt::format("{}: invalid number '{}'", where, text));
  return value;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& where) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(trim(item), where));
  if (out.empty()) throw ConfigError(fmt::format("{}: empty list", where));
  return out;
}

RunMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "eoc") return RunMode::kEoc;
  if (s == "reconstruct") return RunMode::kReconstruct;
  if (s == "forward") return RunMode::kForward;
  throw ConfigError(fmt::format("{}: unknown mode '{}' (eoc, reconstruct, forward)", where, s));
}

const char* to_string(CgInnerProduct ip) { return ip == CgInnerProduct::kL2 ? "l2" : "sobolev"; }

ScalarFn resolve_sigma0(const RunConfig& cfg) {
  if (cfg.sigma0 == "background") return phantom_background(find_phantom(cfg.phantom));
  const double value = parse_number<double>(cfg.sigma0, "[inverse] sigma0");
  return [value](double, double) { return value; };
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  os << text;
}

template <class Fn>
std::string capture(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

}  // namespace

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kEoc: return "eoc";
    case RunMode::kReconstruct: return "reconstruct";
    case RunMode::kForward: return "forward";
  }
  return "unknown";
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.line(), e.message()));
  }

  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(fmt::format("{}: key '{}' outside any section", source, section));
      }
      throw ConfigError(fmt::format("{}: unknown section [{}]", source, section));
    }
    for (const auto& [key, node] : body) {
      const std::string where = fmt::format("{}: [{}] {}", source, section, key);
      if (!it->second.count(key)) throw ConfigError(fmt::format("{}: unknown key", where));
      const std::string value = trim(node.data());
      if (section == "run") {
        if (key == "mode") cfg.mode = parse_mode(value, where);
        if (key == "threads") cfg.threads = parse_number<unsigned>(value, where);
        if (key == "out") cfg.out_dir = value;
      } else if (section == "mesh") {
        if (key == "xmin") cfg.box.xmin = parse_number<double>(value, where);
        if (key == "xmax") cfg.box.xmax = parse_number<double>(value, where);
        if (key == "ymin") cfg.box.ymin = parse_number<double>(value, where);
        if (key == "ymax") cfg.box.ymax = parse_number<double>(value, where);
        if (key == "n") cfg.n = parse_number<int>(value, where);
        if (key == "fine_factor") cfg.fine_factor = parse_number<int>(value, where);
      } else if (section == "phantom") {
        cfg.phantom = value;
      } else if (section == "noise") {
        if (key == "epsilon") cfg.epsilon = parse_number<double>(value, where);
        if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, where);
      } else if (section == "inverse") {
        if (key == "alpha") cfg.alpha = parse_number<double>(value, where);
        if (key == "tau") cfg.tau = parse_number<double>(value, where);
        if (key == "rho") cfg.rho = parse_number<double>(value, where);
        if (key == "max_outer") cfg.max_outer = parse_number<int>(value, where);
        if (key == "max_inner") cfg.max_inner = parse_number<int>(value, where);
        if (key == "sigma0") cfg.sigma0 = value;
        if (key == "cg_inner_product") {
          if (value == "l2") cfg.cg_inner_product = CgInnerProduct::kL2;
          else if (value == "sobolev") cfg.cg_inner_product = CgInnerProduct::kSobolev;
          else throw ConfigError(fmt::format("{}: expected 'l2' or 'sobolev', got '{}'", where, value));
        }
      } else if (section == "eoc") {
        if (key == "case") cfg.eoc_case = value;
        if (key == "meshes") cfg.eoc_meshes = parse_int_list(value, where);
      } else if (section == "forward") {
        cfg.forward_boundary = value;
      }
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  return parse_config(in, path.string());
}

void validate(const RunConfig& cfg) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(cfg.box.xmax > cfg.box.xmin && cfg.box.ymax > cfg.box.ymin)) fail("[mesh] box must have positive extent");
  if (cfg.n < 1) fail("[mesh] n must be >= 1");
  if (cfg.fine_factor < 2) fail("[mesh] fine_factor must be >= 2");
  try {
    find_phantom(cfg.phantom);
  } catch (const std::invalid_argument& e) {
    fail(fmt::format("[phantom] name: {}", e.what()));
  }
  if (!(cfg.epsilon >= 0.0)) fail("[noise] epsilon must be >= 0");
  if (cfg.sigma0 != "background") {
    double v = 0.0;
    try {
      v = parse_number<double>(cfg.sigma0, "[inverse] sigma0");
    } catch (const ConfigError&) {
      fail(fmt::format("[inverse] sigma0: expected 'background' or a number, got '{}'", cfg.sigma0));
    }
    if (!(v > 0.0)) fail("[inverse] sigma0 must be positive");
  }
  InverseConfig icfg;
  icfg.alpha_reg = cfg.alpha;
  icfg.tau = cfg.tau;
  icfg.rho = cfg.rho;
  icfg.max_outer = cfg.max_outer;
  icfg.max_inner = cfg.max_inner;
  icfg.sigma0 = DgFunction(DgSpace::create(Mesh(Box{}, 1, 1)));
  try {
    icfg.validate();
  } catch (const std::invalid_argument& e) {
    fail(fmt::format("[inverse] {}", e.what()));
  }
  try {
    find_case(cfg.eoc_case);
  } catch (const std::invalid_argument& e) {
    fail(fmt::format("[eoc] case: {}", e.what()));
  }
  for (int m : cfg.eoc_meshes) {
    if (m < 1) fail("[eoc] meshes must be positive");
  }
  if (cfg.forward_boundary != "suite" && cfg.forward_boundary != "zero") {
    fail(fmt::format("[forward] boundary: expected 'suite' or 'zero', got '{}'", cfg.forward_boundary));
  }
}

void write_manifest(std::ostream& os, const RunConfig& cfg) {
  fmt::print(os, "[run]\nmode = {}\nthreads = {}\nout = {}\n\n", to_string(cfg.mode), cfg.threads, cfg.out_dir.string());
  fmt::print(os, "[mesh]\nxmin = {}\nxmax = {}\nymin = {}\nymax = {}\nn = {}\nfine_factor = {}\n\n", cfg.box.xmin,
             cfg.box.xmax, cfg.box.ymin, cfg.box.ymax, cfg.n, cfg.fine_factor);
  fmt::print(os, "[phantom]\nname = {}\n\n", cfg.phantom);
  fmt::print(os, "[noise]\nepsilon = {}\nseed = {}\n\n", cfg.epsilon, cfg.seed);
  fmt::print(os,
             "[inverse]\nalpha = {}\ntau = {}\nrho = {}\nmax_outer = {}\nmax_inner = {}\nsigma0 = {}\n"
             "cg_inner_product = {}\n\n",
             cfg.alpha, cfg.tau, cfg.rho, cfg.max_outer, cfg.max_inner, cfg.sigma0, to_string(cfg.cg_inner_product));
  fmt::print(os, "[eoc]\ncase = {}\nmeshes = {}\n\n", cfg.eoc_case, fmt::join(cfg.eoc_meshes, ","));
  fmt::print(os, "[forward]\nboundary = {}\n", cfg.forward_boundary);
}

namespace {

void run_eoc_mode(const RunConfig& cfg, std::ostream& log) {
  const EocReport report = run_eoc(find_case(cfg.eoc_case), cfg.eoc_meshes);
  write_file(cfg.out_dir / "eoc.csv", capture([&](std::ostream& os) { write_eoc_csv(os, report); }));
  for (const EocRow& r : report.rows) {
    fmt::print(log, "{:>3}x{:<3} err_u {:.3e} ({})  err_flux {:.3e} ({})\n", r.n, r.n, r.err_u,
               r.order_u ? fmt::format("{:.2f}", *r.order_u) : "-", r.err_flux,
               r.order_flux ? fmt::format("{:.2f}", *r.order_flux) : "-");
  }
}

void run_reconstruct_mode(const RunConfig& cfg, std::ostream& log) {
  const Phantom phantom = find_phantom(cfg.phantom);
  auto coarse = DgSpace::create(Mesh(cfg.box, cfg.n, cfg.n));
  auto fine = DgSpace::create(Mesh(cfg.box, cfg.fine_factor * cfg.n, cfg.fine_factor * cfg.n));
  const SyntheticData data = generate_data(phantom, fine, coarse, NoiseModel{cfg.epsilon, cfg.seed});
  for (std::size_t j = 0; j < data.measurements.size(); ++j) {
    write_file(cfg.out_dir / fmt::format("measurements_{}.csv", j + 1), capture([&](std::ostream& os) {
                 write_measurement_csv(os, coarse, data.measurements.voltages[j], data.exact_currents[j],
                                       data.measurements.currents[j]);
               }));
  }

  InverseConfig icfg;
  icfg.alpha_reg = cfg.alpha;
  icfg.tau = cfg.tau;
  icfg.rho = cfg.rho;
  icfg.max_outer = cfg.max_outer;
  icfg.max_inner = cfg.max_inner;
  icfg.inner_product = cfg.cg_inner_product;
  icfg.sigma0 = project(coarse, resolve_sigma0(cfg));
  icfg.observer = [&log](const ReconstructionState& s) {
    const IterationRecord& rec = s.history.back();
    fmt::print(log, "k={:<3} misfit {:.4e}  inner {:<3} height {:.4f}\n", rec.k, rec.misfit, rec.inner,
               blob_height(s.sigma));
  };
  fmt::print(log, "delta {:.4e}  tau*delta {:.4e}  model error {:.4e}\n", data.measurements.delta,
             cfg.tau * data.measurements.delta, data.measurements.model_error);
  const ReconstructionState state = gauss_newton(data.measurements, icfg, coarse);

  const ScalarFn background = phantom_background(phantom);
  const Vec2 center = blob_center(state.sigma, background);
  write_file(cfg.out_dir / "iterations.csv",
             capture([&](std::ostream& os) { write_iteration_csv(os, state.history); }));
  write_file(cfg.out_dir / "sigma.csv",
             capture([&](std::ostream& os) { write_center_csv(os, state.sigma, "sigma"); }));
  write_file(cfg.out_dir / "sigma_true.csv", capture([&](std::ostream& os) {
               write_center_csv(os, project(coarse, phantom_sigma(phantom)), "sigma");
             }));
  write_file(cfg.out_dir / "summary.csv", capture([&](std::ostream& os) {
               fmt::print(os, "height,center_x,center_y,misfit,iterations,stop,delta,model_error\n");
               fmt::print(os, "{:.10g},{:.10g},{:.10g},{:.10e},{},{},{:.10e},{:.10e}\n", blob_height(state.sigma),
                          center.x(), center.y(), state.misfit, state.k, to_string(state.stop),
                          data.measurements.delta, data.measurements.model_error);
             }));
  fmt::print(log, "stop {} after {} iterations: height {:.4f}, center ({:.3f}, {:.3f}), misfit {:.4e}\n",
             to_string(state.stop), state.k, blob_height(state.sigma), center.x(), center.y(), state.misfit);
}

void run_forward_mode(const RunConfig& cfg, std::ostream& log) {
  auto space = DgSpace::create(Mesh(cfg.box, cfg.n, cfg.n));
  const DgFunction sigma = project(space, phantom_sigma(find_phantom(cfg.phantom)));
  std::vector<BoundaryTrace> voltages = cfg.forward_boundary == "zero"
                                            ? std::vector<BoundaryTrace>{BoundaryTrace(space)}
                                            : measurement_suite(space);
  const ForwardCache cache = make_forward_cache(sigma, voltages);
  for (std::size_t j = 0; j < cache.size(); ++j) {
    write_file(cfg.out_dir / fmt::format("u_{}.csv", j + 1),
               capture([&](std::ostream& os) { write_center_csv(os, cache.result(j).u, "u"); }));
    write_file(cfg.out_dir / fmt::format("flux_{}.csv", j + 1), capture([&](std::ostream& os) {
                 const Mesh& mesh = space->mesh();
                 fmt::print(os, "edge,qp,x,y,f,flux\n");
                 for (std::size_t s = 0; s < mesh.boundary_edges().size(); ++s) {
                   for (int k = 0; k < kEdgePoints; ++k) {
                     const Vec2 p = boundary_point(*space, s, k);
                     fmt::print(os, "{},{},{:.12g},{:.12g},{:.12e},{:.12e}\n", mesh.boundary_edges()[s], k, p.x(),
                                p.y(), cache.voltage(j)(s, k), cache.current(j)(s, k));
                   }
                 }
               }));
    fmt::print(log, "measurement {}: ||F||_boundary = {:.6e}\n", j + 1, norm_boundary(cache.current(j)));
  }
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    validate(cfg);
    set_thread_limit(cfg.threads);
    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "manifest.ini", capture([&](std::ostream& os) { write_manifest(os, cfg); }));
    const auto start = std::chrono::steady_clock::now();
    switch (cfg.mode) {
      case RunMode::kEoc: run_eoc_mode(cfg, log); break;
      case RunMode::kReconstruct: run_reconstruct_mode(cfg, log); break;
      case RunMode::kForward: run_forward_mode(cfg, log); break;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(cfg.out_dir / "timing.txt", fmt::format("wall_seconds = {:.3f}\n", seconds));
    fmt::print(log, "wrote {} ({:.1f} s)\n", cfg.out_dir.string(), seconds);
    return 0;
  } catch (const ConfigError& e) {
    fmt::print(err, "eitdg: config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(err, "eitdg: error: {}\n", e.what());
    return 1;
  }
}

}  // namespace eitdg
