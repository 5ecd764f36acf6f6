#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eitdg/cli.hpp"
#include "eitdg/experiments.hpp"
#include "eitdg/parallel.hpp"

namespace py = pybind11;
using namespace eitdg;

namespace {

SpacePtr square(int n) { return DgSpace::create(Mesh(Box{-1.0, 1.0, -1.0, 1.0}, n, n)); }

// Cell-center values as an (n, n) array indexed [row (y), column (x)].
Eigen::MatrixXd center_grid(const DgFunction& f) {
  const Mesh& m = f.space()->mesh();
  Eigen::MatrixXd out(m.ny(), m.nx());
  for (int j = 0; j < m.ny(); ++j) {
    for (int i = 0; i < m.nx(); ++i) {
      const Vec2 c = m.cell(m.cell_index(i, j)).center();
      out(j, i) = f.at(c.x(), c.y());
    }
  }
  return out;
}

py::list eoc(const std::string& name, const std::vector<int>& meshes) {
  py::list rows;
  for (const EocRow& r : run_eoc(find_case(name), meshes).rows) {
    py::dict d;
    d["n"] = r.n;
    d["err_u"] = r.err_u;
    d["err_flux"] = r.err_flux;
    d["err_qx"] = r.err_qx;
    d["err_qy"] = r.err_qy;
    d["err_boundary"] = r.err_boundary;
    d["order_u"] = r.order_u;
    d["order_flux"] = r.order_flux;
    rows.append(d);
  }
  return rows;
}

// Boundary currents of the four measurement voltages; shape (4, slots, points).
std::vector<Eigen::MatrixXd> currents(const std::string& phantom, int n) {
  auto space = square(n);
  const ForwardCache cache =
      make_forward_cache(project(space, phantom_sigma(find_phantom(phantom))), measurement_suite(space));
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t j = 0; j < cache.size(); ++j) out.push_back(cache.current(j).values());
  return out;
}

py::dict reconstruct(const std::string& phantom_name, int n, double epsilon, std::uint64_t seed, double alpha,
                     int max_outer, const std::string& cg_inner_product) {
  const Phantom phantom = find_phantom(phantom_name);
  auto coarse = square(n);
  const SyntheticData data = generate_data(phantom, square(2 * n), coarse, NoiseModel{epsilon, seed});
  InverseConfig cfg;
  cfg.alpha_reg = alpha;
  cfg.max_outer = max_outer;
  if (cg_inner_product == "l2") cfg.inner_product = CgInnerProduct::kL2;
  else if (cg_inner_product != "sobolev") throw py::value_error("cg_inner_product must be 'sobolev' or 'l2'");
  cfg.sigma0 = project(coarse, phantom_background(phantom));

  ReconstructionState s = [&] {
    py::gil_scoped_release release;
    return gauss_newton(data.measurements, cfg, coarse);
  }();
  const Vec2 c = blob_center(s.sigma, phantom_background(phantom));
  std::vector<double> misfits;
  for (const auto& rec : s.history) misfits.push_back(rec.misfit);

  py::dict d;
  d["height"] = blob_height(s.sigma);
  d["center"] = py::make_tuple(c.x(), c.y());
  d["misfit"] = s.misfit;
  d["delta"] = data.measurements.delta;
  d["iterations"] = s.k;
  d["stop"] = std::string(to_string(s.stop));
  d["history"] = misfits;
  d["sigma"] = center_grid(s.sigma);
  return d;
}

int run_config(const std::string& path, const std::string& out) {
  RunConfig cfg = load_config(path);
  if (!out.empty()) cfg.out_dir = out;
  std::ostringstream log, err;
  int status = 0;
  {
    py::gil_scoped_release release;
    status = run(cfg, log, err);
  }
  if (status != 0) throw std::runtime_error(err.str());
  return status;
}

}  // namespace

PYBIND11_MODULE(_eitdg, m) {
  m.doc() = "P2 MD-LDG forward solver and Gauss-Newton EIT reconstruction";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CoefficientRangeError>(m, "CoefficientRangeError", PyExc_ArithmeticError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.def("phantom_names", &phantom_names);
  m.def(
      "phantom_value",
      [](const std::string& name, double x, double y) { return phantom_sigma(find_phantom(name))(x, y); },
      py::arg("name"), py::arg("x"), py::arg("y"));
  m.def("run_eoc", &eoc, py::arg("case") = "smooth", py::arg("meshes") = std::vector<int>{8, 16, 32, 64},
        "Errors and orders for a manufactured case on [0,1]^2.");
  m.def("forward_currents", &currents, py::arg("phantom") = "one_blob", py::arg("n") = 16,
        "Boundary currents for the four measurement voltages on [-1,1]^2.");
  m.def("reconstruct", &reconstruct, py::arg("phantom") = "one_blob", py::arg("n") = 32, py::arg("epsilon") = 0.0,
        py::arg("seed") = 1, py::arg("alpha") = 1e-8, py::arg("max_outer") = 50,
        py::arg("cg_inner_product") = "sobolev");
  m.def("run_config", &run_config, py::arg("path"), py::arg("out") = "",
        "Execute an INI run configuration; raises on failure.");
  m.def("set_thread_limit", &set_thread_limit, py::arg("n"));
}
