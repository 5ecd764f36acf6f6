#include "eitdg/experiments.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "eitdg/parallel.hpp"

namespace eitdg {

// ---------------------------------------------------------------------------
// Phantoms

Phantom find_phantom(const std::string& name) {
  if (name == "one_blob") return {name, {}, {{1.0, {0.0, 0.55}, 8.0}}};
  if (name == "two_blobs") return {name, {}, {{1.0, {-0.7, 0.0}, 20.0}, {1.0, {0.0, 0.7}, 20.0}}};
  if (name == "discontinuous") {
    return {name, {1.0, 0.0, 1.5}, {{1.0, {0.0, -0.7}, 20.0}, {1.0, {0.0, 0.7}, 20.0}}};
  }
  throw std::invalid_argument(fmt::format("unknown phantom '{}'", name));
}

std::vector<std::string> phantom_names() { return {"one_blob", "two_blobs", "discontinuous"}; }

ScalarFn phantom_background(const Phantom& p) {
  const Background bg = p.background;
  return [bg](double, double y) { return bg.split_y && y < *bg.split_y ? bg.value_below : bg.value; };
}

ScalarFn phantom_sigma(const Phantom& p) {
  ScalarFn bg = phantom_background(p);
  return [bg, blobs = p.blobs](double x, double y) {
    double s = bg(x, y);
    for (const Blob& b : blobs) {
      const double dx = x - b.center.x(), dy = y - b.center.y();
      s += b.amplitude * std::exp(-b.width * (dx * dx + dy * dy));
    }
    return s;
  };
}

// ---------------------------------------------------------------------------
// Measurements and noise

std::vector<ScalarFn> measurement_functions() {
  return {
      [](double x, double y) { return std::sin(x + y); },
      [](double x, double y) { return std::cos(x + y); },
      [](double x, double y) { return std::sin(2.0 * (x + y)); },
      [](double x, double y) { return std::cos(2.0 * (x + y)); },
  };
}

std::vector<BoundaryTrace> measurement_suite(const SpacePtr& space) {
  std::vector<BoundaryTrace> out;
  for (const auto& f : measurement_functions()) out.push_back(sample_boundary(space, f));
  return out;
}

double NormalStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NormalStream::next() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

Face face_for_normal(const Vec2& n) {
  if (n.x() < -0.5) return Face::kLeft;
  if (n.x() > 0.5) return Face::kRight;
  if (n.y() < -0.5) return Face::kBottom;
  return Face::kTop;
}

}  // namespace

BoundaryTrace restrict_current(const LdgDiscretization& fine, const DgFunction& u, const FluxField& q,
                               const ScalarFn& voltage, const SpacePtr& coarse) {
  const DgSpace& fs = *fine.space();
  const Mesh& fm = fs.mesh();
  const Mesh& cm = coarse->mesh();
  if (!(fm.box() == cm.box())) throw std::invalid_argument("restrict_current: meshes cover different boxes");
  BoundaryTrace out(coarse);
  for (std::size_t s = 0; s < cm.boundary_edges().size(); ++s) {
    const Edge& ce = cm.edge(static_cast<std::size_t>(cm.boundary_edges()[s]));
    const Face face = face_for_normal(ce.normal);
    for (int k = 0; k < kEdgePoints; ++k) {
      const Vec2 p = ce.point(DgSpace::gauss_nodes()[k]);
      const Vec2 inside = p - 0.25 * std::min(fm.hx(), fm.hy()) * ce.normal;
      const auto cell = static_cast<std::size_t>(fm.locate(inside.x(), inside.y()));
      const int fe = fm.cell(cell).edges[static_cast<int>(face)];
      Vec2 ref = fs.to_reference(cell, p.x(), p.y());
      ref = ref.cwiseMax(-1.0).cwiseMin(1.0);
      const LocalVector phi = DgSpace::basis(ref.x(), ref.y());
      double value = ce.normal.x() * phi.dot(q.component(cell, 0)) + ce.normal.y() * phi.dot(q.component(cell, 1));
      if (fine.classification().sign[static_cast<std::size_t>(fe)] > 0) {
        value -= fine.alpha_stab() * (phi.dot(u.local(cell)) - voltage(p.x(), p.y()));
      }
      out(s, k) = value;
    }
  }
  return out;
}

SyntheticData generate_data(const Phantom& phantom, const SpacePtr& fine, const SpacePtr& coarse,
                            const NoiseModel& noise, const LdgOptions& options) {
  const Mesh& fm = fine->mesh();
  const Mesh& cm = coarse->mesh();
  if (!(fm.box() == cm.box())) throw std::invalid_argument("generate_data: meshes cover different boxes");
  if (fm.nx() < 2 * cm.nx() || fm.ny() < 2 * cm.ny()) {
    throw std::invalid_argument(fmt::format("generate_data: fine mesh {}x{} must be at least twice the coarse {}x{}",
                                            fm.nx(), fm.ny(), cm.nx(), cm.ny()));
  }
  if (!(noise.epsilon >= 0.0)) throw std::invalid_argument("noise epsilon must be >= 0");

  auto disc = LdgDiscretization::create(fine, options);
  const LdgOperator op(disc, project(fine, phantom_sigma(phantom)), 0.0);
  const auto funcs = measurement_functions();
  const auto fine_voltages = measurement_suite(fine);

  SyntheticData data;
  data.measurements.voltages = measurement_suite(coarse);
  data.exact_currents.assign(funcs.size(), BoundaryTrace(coarse));
  parallel_for(funcs.size(), [&](std::size_t j) {
    LdgData in;
    in.dirichlet = &fine_voltages[j];
    const LdgSolution sol = op.solve(in);
    data.exact_currents[j] = restrict_current(*disc, sol.u, sol.q, funcs[j], coarse);
  });

  data.measurements.currents = data.exact_currents;
  data.measurements.delta = 0.0;
  data.measurements.model_error = discretization_gap(phantom_background(phantom), fine, coarse, options);
  if (noise.epsilon > 0.0) {
    NormalStream xi(noise.seed);
    for (std::size_t j = 0; j < funcs.size(); ++j) {
      auto& g = data.measurements.currents[j].values();
      for (Eigen::Index s = 0; s < g.rows(); ++s) {
        for (int k = 0; k < kEdgePoints; ++k) g(s, k) += noise.epsilon * std::abs(g(s, k)) * xi.next();
      }
      data.measurements.delta += norm_boundary(data.measurements.currents[j] - data.exact_currents[j]);
    }
  }
  return data;
}

double discretization_gap(const ScalarFn& sigma, const SpacePtr& fine, const SpacePtr& coarse,
                          const LdgOptions& options) {
  auto fine_disc = LdgDiscretization::create(fine, options);
  const LdgOperator fine_op(fine_disc, project(fine, sigma), 0.0);
  const LdgOperator coarse_op(LdgDiscretization::create(coarse, options), project(coarse, sigma), 0.0);
  const auto funcs = measurement_functions();
  std::vector<double> gap(funcs.size());
  parallel_for(funcs.size(), [&](std::size_t j) {
    const BoundaryTrace bf = sample_boundary(fine, funcs[j]);
    const BoundaryTrace bc = sample_boundary(coarse, funcs[j]);
    LdgData in;
    in.dirichlet = &bf;
    const LdgSolution sf = fine_op.solve(in);
    in.dirichlet = &bc;
    const LdgSolution sc = coarse_op.solve(in);
    gap[j] = norm_boundary(restrict_current(*fine_disc, sf.u, sf.q, funcs[j], coarse) - sc.flux);
  });
  double total = 0.0;
  for (double g : gap) total += g;
  return total;
}

void write_measurement_csv(std::ostream& os, const SpacePtr& space, const BoundaryTrace& voltage,
                           const BoundaryTrace& exact, const BoundaryTrace& noisy) {
  const Mesh& mesh = space->mesh();
  fmt::print(os, "edge,qp,x,y,f,g_true,g_noisy\n");
  for (std::size_t s = 0; s < mesh.boundary_edges().size(); ++s) {
    for (int k = 0; k < kEdgePoints; ++k) {
      const Vec2 p = boundary_point(*space, s, k);
      fmt::print(os, "{},{},{:.12g},{:.12g},{:.12e},{:.12e},{:.12e}\n", mesh.boundary_edges()[s], k, p.x(), p.y(),
                 voltage(s, k), exact(s, k), noisy(s, k));
    }
  }
}

// ---------------------------------------------------------------------------
// Manufactured solutions

ManufacturedCase find_case(const std::string& name) {
  if (name == "smooth") {
    auto sigma = [](double x, double y) { return std::exp(-(x * x + y * y)); };
    return {name,
            Box{0.0, 1.0, 0.0, 1.0},
            sigma,
            [](double x, double y) { return std::sin(x + y); },
            [=](double x, double y) { return sigma(x, y) * std::cos(x + y); },
            [=](double x, double y) { return sigma(x, y) * std::cos(x + y); },
            [=](double x, double y) {
              return 2.0 * sigma(x, y) * ((x + y) * std::cos(x + y) + std::sin(x + y));
            }};
  }
  if (name == "interface") {
    // P = T(x) B(y) C(x, y) with T = sin(pi x / 2)(x - 1/2), B = y - 1/2, C = x^2 + y^2 + 1; u = P / sigma.
    constexpr double pi = std::numbers::pi;
    auto sigma = [](double x, double) { return x < 0.5 ? 1.0 : 10.0; };
    auto t = [](double x) { return std::sin(pi * x / 2) * (x - 0.5); };
    auto t1 = [](double x) { return pi / 2 * std::cos(pi * x / 2) * (x - 0.5) + std::sin(pi * x / 2); };
    auto t2 = [](double x) {
      return -pi * pi / 4 * std::sin(pi * x / 2) * (x - 0.5) + pi * std::cos(pi * x / 2);
    };
    auto c = [](double x, double y) { return x * x + y * y + 1.0; };
    return {name,
            Box{0.0, 1.0, 0.0, 1.0},
            sigma,
            [=](double x, double y) { return t(x) * (y - 0.5) * c(x, y) / sigma(x, y); },
            [=](double x, double y) { return (y - 0.5) * (t1(x) * c(x, y) + 2.0 * x * t(x)); },
            [=](double x, double y) { return t(x) * (c(x, y) + 2.0 * y * (y - 0.5)); },
            [=](double x, double y) {
              const double b = y - 0.5;
              const double lap = b * (t2(x) * c(x, y) + 4.0 * x * t1(x) + 2.0 * t(x)) + t(x) * (4.0 * y + 2.0 * b);
              return -lap;
            }};
  }
  if (name == "quadratic") {
    return {name,
            Box{0.0, 1.0, 0.0, 1.0},
            [](double, double) { return 1.0; },
            [](double x, double y) { return x * x - y * y; },
            [](double x, double) { return 2.0 * x; },
            [](double, double y) { return -2.0 * y; },
            [](double, double) { return 0.0; }};
  }
  throw std::invalid_argument(fmt::format("unknown manufactured case '{}'", name));
}

EocReport run_eoc(const ManufacturedCase& mc, const std::vector<int>& meshes, const LdgOptions& options) {
  EocReport report{mc.name, std::vector<EocRow>(meshes.size())};
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const int n = meshes[i];
    auto space = DgSpace::create(Mesh(mc.box, n, n));
    auto disc = LdgDiscretization::create(space, options);
    const LdgOperator op(disc, project(space, mc.sigma), 0.0);
    const DgFunction source = project(space, mc.source);
    const BoundaryTrace b = sample_boundary(space, mc.u);
    LdgData data;
    data.source = &source;
    data.dirichlet = &b;
    const LdgSolution sol = op.solve(data);

    const auto normal_flux = [&](double x, double y) {
      const auto& box = mc.box;
      const double tol = 1e-12 * std::max(box.width(), box.height());
      if (std::abs(x - box.xmin) < tol) return -mc.qx(x, y);
      if (std::abs(x - box.xmax) < tol) return mc.qx(x, y);
      if (std::abs(y - box.ymin) < tol) return -mc.qy(x, y);
      return mc.qy(x, y);
    };

    EocRow& row = report.rows[i];
    row.n = n;
    row.cells = space->num_cells();
    row.err_u = l2_error(sol.u, mc.u);
    row.err_qx = l2_error(sol.q.component(0), mc.qx);
    row.err_qy = l2_error(sol.q.component(1), mc.qy);
    row.err_flux = std::hypot(row.err_qx, row.err_qy);
    row.err_boundary = norm_boundary(sol.flux - sample_boundary(space, normal_flux));
    if (i > 0) {
      const EocRow& prev = report.rows[i - 1];
      const double ratio = std::log2(static_cast<double>(n) / prev.n);
      const auto order = [ratio](double coarse, double fine) -> std::optional<double> {
        if (!(coarse > 0.0 && fine > 0.0) || ratio == 0.0) return std::nullopt;
        return std::log2(coarse / fine) / ratio;
      };
      row.order_u = order(prev.err_u, row.err_u);
      row.order_flux = order(prev.err_flux, row.err_flux);
      row.order_qx = order(prev.err_qx, row.err_qx);
      row.order_qy = order(prev.err_qy, row.err_qy);
      row.order_boundary = order(prev.err_boundary, row.err_boundary);
    }
  }
  return report;
}

void write_eoc_csv(std::ostream& os, const EocReport& report) {
  const auto fmt_order = [](const std::optional<double>& o) { return o ? fmt::format("{:.4f}", *o) : std::string(); };
  fmt::print(os, "mesh,n_cells,err_u,order_u,err_flux,order_flux\n");
  for (const EocRow& r : report.rows) {
    fmt::print(os, "{}x{},{},{:.6e},{},{:.6e},{}\n", r.n, r.n, r.cells, r.err_u, fmt_order(r.order_u), r.err_flux,
               fmt_order(r.order_flux));
  }
}

// ---------------------------------------------------------------------------
// Reconstruction metrics

namespace {

std::vector<double> center_values(const DgFunction& f) {
  const Mesh& mesh = f.space()->mesh();
  std::vector<double> v(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) v[c] = evaluate(f, c, Vec2(0.0, 0.0));
  return v;
}

}  // namespace

double blob_height(const DgFunction& sigma) {
  const auto v = center_values(sigma);
  return *std::max_element(v.begin(), v.end());
}

Vec2 blob_center(const DgFunction& sigma, const ScalarFn& background) {
  const Mesh& mesh = sigma.space()->mesh();
  const auto v = center_values(sigma);
  Vec2 acc(0.0, 0.0);
  double mass = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c) {
    const Vec2 p = mesh.cell(c).center();
    const double w = std::max(v[c] - background(p.x(), p.y()), 0.0);
    acc += w * p;
    mass += w;
  }
  if (mass == 0.0) return mesh.cell(0).center() * std::numeric_limits<double>::quiet_NaN();
  return acc / mass;
}

std::vector<LocalMaximum> local_maxima(const DgFunction& sigma, const ScalarFn& background, double threshold) {
  const Mesh& mesh = sigma.space()->mesh();
  const auto v = center_values(sigma);
  std::vector<double> d(v.size());
  for (std::size_t c = 0; c < v.size(); ++c) {
    const Vec2 p = mesh.cell(c).center();
    d[c] = v[c] - background(p.x(), p.y());
  }
  std::vector<LocalMaximum> out;
  for (int j = 0; j < mesh.ny(); ++j) {
    for (int i = 0; i < mesh.nx(); ++i) {
      const auto c = static_cast<std::size_t>(mesh.cell_index(i, j));
      if (!(d[c] > threshold)) continue;
      bool is_max = true;
      for (int dj = -1; dj <= 1 && is_max; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= mesh.nx() || jj >= mesh.ny()) continue;
          if (d[static_cast<std::size_t>(mesh.cell_index(ii, jj))] >= d[c]) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) out.push_back({mesh.cell(c).center(), d[c]});
    }
  }
  return out;
}

double region_mean(const DgFunction& sigma, const std::function<bool(double, double)>& keep) {
  const Mesh& mesh = sigma.space()->mesh();
  const auto v = center_values(sigma);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < v.size(); ++c) {
    const Vec2 p = mesh.cell(c).center();
    if (keep(p.x(), p.y())) {
      sum += v[c];
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace eitdg
