#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eitdg/inverse.hpp"

namespace eitdg {

/// A * exp(-width * ((x - cx)^2 + (y - cy)^2)).
struct Blob {
  double amplitude = 1.0;
  Vec2 center{0.0, 0.0};
  double width = 8.0;
};

/// Background `value`, replaced by `value_below` for y < split_y when a split is present.
struct Background {
  double value = 1.0;
  std::optional<double> split_y;
  double value_below = 1.0;
};

struct Phantom {
  std::string name;
  Background background;
  std::vector<Blob> blobs;
};

/// Known phantoms: one_blob, two_blobs, discontinuous.
Phantom find_phantom(const std::string& name);
std::vector<std::string> phantom_names();

ScalarFn phantom_sigma(const Phantom& p);
ScalarFn phantom_background(const Phantom& p);

/// sin(x+y), cos(x+y), sin 2(x+y), cos 2(x+y).
std::vector<ScalarFn> measurement_functions();
std::vector<BoundaryTrace> measurement_suite(const SpacePtr& space);

/// Standard normal draws from mt19937_64. Each draw consumes two 64-bit words:
/// u = (word >> 11) * 2^-53, then Box-Muller with the cosine branch.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  double uniform();
  std::mt19937_64 engine_;
};

struct NoiseModel {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Measurements measurements;
  std::vector<BoundaryTrace> exact_currents;
};

/// Sum over the measurement suite of the gap between the coarse-mesh boundary
/// current and the restricted fine-mesh current, both at `sigma`.
double discretization_gap(const ScalarFn& sigma, const SpacePtr& fine, const SpacePtr& coarse,
                          const LdgOptions& options = {});

/// Boundary current of the fine-mesh solution evaluated pointwise at the
/// coarse boundary quadrature points.
BoundaryTrace restrict_current(const LdgDiscretization& fine, const DgFunction& u, const FluxField& q,
                               const ScalarFn& voltage, const SpacePtr& coarse);

/// Noise is added per boundary quadrature point, g + eps |g| xi, drawn in
/// measurement, boundary slot, quadrature point order.
SyntheticData generate_data(const Phantom& phantom, const SpacePtr& fine, const SpacePtr& coarse,
                            const NoiseModel& noise, const LdgOptions& options = {});

void write_measurement_csv(std::ostream& os, const SpacePtr& space, const BoundaryTrace& voltage,
                           const BoundaryTrace& exact, const BoundaryTrace& noisy);

/// Manufactured solution of -div(sigma grad u) = r with flux q = sigma grad u.
struct ManufacturedCase {
  std::string name;
  Box box;
  ScalarFn sigma, u, qx, qy, source;
};

/// smooth, interface, quadratic.
ManufacturedCase find_case(const std::string& name);

struct EocRow {
  int n = 0;
  std::size_t cells = 0;
  double err_u = 0.0;
  double err_flux = 0.0;  // L2 error of q = sigma grad u over the domain
  double err_qx = 0.0;
  double err_qy = 0.0;
  double err_boundary = 0.0;  // L2 error of q_hat . nu on the boundary
  std::optional<double> order_u, order_flux, order_qx, order_qy, order_boundary;
};

struct EocReport {
  std::string name;
  std::vector<EocRow> rows;
};

EocReport run_eoc(const ManufacturedCase& mc, const std::vector<int>& meshes, const LdgOptions& options = {});
void write_eoc_csv(std::ostream& os, const EocReport& report);

/// Maximum of sigma at cell centers.
double blob_height(const DgFunction& sigma);
/// Center of mass of max(sigma - background, 0) over cell centers.
Vec2 blob_center(const DgFunction& sigma, const ScalarFn& background);

struct LocalMaximum {
  Vec2 point;
  double value;
};
/// Strict local maxima of sigma - background on the cell-center grid (8-neighbourhood) above threshold.
std::vector<LocalMaximum> local_maxima(const DgFunction& sigma, const ScalarFn& background, double threshold);

/// Mean of sigma over cell centers accepted by `keep`.
double region_mean(const DgFunction& sigma, const std::function<bool(double, double)>& keep);

}  // namespace eitdg
