#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "eitdg/dtn.hpp"

namespace eitdg {

struct ReconstructionState;

/// Inner product driving the CG recurrence. kL2 is the literal recurrence:
/// ||r||^2 in L2 with the regularization gradient alpha (Id - Laplace)(sigma - sigma0).
/// kSobolev measures r in the discrete H1 product that (DF)^* is adjoint for,
/// so the regularization gradient becomes alpha (sigma - sigma0).
enum class CgInnerProduct { kL2, kSobolev };

struct InverseConfig {
  double alpha_reg = 1e-8;
  double tau = 3.0;
  double rho = 0.9;
  int max_outer = 50;
  int max_inner = 50;
  CgInnerProduct inner_product = CgInnerProduct::kSobolev;
  /// Initial guess and regularization anchor.
  std::optional<DgFunction> sigma0;
  // Noise-free runs (delta = 0) stop below misfit_floor, on a stalled relative
  // decrease, or once an inner solve exhausts max_inner without meeting rho.
  double misfit_floor = 1e-8;
  double min_relative_decrease = 1e-3;
  /// Called after every iterate, including k = 0.
  std::function<void(const ReconstructionState&)> observer;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct Measurements {
  std::vector<BoundaryTrace> voltages;  // f_j
  std::vector<BoundaryTrace> currents;  // g_j (possibly noisy)
  double delta = 0.0;
  /// Estimated discretization error of the reconstruction model against the data
  /// (same norm as delta); diagnostic only, 0 when unknown.
  double model_error = 0.0;

  std::size_t size() const { return voltages.size(); }
  void validate(const SpacePtr& space) const;
};

struct IterationRecord {
  int k = 0;
  double misfit = 0.0;
  int inner = 0;
  double dsigma_h1 = 0.0;
  bool breakdown = false;
  bool converged = true;  // inner solve met the rho condition
};

enum class StopReason { kDiscrepancy, kMisfitFloor, kStalled, kInnerExhausted, kMaxOuter };

const char* to_string(StopReason reason);

struct ReconstructionState {
  std::shared_ptr<const DtnModel> model;
  DgFunction sigma;
  int k = 0;
  std::shared_ptr<const ForwardCache> cache;
  double misfit = 0.0;
  std::vector<IterationRecord> history;
  StopReason stop = StopReason::kMaxOuter;
};

/// Sum over j of ||F(sigma, f_j) - g_j||_{L2(boundary)}.
double data_misfit(const ForwardCache& cache, const Measurements& meas);

/// Builds the state at sigma (one factorization plus M forward solves).
ReconstructionState make_state(std::shared_ptr<const DtnModel> model, const DgFunction& sigma,
                               const Measurements& meas);

double objective(const ReconstructionState& state, const Measurements& meas, const InverseConfig& cfg);

/// sum_j (DF_j)^* DF_j p + alpha (Id - Laplace) p.
DgFunction apply_normal_operator(const ReconstructionState& state, const DgFunction& p, const InverseConfig& cfg);

struct CgResult {
  DgFunction dsigma;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  /// Linearized misfit sum_j ||g_j - F_j - DF_j dsigma_l|| for l = 0, 1, ...
  std::vector<double> linearized_misfit;
};

CgResult cg_solve(const ReconstructionState& state, const Measurements& meas, const InverseConfig& cfg);

/// Gauss-Newton outer loop. The optional log receives one CSV row per iterate.
ReconstructionState gauss_newton(const Measurements& meas, const InverseConfig& cfg, const SpacePtr& space,
                                 const LdgOptions& options = {});
ReconstructionState gauss_newton(const Measurements& meas, const InverseConfig& cfg,
                                 std::shared_ptr<const DtnModel> model);

void write_iteration_csv(std::ostream& os, const std::vector<IterationRecord>& history);

}  // namespace eitdg
