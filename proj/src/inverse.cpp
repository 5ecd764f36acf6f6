#include "eitdg/inverse.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "eitdg/parallel.hpp"

namespace eitdg {

void InverseConfig::validate() const {
  if (!(alpha_reg >= 0.0)) throw std::invalid_argument(fmt::format("alpha_reg must be >= 0 (got {})", alpha_reg));
  if (!(tau > 1.0)) throw std::invalid_argument(fmt::format("tau must be > 1 (got {})", tau));
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument(fmt::format("rho must lie in (0, 1) (got {})", rho));
  if (!(rho * rho * tau > 2.0)) {
    throw std::invalid_argument(fmt::format("rho^2 * tau must exceed 2 (got {})", rho * rho * tau));
  }
  if (max_outer < 0 || max_inner < 1) throw std::invalid_argument("max_outer must be >= 0 and max_inner >= 1");
  if (!sigma0) throw std::invalid_argument("sigma0 is required");
}

void Measurements::validate(const SpacePtr& space) const {
  if (voltages.size() != currents.size()) {
    throw std::invalid_argument(
        fmt::format("measurement count mismatch: {} voltages, {} currents", voltages.size(), currents.size()));
  }
  for (std::size_t j = 0; j < size(); ++j) {
    require_same_space(space, voltages[j].space(), "Measurements");
    require_same_space(space, currents[j].space(), "Measurements");
  }
  if (!(delta >= 0.0)) throw std::invalid_argument("noise level delta must be >= 0");
  if (!(model_error >= 0.0)) throw std::invalid_argument("model_error must be >= 0");
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kDiscrepancy: return "discrepancy";
    case StopReason::kMisfitFloor: return "misfit_floor";
    case StopReason::kStalled: return "stalled";
    case StopReason::kInnerExhausted: return "inner_exhausted";
    case StopReason::kMaxOuter: return "max_outer";
  }
  return "unknown";
}

double data_misfit(const ForwardCache& cache, const Measurements& meas) {
  double total = 0.0;
  for (std::size_t j = 0; j < meas.size(); ++j) total += norm_boundary(cache.current(j) - meas.currents[j]);
  return total;
}

ReconstructionState make_state(std::shared_ptr<const DtnModel> model, const DgFunction& sigma,
                               const Measurements& meas) {
  ReconstructionState state{model, sigma, 0, nullptr, 0.0, {}, StopReason::kMaxOuter};
  state.cache = std::make_shared<const ForwardCache>(model->linearize(sigma, meas.voltages));
  state.misfit = data_misfit(*state.cache, meas);
  return state;
}

double objective(const ReconstructionState& state, const Measurements& meas, const InverseConfig& cfg) {
  double value = 0.0;
  for (std::size_t j = 0; j < meas.size(); ++j) {
    const double r = norm_boundary(state.cache->current(j) - meas.currents[j]);
    value += 0.5 * r * r;
  }
  if (cfg.alpha_reg > 0.0) {
    const DgFunction d = state.sigma - *cfg.sigma0;
    value += 0.5 * cfg.alpha_reg * state.model->inner_h1(d, d);
  }
  return value;
}

namespace {

// sum_j (DF_j)^* phi_j, evaluated concurrently.
DgFunction sum_adjoint(const ForwardCache& cache, const std::vector<BoundaryTrace>& phi) {
  std::vector<DgFunction> parts(phi.size(), DgFunction(cache.model().space()));
  parallel_for(phi.size(), [&](std::size_t j) { parts[j] = df_adjoint_apply(cache, j, phi[j]); });
  DgFunction total(cache.model().space());
  for (const auto& w : parts) total += w;
  return total;
}

std::vector<BoundaryTrace> apply_all(const ForwardCache& cache, const DgFunction& p) {
  std::vector<BoundaryTrace> out(cache.size(), BoundaryTrace(cache.model().space()));
  parallel_for(cache.size(), [&](std::size_t j) { out[j] = df_apply(cache, j, p); });
  return out;
}

}  // namespace

DgFunction apply_normal_operator(const ReconstructionState& state, const DgFunction& p, const InverseConfig& cfg) {
  DgFunction out = sum_adjoint(*state.cache, apply_all(*state.cache, p));
  if (cfg.alpha_reg > 0.0) out.axpy(cfg.alpha_reg, state.model->apply_sobolev(p));
  return out;
}

CgResult cg_solve(const ReconstructionState& state, const Measurements& meas, const InverseConfig& cfg) {
  const ForwardCache& cache = *state.cache;
  const DtnModel& model = *state.model;
  const SpacePtr& space = model.space();
  const std::size_t m = meas.size();

  // Linearized residuals g_j - F_j - DF_j dsigma, updated alongside dsigma.
  std::vector<BoundaryTrace> residual;
  residual.reserve(m);
  double target = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    residual.push_back(meas.currents[j] - cache.current(j));
    target += norm_boundary(residual.back());
  }
  target *= cfg.rho;
  auto linearized = [&] {
    double total = 0.0;
    for (const auto& r : residual) total += norm_boundary(r);
    return total;
  };

  CgResult result{DgFunction(space), 0, false, false, {linearized()}};

  const bool sobolev = cfg.inner_product == CgInnerProduct::kSobolev;
  const auto regularization = [&](const DgFunction& v) { return sobolev ? v : model.apply_sobolev(v); };
  const auto norm2 = [&](const DgFunction& v) { return sobolev ? model.inner_h1(v, v) : inner_l2(v, v); };

  DgFunction r = sum_adjoint(cache, residual);
  if (cfg.alpha_reg > 0.0) r.axpy(-cfg.alpha_reg, regularization(state.sigma - *cfg.sigma0));
  double rr = norm2(r);
  if (rr == 0.0 || (m > 0 && result.linearized_misfit.front() < target)) {
    result.converged = true;
    return result;
  }
  DgFunction p = r;

  for (int l = 1; l <= cfg.max_inner; ++l) {
    const std::vector<BoundaryTrace> dfp = apply_all(cache, p);
    double denom = 0.0;
    for (const auto& t : dfp) denom += inner_boundary(t, t);
    if (cfg.alpha_reg > 0.0) denom += cfg.alpha_reg * model.inner_h1(p, p);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      result.breakdown = true;
      break;
    }
    const double step = rr / denom;
    result.dsigma.axpy(step, p);
    for (std::size_t j = 0; j < m; ++j) residual[j] -= step * dfp[j];
    result.iterations = l;
    result.linearized_misfit.push_back(linearized());
    if (m > 0 && result.linearized_misfit.back() < target) {
      result.converged = true;
      break;
    }

    DgFunction ap = sum_adjoint(cache, dfp);
    if (cfg.alpha_reg > 0.0) ap.axpy(cfg.alpha_reg, regularization(p));
    r.axpy(-step, ap);
    const double rr_next = norm2(r);
    if (rr_next == 0.0) {
      result.converged = true;
      break;
    }
    const double beta = rr_next / rr;
    rr = rr_next;
    p *= beta;
    p += r;
  }
  return result;
}

namespace {

bool should_stop(const ReconstructionState& s, const Measurements& meas, const InverseConfig& cfg,
                 std::optional<double> previous, StopReason& reason) {
  if (meas.delta > 0.0) {
    if (s.misfit <= cfg.tau * meas.delta) {
      reason = StopReason::kDiscrepancy;
      return true;
    }
    return false;
  }
  if (s.misfit < cfg.misfit_floor) {
    reason = StopReason::kMisfitFloor;
    return true;
  }
  if (!s.history.empty() && s.history.back().inner >= cfg.max_inner && !s.history.back().converged) {
    reason = StopReason::kInnerExhausted;
    return true;
  }
  if (previous && *previous > 0.0 && (*previous - s.misfit) / *previous < cfg.min_relative_decrease) {
    reason = StopReason::kStalled;
    return true;
  }
  return false;
}

}  // namespace

ReconstructionState gauss_newton(const Measurements& meas, const InverseConfig& cfg, const SpacePtr& space,
                                 const LdgOptions& options) {
  return gauss_newton(meas, cfg, DtnModel::create(space, options));
}

ReconstructionState gauss_newton(const Measurements& meas, const InverseConfig& cfg,
                                 std::shared_ptr<const DtnModel> model) {
  cfg.validate();
  meas.validate(model->space());
  require_same_space(model->space(), cfg.sigma0->space(), "gauss_newton");

  ReconstructionState state = make_state(model, *cfg.sigma0, meas);
  state.history.push_back(IterationRecord{0, state.misfit, 0, 0.0, false, true});
  if (cfg.observer) cfg.observer(state);
  std::optional<double> previous;
  while (!should_stop(state, meas, cfg, previous, state.stop)) {
    if (state.k >= cfg.max_outer) {
      state.stop = StopReason::kMaxOuter;
      break;
    }
    const CgResult step = cg_solve(state, meas, cfg);
    DgFunction next = state.sigma + step.dsigma;
    previous = state.misfit;
    try {
      ReconstructionState trial = make_state(model, next, meas);
      trial.k = state.k + 1;
      trial.history = std::move(state.history);
      state = std::move(trial);
    } catch (const CoefficientRangeError& e) {
      throw CoefficientRangeError(fmt::format("Gauss-Newton iteration {}: {}", state.k + 1, e.what()));
    } catch (const SolverError& e) {
      throw SolverError(fmt::format("Gauss-Newton iteration {}: {}", state.k + 1, e.what()));
    }
    state.history.push_back(IterationRecord{state.k, state.misfit, step.iterations,
                                            std::sqrt(std::max(0.0, model->inner_h1(step.dsigma, step.dsigma))),
                                            step.breakdown, step.converged});
    if (cfg.observer) cfg.observer(state);
  }
  return state;
}

void write_iteration_csv(std::ostream& os, const std::vector<IterationRecord>& history) {
  fmt::print(os, "k,misfit,inner,dsigma_h1\n");
  for (const auto& rec : history) fmt::print(os, "{},{:.10e},{},{:.10e}\n", rec.k, rec.misfit, rec.inner, rec.dsigma_h1);
}

}  // namespace eitdg
