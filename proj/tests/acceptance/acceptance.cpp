// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. argv[1] is a scratch directory for CLI runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "eitdg/cli.hpp"
#include "eitdg/experiments.hpp"
#include "eitdg/parallel.hpp"

using namespace eitdg;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;
const Box kBox{-1.0, 1.0, -1.0, 1.0};

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  fmt::print("criterion {:>2}: {}  {}\n", id, ok ? "PASS" : "FAIL", detail);
  std::cout.flush();
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

struct Reconstruction {
  DgFunction sigma;
  ScalarFn background;
  double misfit = 0.0;
  double delta = 0.0;
  int k = 0;
  StopReason stop = StopReason::kMaxOuter;
  double seconds = 0.0;
};

Reconstruction reconstruct(const std::string& phantom_name, double epsilon, double alpha, int n = 32) {
  const auto t0 = std::chrono::steady_clock::now();
  const Phantom phantom = find_phantom(phantom_name);
  auto coarse = DgSpace::create(Mesh(kBox, n, n));
  auto fine = DgSpace::create(Mesh(kBox, 2 * n, 2 * n));
  const SyntheticData data = generate_data(phantom, fine, coarse, NoiseModel{epsilon, kSeed});
  InverseConfig cfg;
  cfg.alpha_reg = alpha;
  cfg.sigma0 = project(coarse, phantom_background(phantom));
  const ReconstructionState s = gauss_newton(data.measurements, cfg, coarse);
  return {s.sigma, phantom_background(phantom), s.misfit, data.measurements.delta, s.k, s.stop, seconds_since(t0)};
}

double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Every target must be matched by a distinct maximum within tol.
bool maxima_match(const std::vector<LocalMaximum>& maxima, const std::vector<Vec2>& targets, double tol) {
  if (maxima.size() != targets.size()) return false;
  std::vector<bool> used(maxima.size(), false);
  for (const Vec2& t : targets) {
    bool found = false;
    for (std::size_t i = 0; i < maxima.size() && !found; ++i) {
      if (!used[i] && distance(maxima[i].point, t) <= tol) used[i] = found = true;
    }
    if (!found) return false;
  }
  return true;
}

std::string describe(const std::vector<LocalMaximum>& maxima) {
  std::string s;
  for (const auto& m : maxima) s += fmt::format(" ({:.3f}, {:.3f}; {:.3f})", m.point.x(), m.point.y(), m.value);
  return s;
}

std::string fmt_order(const std::optional<double>& o) { return o ? fmt::format("{:.3f}", *o) : "-"; }

void criterion1() {
  set_thread_limit(1);
  const auto t0 = std::chrono::steady_clock::now();
  const EocReport rep = run_eoc(find_case("smooth"), {8, 16, 32, 64});
  const double secs = seconds_since(t0);
  set_thread_limit(0);
  const EocRow& last = rep.rows.back();
  const double ou = last.order_u.value_or(0.0);
  const double oq = last.order_flux.value_or(0.0);
  const bool ok = within(ou, 2.8, 3.2) && oq >= 2.3 && within(last.err_u, 4.94e-8 / 5.0, 4.94e-8 * 5.0) && secs <= 60.0;
  report(1, ok,
         fmt::format("EOC u {:.3f}, EOC flux {:.3f} (boundary trace {}), err_u(64) {:.3e}, {:.1f} s single-threaded",
                     ou, oq, fmt_order(last.order_boundary), last.err_u, secs));
}

void criterion2() {
  const EocReport rep = run_eoc(find_case("interface"), {8, 16, 32, 64});
  const EocRow& last = rep.rows.back();
  const double ou = last.order_u.value_or(0.0);
  const double ox = last.order_qx.value_or(0.0);
  const double oy = last.order_qy.value_or(0.0);
  const bool ok = within(ou, 2.8, 3.2) && within(ox, 1.8, 2.2) && within(oy, 1.8, 2.2) &&
                  within(last.err_u, 1.89e-7 / 5.0, 1.89e-7 * 5.0);
  report(2, ok,
         fmt::format("EOC u {:.3f}, sigma u_x {:.3f}, sigma u_y {:.3f}, err_u(64) {:.3e}", ou, ox, oy, last.err_u));
}

double height(const Reconstruction& r) { return blob_height(r.sigma); }

void criteria3and4(double& h0, double& h01, Reconstruction& noisy01) {
  const Reconstruction r0 = reconstruct("one_blob", 0.0, 1e-8);
  const Vec2 c = blob_center(r0.sigma, r0.background);
  h0 = height(r0);
  const bool ok3 = within(h0, 1.66, 1.86) && distance(c, Vec2(0.0, 0.55)) <= 0.1 && r0.misfit < 3.0 * 2.74e-2 &&
                   r0.seconds <= 600.0;
  report(3, ok3,
         fmt::format("height {:.4f}, center ({:.3f}, {:.3f}), misfit {:.3e}, stop {} at k={}, {:.1f} s", h0, c.x(),
                     c.y(), r0.misfit, to_string(r0.stop), r0.k, r0.seconds));

  noisy01 = reconstruct("one_blob", 1e-3, 1e-8);
  const Reconstruction r1 = reconstruct("one_blob", 1e-2, 1e-8);
  h01 = height(noisy01);
  const double h1 = height(r1);
  const auto stopped = [](const Reconstruction& r) {
    return r.stop == StopReason::kDiscrepancy && r.misfit <= 3.0 * r.delta;
  };
  const bool ok4 = stopped(noisy01) && stopped(r1) && within(h01, 1.55, 1.90) && within(h1, 1.50, 1.85) &&
                   h0 >= h01 && h01 >= h1;
  report(4, ok4,
         fmt::format("0.1%: height {:.4f}, {} at k={}, misfit {:.3e} vs tau*delta {:.3e}; "
                     "1%: height {:.4f}, {} at k={}, misfit {:.3e} vs {:.3e}; ordering {:.4f} >= {:.4f} >= {:.4f}",
                     h01, to_string(noisy01.stop), noisy01.k, noisy01.misfit, 3.0 * noisy01.delta, h1,
                     to_string(r1.stop), r1.k, r1.misfit, 3.0 * r1.delta, h0, h01, h1));
}

void criterion5() {
  const Reconstruction r = reconstruct("two_blobs", 1e-3, 1e-8);
  const auto maxima = local_maxima(r.sigma, r.background, 0.3);
  const bool ok = maxima_match(maxima, {Vec2(-0.7, 0.0), Vec2(0.0, 0.7)}, 0.15);
  report(5, ok, fmt::format("{} maxima above 0.3:{} (k={})", maxima.size(), describe(maxima), r.k));
}

void criterion6() {
  const Reconstruction r = reconstruct("discontinuous", 1e-3, 1e-8);
  const auto maxima = local_maxima(r.sigma, r.background, 0.3);
  const bool peaks = maxima_match(maxima, {Vec2(0.0, -0.7), Vec2(0.0, 0.7)}, 0.15);
  const auto away = [](double x, double y) {
    return distance(Vec2(x, y), Vec2(0.0, 0.7)) > 0.4 && distance(Vec2(x, y), Vec2(0.0, -0.7)) > 0.4;
  };
  const double lower = region_mean(r.sigma, [&](double x, double y) { return y < -0.2 && away(x, y); });
  const double upper = region_mean(r.sigma, [&](double x, double y) { return y > 0.2 && away(x, y); });
  const bool ok = peaks && within(lower, 1.3, 1.7) && within(upper, 0.85, 1.15);
  report(6, ok,
         fmt::format("maxima:{}; background mean below {:.4f}, above {:.4f} (k={})", describe(maxima), lower, upper,
                     r.k));
}

double bump(double x, double y) { return 1.0 + std::exp(-8.0 * (x * x + (y - 0.55) * (y - 0.55))); }
double perturbation(double x, double y) { return std::exp(-4.0 * ((x - 0.3) * (x - 0.3) + y * y)); }

double adjoint_gap(int n) {
  auto space = DgSpace::create(Mesh(kBox, n, n));
  const ForwardCache cache = make_forward_cache(project(space, bump), measurement_suite(space));
  const DgFunction ds = project(space, perturbation);
  const BoundaryTrace phi = sample_boundary(space, [](double x, double y) { return std::cos(x - 2.0 * y); });
  const double lhs = inner_boundary(df_apply(cache, 0, ds), phi);
  const DgFunction w = df_adjoint_apply(cache, 0, phi);
  const auto& disc = *cache.model().discretization();
  // w vanishes on the boundary, so the identity holds for the zero-trace gradient form
  const double rhs = inner_h1(ds, w, disc.lifted_gradient(ds, true), disc.lifted_gradient(w, true));
  return std::abs(lhs - rhs) / std::abs(lhs);
}

void criterion7() {
  auto space = DgSpace::create(Mesh(kBox, 16, 16));
  const DgFunction sigma = project(space, bump);
  const DgFunction ds = project(space, perturbation);
  const BoundaryTrace f = measurement_suite(space)[0];
  const ForwardCache cache = make_forward_cache(sigma, {f});
  const BoundaryTrace lin = df_apply(cache, 0, ds);
  std::vector<double> errs;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const BoundaryTrace fd = (1.0 / eps) * (forward_map(sigma + eps * ds, f).current - cache.current(0));
    errs.push_back(norm_boundary(fd - lin));
  }
  const double s1 = std::log10(errs[0] / errs[1]);
  const double s2 = std::log10(errs[1] / errs[2]);
  const bool fd_ok = within(s1, 0.8, 1.2) && within(s2, 0.8, 1.2);

  const double g16 = adjoint_gap(16);
  const double g32 = adjoint_gap(32);
  const bool ok = fd_ok && g32 <= 0.5 * g16;
  report(7, ok,
         fmt::format("FD errors {:.3e} {:.3e} {:.3e} (slopes {:.3f}, {:.3f}); adjoint gap 16x16 {:.3e}, 32x32 {:.3e}",
                     errs[0], errs[1], errs[2], s1, s2, g16, g32));
}

void criterion8() {
  const EocReport rep = run_eoc(find_case("quadratic"), {1, 2, 3, 8, 16});
  double worst = 0.0;
  for (const auto& row : rep.rows) worst = std::max(worst, row.err_u);
  report(8, worst <= 1e-9, fmt::format("max u error over meshes 1,2,3,8,16: {:.3e}", worst));
}

void criterion9(double h01_alpha_1e8) {
  std::map<double, double> heights;
  heights[1e-8] = h01_alpha_1e8;
  for (double a : {1e-4, 1e-5, 1e-6, 1e-7, 0.0}) heights[a] = height(reconstruct("one_blob", 1e-3, a));
  double lo = 1e300, hi = -1e300;
  std::string list;
  for (const auto& [a, h] : heights) {
    lo = std::min(lo, h);
    hi = std::max(hi, h);
    list += fmt::format(" {:g}:{:.4f}", a, h);
  }
  const double gap = std::abs(heights[1e-8] - heights[0.0]);
  const bool ok = hi - lo <= 0.2 && gap <= 0.02;
  report(9, ok, fmt::format("heights{}; range {:.4f}, |h(1e-8) - h(0)| {:.4f}", list, hi - lo, gap));
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[entry.path().filename().string()] = ss.str();
  }
  return out;
}

void criterion10(const fs::path& scratch) {
  RunConfig cfg;
  cfg.mode = RunMode::kReconstruct;
  cfg.n = 12;
  cfg.epsilon = 1e-3;
  cfg.seed = 2024;
  cfg.max_outer = 6;
  std::ostringstream log, err;
  std::vector<std::map<std::string, std::string>> outputs;
  bool ran = true;
  for (const char* name : {"run_a", "run_b"}) {
    cfg.out_dir = scratch / name;
    fs::remove_all(cfg.out_dir);
    ran = ran && run(cfg, log, err) == 0;
    if (ran) outputs.push_back(csv_files(cfg.out_dir));
  }
  const bool ok = ran && outputs.size() == 2 && !outputs[0].empty() && outputs[0] == outputs[1];
  report(10, ok,
         ran ? fmt::format("{} CSV files compared byte-wise", outputs.empty() ? 0 : outputs[0].size())
             : "run failed: " + err.str());
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "eitdg_acceptance";
  fs::create_directories(scratch);
  try {
    criterion1();
    criterion2();
    double h0 = 0.0, h01 = 0.0;
    Reconstruction noisy01{DgFunction(DgSpace::create(Mesh(kBox, 1, 1))), {}};
    criteria3and4(h0, h01, noisy01);
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9(h01);
    criterion10(scratch);
  } catch (const std::exception& e) {
    fmt::print("acceptance aborted: {}\n", e.what());
    return 2;
  }
  fmt::print("{} of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
