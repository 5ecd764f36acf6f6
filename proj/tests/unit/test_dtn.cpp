#include <doctest.h>

#include <cmath>

#include "eitdg/dtn.hpp"
#include "eitdg/experiments.hpp"

using namespace eitdg;

namespace {

SpacePtr sym_space(int n) { return DgSpace::create(Mesh({-1.0, 1.0, -1.0, 1.0}, n, n)); }

double bump(double x, double y) { return 1.0 + std::exp(-8.0 * (x * x + (y - 0.55) * (y - 0.55))); }
double perturbation(double x, double y) { return std::exp(-4.0 * ((x - 0.3) * (x - 0.3) + y * y)); }

struct AdjointGaps {
  double sobolev;  // gap in the product the adjoint is built for
  double plain;    // gap in L2 + zero-trace lifted gradients
};

AdjointGaps adjoint_gaps(int n) {
  auto space = sym_space(n);
  const ForwardCache cache = make_forward_cache(project(space, bump), measurement_suite(space));
  const DgFunction ds = project(space, perturbation);
  const BoundaryTrace phi = sample_boundary(space, [](double x, double y) { return std::cos(x - 2.0 * y); });
  const double lhs = inner_boundary(df_apply(cache, 0, ds), phi);
  const DgFunction w = df_adjoint_apply(cache, 0, phi);
  const double sob = cache.model().inner_h1(ds, w);
  const auto& disc = *cache.model().discretization();
  const double plain = inner_h1(ds, w, disc.lifted_gradient(ds, true), disc.lifted_gradient(w, true));
  return {std::abs(lhs - sob) / std::abs(lhs), std::abs(lhs - plain) / std::abs(lhs)};
}

}  // namespace

TEST_CASE("unit conductivity with u = x gives the normal x component") {
  auto space = sym_space(4);
  const ForwardResult r = forward_map(project(space, [](double, double) { return 1.0; }),
                                      sample_boundary(space, [](double x, double) { return x; }));
  const Mesh& m = space->mesh();
  for (std::size_t s = 0; s < m.boundary_edges().size(); ++s) {
    const double nx = m.edge(static_cast<std::size_t>(m.boundary_edges()[s])).normal.x();
    for (int k = 0; k < kEdgePoints; ++k) CHECK(r.current(s, k) == doctest::Approx(nx).epsilon(1e-10));
  }
  const ForwardResult flat = forward_map(project(space, [](double, double) { return 1.0; }),
                                         sample_boundary(space, [](double, double) { return -2.0; }));
  CHECK(flat.current.values().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cache solves agree with single forward solves") {
  auto space = sym_space(6);
  const DgFunction sigma = project(space, bump);
  const auto suite = measurement_suite(space);
  const ForwardCache cache = make_forward_cache(sigma, suite);
  REQUIRE(cache.size() == 4);
  for (std::size_t j = 0; j < suite.size(); ++j) {
    const ForwardResult r = forward_map(sigma, suite[j]);
    CHECK((r.current.values() - cache.current(j).values()).norm() < 1e-12);
  }
}

TEST_CASE("discrete DtN map is symmetric") {
  auto space = sym_space(8);
  const ForwardCache cache = make_forward_cache(project(space, bump), measurement_suite(space));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      const double a = inner_boundary(cache.current(i), cache.voltage(j));
      const double b = inner_boundary(cache.current(j), cache.voltage(i));
      CHECK(a == doctest::Approx(b).epsilon(1e-3));
    }
  }
}

TEST_CASE("derivative is linear and vanishes for a zero perturbation") {
  auto space = sym_space(8);
  const ForwardCache cache = make_forward_cache(project(space, bump), measurement_suite(space));
  CHECK(df_apply(cache, 1, DgFunction(space)).values().norm() == 0.0);
  const DgFunction a = project(space, perturbation);
  const DgFunction b = project(space, [](double x, double y) { return x * y; });
  const BoundaryTrace lhs = df_apply(cache, 1, 2.0 * a - b);
  const BoundaryTrace rhs = 2.0 * df_apply(cache, 1, a) - df_apply(cache, 1, b);
  CHECK((lhs.values() - rhs.values()).norm() < 1e-10 * rhs.values().norm());
}

TEST_CASE("finite differences approach the derivative at first order") {
  auto space = sym_space(12);
  const DgFunction sigma = project(space, bump);
  const DgFunction ds = project(space, perturbation);
  const BoundaryTrace f = measurement_suite(space)[0];
  const ForwardCache cache = make_forward_cache(sigma, {f});
  const BoundaryTrace lin = df_apply(cache, 0, ds);
  double prev = 0.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const BoundaryTrace fd = (1.0 / eps) * (forward_map(sigma + eps * ds, f).current - cache.current(0));
    const double err = norm_boundary(fd - lin);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(10.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("adjoint of zero data is zero") {
  auto space = sym_space(6);
  const ForwardCache cache = make_forward_cache(project(space, bump), measurement_suite(space));
  CHECK(df_adjoint_apply(cache, 2, BoundaryTrace(space)).coeffs().norm() == 0.0);
}

TEST_CASE("orthogonal gradients produce a zero Sobolev gradient") {
  auto space = sym_space(6);
  const ForwardCache cache = make_forward_cache(project(space, [](double, double) { return 1.0; }),
                                                {sample_boundary(space, [](double x, double) { return x; })});
  const DgFunction w = df_adjoint_apply(cache, 0, sample_boundary(space, [](double, double y) { return y; }));
  CHECK(w.coeffs().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("adjoint identity") {
  const AdjointGaps g16 = adjoint_gaps(16);
  const AdjointGaps g32 = adjoint_gaps(32);
  CHECK(g16.sobolev < 1e-11);
  CHECK(g32.sobolev < 1e-11);
  CHECK(g32.plain <= 0.5 * g16.plain);
}

TEST_CASE("Sobolev product is symmetric and positive") {
  auto space = sym_space(6);
  const auto model = DtnModel::create(space);
  const DgFunction a = project(space, perturbation);
  const DgFunction b = project(space, [](double x, double y) { return x - y * y; });
  CHECK(model->inner_h1(a, b) == doctest::Approx(model->inner_h1(b, a)).epsilon(1e-13));
  CHECK(model->inner_h1(a, a) > inner_l2(a, a));
  CHECK(inner_l2(model->apply_sobolev(a), b) == doctest::Approx(model->inner_h1(a, b)).epsilon(1e-10));
}
