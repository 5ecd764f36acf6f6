#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "eitdg/experiments.hpp"

using namespace eitdg;

namespace {

SpacePtr sym_space(int n) { return DgSpace::create(Mesh({-1.0, 1.0, -1.0, 1.0}, n, n)); }

double total_norm(const std::vector<BoundaryTrace>& traces) {
  double s = 0.0;
  for (const auto& t : traces) s += norm_boundary(t);
  return s;
}

}  // namespace

TEST_CASE("phantom values") {
  const ScalarFn one_blob = phantom_sigma(find_phantom("one_blob"));
  CHECK(one_blob(0.0, 0.55) == doctest::Approx(2.0));
  CHECK(one_blob(-1.0, -1.0) == doctest::Approx(1.0).epsilon(1e-8));
  const ScalarFn disc = phantom_sigma(find_phantom("discontinuous"));
  CHECK(disc(0.5, -0.5) == doctest::Approx(1.5 + std::exp(-5.8)).epsilon(1e-14));
  CHECK(phantom_background(find_phantom("discontinuous"))(0.3, 0.4) == 1.0);
  CHECK_THROWS_AS(find_phantom("three_blobs"), std::invalid_argument);
}

TEST_CASE("phantoms stay within [1, 2.5]") {
  for (const std::string& name : phantom_names()) {
    const ScalarFn s = phantom_sigma(find_phantom(name));
    for (int i = 0; i <= 200; ++i) {
      for (int j = 0; j <= 200; ++j) {
        const double v = s(-1.0 + 0.01 * i, -1.0 + 0.01 * j);
        CHECK_MESSAGE((v >= 1.0 && v <= 2.5 + 1e-12), name);
      }
    }
  }
}

TEST_CASE("measurement functions") {
  const auto f = measurement_functions();
  REQUIRE(f.size() == 4);
  CHECK(f[1](0.0, 0.0) == 1.0);
  CHECK(f[2](1.0, 1.0) == doctest::Approx(-0.7568024953));
  for (double x : {-0.3, 0.7}) CHECK(f[0](x, 0.2) * f[0](x, 0.2) + f[1](x, 0.2) * f[1](x, 0.2) == doctest::Approx(1.0));
  CHECK(measurement_suite(sym_space(4)).size() == 4);
}

TEST_CASE("normal stream is reproducible and roughly standard") {
  NormalStream a(42), b(42), c(43);
  double sum = 0.0, sq = 0.0;
  bool differs = false;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = a.next();
    CHECK(x == b.next());
    differs = differs || x != c.next();
    sum += x;
    sq += x * x;
  }
  CHECK(differs);
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("noise-free data carries zero delta") {
  const SyntheticData d = generate_data(find_phantom("one_blob"), sym_space(16), sym_space(8), {0.0, 7});
  CHECK(d.measurements.delta == 0.0);
  for (std::size_t j = 0; j < 4; ++j) CHECK(d.measurements.currents[j].values() == d.exact_currents[j].values());
  CHECK(d.measurements.model_error > 0.0);
}

TEST_CASE("noisy data is deterministic per seed") {
  const Phantom p = find_phantom("one_blob");
  auto fine = sym_space(16);
  auto coarse = sym_space(8);
  const SyntheticData a = generate_data(p, fine, coarse, {1e-3, 5});
  const SyntheticData b = generate_data(p, fine, coarse, {1e-3, 5});
  const SyntheticData c = generate_data(p, fine, coarse, {1e-3, 6});
  for (std::size_t j = 0; j < 4; ++j) CHECK(a.measurements.currents[j].values() == b.measurements.currents[j].values());
  CHECK(a.measurements.delta == b.measurements.delta);
  CHECK(a.measurements.currents[0].values() != c.measurements.currents[0].values());
  CHECK(c.measurements.delta / a.measurements.delta == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("relative noise level tracks epsilon") {
  const SyntheticData d = generate_data(find_phantom("one_blob"), sym_space(32), sym_space(16), {1e-2, 1});
  const double ratio = d.measurements.delta / total_norm(d.exact_currents);
  CHECK(ratio > 0.01 / 3.0);
  CHECK(ratio < 0.03);
}

TEST_CASE("data generation rejects meshes that are too close") {
  const Phantom p = find_phantom("one_blob");
  CHECK_THROWS_AS(generate_data(p, sym_space(12), sym_space(8), {}), std::invalid_argument);
  CHECK_THROWS_AS(generate_data(p, DgSpace::create(Mesh({0.0, 1.0, 0.0, 1.0}, 16, 16)), sym_space(8), {}),
                  std::invalid_argument);
}

TEST_CASE("finer data meshes agree more closely") {
  const Phantom p = find_phantom("one_blob");
  auto coarse = sym_space(8);
  const auto g16 = generate_data(p, sym_space(16), coarse, {}).exact_currents;
  const auto g32 = generate_data(p, sym_space(32), coarse, {}).exact_currents;
  const auto g64 = generate_data(p, sym_space(64), coarse, {}).exact_currents;
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    d1 += norm_boundary(g16[j] - g32[j]);
    d2 += norm_boundary(g32[j] - g64[j]);
  }
  CHECK(d2 < 0.5 * d1);
}

TEST_CASE("measurement CSV layout") {
  auto space = sym_space(2);
  const BoundaryTrace f = measurement_suite(space)[0];
  std::ostringstream os;
  write_measurement_csv(os, space, f, f, f);
  const std::string s = os.str();
  CHECK(s.rfind("edge,qp,x,y,f,g_true,g_noisy\n", 0) == 0);
  int lines = 0;
  for (char ch : s) lines += ch == '\n';
  CHECK(lines == 1 + 8 * kEdgePoints);
}

TEST_CASE("quadratic manufactured case is exact at every mesh") {
  const EocReport rep = run_eoc(find_case("quadratic"), {2, 4, 8});
  for (const EocRow& r : rep.rows) {
    CHECK(r.err_u < 1e-10);
    CHECK(r.err_flux < 1e-9);
  }
  std::ostringstream os;
  write_eoc_csv(os, rep);
  CHECK(os.str().rfind("mesh,n_cells,err_u,order_u,err_flux,order_flux\n2x2,4,", 0) == 0);
}

TEST_CASE("smooth case orders on coarse meshes") {
  const EocReport rep = run_eoc(find_case("smooth"), {8, 16, 32});
  CHECK(*rep.rows[2].order_u == doctest::Approx(3.0).epsilon(0.07));
  CHECK(*rep.rows[2].order_flux > 2.0);
  CHECK(!rep.rows[0].order_u.has_value());
}

TEST_CASE("reconstruction metrics") {
  auto space = sym_space(16);
  const Phantom p = find_phantom("one_blob");
  const DgFunction sigma = project(space, phantom_sigma(p));
  CHECK(blob_height(sigma) == doctest::Approx(2.0).epsilon(0.05));
  const Vec2 c = blob_center(sigma, phantom_background(p));
  CHECK(std::abs(c.x()) < 1e-10);
  CHECK(c.y() == doctest::Approx(0.55).epsilon(0.05));

  const Phantom two = find_phantom("two_blobs");
  const auto maxima = local_maxima(project(sym_space(32), phantom_sigma(two)), phantom_background(two), 0.3);
  REQUIRE(maxima.size() == 2);
  for (const auto& m : maxima) CHECK(m.value > 0.9);

  const DgFunction disc = project(space, phantom_background(find_phantom("discontinuous")));
  CHECK(region_mean(disc, [](double, double y) { return y < 0.0; }) == doctest::Approx(1.5));
  CHECK(region_mean(disc, [](double, double y) { return y > 0.0; }) == doctest::Approx(1.0));
}
