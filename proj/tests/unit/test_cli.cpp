#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "eitdg/cli.hpp"

using namespace eitdg;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("eitdg_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty config yields defaults") {
  const RunConfig cfg = parse("");
  CHECK(cfg.mode == RunMode::kReconstruct);
  CHECK(cfg.n == 32);
  CHECK(cfg.alpha == 1e-8);
  CHECK(cfg.sigma0 == "background");
}

TEST_CASE("sections and keys are parsed") {
  const RunConfig cfg = parse(
      "[run]\nmode = eoc\nthreads = 2\n[mesh]\nn = 8\nxmin = 0\n[noise]\nepsilon = 0.001\nseed = 99\n"
      "[inverse]\nalpha = 0\ncg_inner_product = l2\nsigma0 = 1.5\n[eoc]\ncase = interface\nmeshes = 4, 8\n");
  CHECK(cfg.mode == RunMode::kEoc);
  CHECK(cfg.threads == 2);
  CHECK(cfg.n == 8);
  CHECK(cfg.box.xmin == 0.0);
  CHECK(cfg.epsilon == 0.001);
  CHECK(cfg.seed == 99);
  CHECK(cfg.alpha == 0.0);
  CHECK(cfg.cg_inner_product == CgInnerProduct::kL2);
  CHECK(cfg.sigma0 == "1.5");
  CHECK(cfg.eoc_case == "interface");
  CHECK(cfg.eoc_meshes == std::vector<int>{4, 8});
}

TEST_CASE("malformed configs are rejected with a location") {
  CHECK(error_of("[mesh]\nn = eight\n").find("[mesh] n") != std::string::npos);
  CHECK(error_of("[mesh]\nsize = 3\n").find("unknown key") != std::string::npos);
  CHECK(error_of("[solver]\nx = 1\n").find("unknown section") != std::string::npos);
  CHECK(error_of("n = 4\n").find("outside any section") != std::string::npos);
  CHECK(error_of("[mesh\nn = 4\n").find("test.ini:1") != std::string::npos);
  CHECK(error_of("[run]\nmode = invert\n").find("unknown mode") != std::string::npos);
  CHECK(error_of("[inverse]\nrho = 0.5\n").find("[inverse]") != std::string::npos);
  CHECK(error_of("[phantom]\nname = cat\n").find("[phantom]") != std::string::npos);
  CHECK(error_of("[inverse]\nsigma0 = -1\n").find("sigma0") != std::string::npos);
  CHECK(error_of("[forward]\nboundary = random\n").find("[forward]") != std::string::npos);
}

TEST_CASE("manifest round-trips through the parser") {
  RunConfig cfg = parse("[run]\nmode = forward\nout = some/dir\n[mesh]\nxmin = -0.25\nn = 12\n[noise]\nepsilon = 1e-3\n");
  cfg.alpha = 3.3e-7;
  std::ostringstream os;
  write_manifest(os, cfg);
  const RunConfig back = parse(os.str());
  std::ostringstream again;
  write_manifest(again, back);
  CHECK(os.str() == again.str());
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.box.xmin == -0.25);
  CHECK(back.out_dir == fs::path("some/dir"));
}

TEST_CASE("forward mode with zero boundary data writes zeros") {
  RunConfig cfg = parse("[run]\nmode = forward\n[mesh]\nn = 4\n[forward]\nboundary = zero\n");
  cfg.out_dir = scratch_dir("forward");
  std::ostringstream log, err;
  REQUIRE(run(cfg, log, err) == 0);
  CHECK(err.str().empty());
  const std::string u = slurp(cfg.out_dir / "u_1.csv");
  const std::string flux = slurp(cfg.out_dir / "flux_1.csv");
  CHECK(u.rfind("x,y,u\n", 0) == 0);
  CHECK(flux.rfind("edge,qp,x,y,f,flux\n", 0) == 0);
  std::istringstream rows(flux);
  std::string line;
  std::getline(rows, line);
  int count = 0;
  while (std::getline(rows, line)) {
    CHECK(line.substr(line.rfind(',') + 1) == "0.000000000000e+00");
    ++count;
  }
  CHECK(count == 16 * 4);
  CHECK(fs::exists(cfg.out_dir / "manifest.ini"));
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("eoc mode writes one row per mesh") {
  RunConfig cfg = parse("[run]\nmode = eoc\n[eoc]\ncase = smooth\nmeshes = 4,8\n");
  cfg.out_dir = scratch_dir("eoc");
  std::ostringstream log, err;
  REQUIRE(run(cfg, log, err) == 0);
  std::istringstream csv(slurp(cfg.out_dir / "eoc.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 3);
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("invalid run configuration returns status 2") {
  RunConfig cfg;
  cfg.n = 0;
  cfg.out_dir = scratch_dir("invalid");
  std::ostringstream log, err;
  CHECK(run(cfg, log, err) == 2);
  CHECK(err.str().find("config error") != std::string::npos);
  CHECK(!fs::exists(cfg.out_dir));
}
