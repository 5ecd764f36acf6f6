#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "eitdg/experiments.hpp"

namespace eitdg {

enum class RunMode { kEoc, kReconstruct, kForward };

/// Fully resolved run description. Every field has a default; see configs/ for examples.
struct RunConfig {
  RunMode mode = RunMode::kReconstruct;
  Box box{-1.0, 1.0, -1.0, 1.0};
  int n = 32;
  int fine_factor = 2;
  std::string phantom = "one_blob";
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  double alpha = 1e-8;
  double tau = 3.0;
  double rho = 0.9;
  int max_outer = 50;
  int max_inner = 50;
  std::string sigma0 = "background";  // "background" or a positive constant
  CgInnerProduct cg_inner_product = CgInnerProduct::kSobolev;
  std::string eoc_case = "smooth";
  std::vector<int> eoc_meshes{8, 16, 32, 64};
  std::string forward_boundary = "suite";  // "suite" or "zero"
  std::filesystem::path out_dir = "out";
  unsigned threads = 0;
};

/// Parse or validation failure; what() names the source, line or section/key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
void validate(const RunConfig& cfg);

/// Echo of every resolved setting, in the same grammar parse_config reads.
void write_manifest(std::ostream& os, const RunConfig& cfg);

const char* to_string(RunMode mode);

/// Executes the run and writes its artifacts under cfg.out_dir. Returns the
/// process exit status; failures print one diagnostic line to `err`.
int run(const RunConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace eitdg
