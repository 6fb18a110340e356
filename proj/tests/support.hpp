#pragma once

#include <string>

#include "cosma/generators.hpp"
#include "cosma/graph.hpp"
#include "cosma/solver.hpp"

namespace support {

inline std::string fixture_path(const std::string& name) {
  return std::string(COSMA_SOURCE_DIR) + "/fixtures/" + name + ".json";
}

inline cosma::DataflowGraph fixture(const std::string& name) { return cosma::load_graph_file(fixture_path(name)); }

/// The oracle-sized random suite: 3..6 operators including virtual sources.
inline cosma::DataflowGraph random_case(std::uint64_t seed) {
  cosma::GeneratorSpec spec;
  spec.family = cosma::Family::Random;
  spec.seed = seed;
  spec.ops = 3 + static_cast<int>(seed % 4);
  return cosma::generate(spec);
}

/// Internal backend with room for the bundled fixtures (up to 11 operators).
inline cosma::SolverConfig internal_config() {
  cosma::SolverConfig cfg;
  cfg.backend = cosma::Backend::Internal;
  cfg.internal_caps.max_ops = 16;
  return cfg;
}

inline cosma::SolverConfig environment_config() {
  cosma::SolverConfig cfg = cosma::SolverConfig::from_environment();
  cfg.internal_caps.max_ops = 16;
  return cfg;
}

inline const char* const kFixtures[] = {"chain", "diamond", "fig1", "resnet_like3", "nas_small", "random_s7",
                                        "belady_gap"};

}  // namespace support
