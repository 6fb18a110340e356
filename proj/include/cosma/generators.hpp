#pragma once

// Seeded graph generators. Identical specs give byte-identical graph JSON.
//
//   chain        length (tensors, 1..64), sizes or [min_size, max_size]
//   diamond      sizes (4 values: s, b1, b2, j outputs), default 6,2,2,1
//   resnet_like  blocks (1..16); odd blocks skip over three convs, even over two
//   nas_like     branches (>= 4), cells (1..8); every branch reads both
//                previous cell outputs, a concat closes the cell
//   random       ops (including graph-input sources, 2..40), [min_size, max_size]

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cosma/graph.hpp"

namespace cosma {

enum class Family { Chain, Diamond, ResnetLike, NasLike, Random };

std::string_view to_string(Family family);
Family family_from_string(std::string_view text);

struct GeneratorSpec {
  Family family = Family::Chain;
  int length = 3;    // chain
  int blocks = 3;    // resnet_like
  int branches = 4;  // nas_like
  int cells = 1;     // nas_like
  int ops = 5;       // random
  Bytes min_size = 1;
  Bytes max_size = 8;
  std::vector<Bytes> sizes;  // explicit sizes (chain, diamond)
  std::uint64_t seed = 0;
};

/// Throws InvalidParams.
DataflowGraph generate(const GeneratorSpec& spec);

/// Largest set of mutually unordered operators (used to check branchiness).
int max_antichain(const DataflowGraph& g);

}  // namespace cosma
