#include <fstream>
#include <sstream>

#include "cosma/error.hpp"
#include "cosma/generators.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cosma;

namespace {

std::string file_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("same spec, same bytes") {
  for (Family f : {Family::Chain, Family::Diamond, Family::ResnetLike, Family::NasLike, Family::Random}) {
    GeneratorSpec spec;
    spec.family = f;
    spec.seed = 11;
    CHECK(graph_to_json(generate(spec)) == graph_to_json(generate(spec)));
  }
  GeneratorSpec a, b;
  a.family = b.family = Family::Random;
  a.seed = 1;
  b.seed = 2;
  CHECK(graph_to_json(generate(a)) != graph_to_json(generate(b)));
}

TEST_CASE("bundled fixtures are reproduced by their generator settings") {
  auto make = [](GeneratorSpec spec) { return graph_to_json(generate(spec)); };
  GeneratorSpec chain;
  chain.family = Family::Chain;
  chain.sizes = {4, 8, 2};
  CHECK(make(chain) == file_text(support::fixture_path("chain")));

  GeneratorSpec diamond;
  diamond.family = Family::Diamond;
  CHECK(make(diamond) == file_text(support::fixture_path("diamond")));

  GeneratorSpec random;
  random.family = Family::Random;
  random.seed = 7;
  random.ops = 5;
  CHECK(make(random) == file_text(support::fixture_path("random_s7")));

  GeneratorSpec resnet;
  resnet.family = Family::ResnetLike;
  resnet.blocks = 3;
  resnet.seed = 10;
  resnet.max_size = 4;
  CHECK(make(resnet) == file_text(support::fixture_path("resnet_like3")));

  GeneratorSpec nas;
  nas.family = Family::NasLike;
  nas.seed = 3;
  nas.max_size = 4;
  CHECK(make(nas) == file_text(support::fixture_path("nas_small")));
}

TEST_CASE("random_s7 is frozen") {
  DataflowGraph g = support::fixture("random_s7");
  CHECK(g.op_count() == 5);
  for (const Tensor& t : g.tensors()) {
    CHECK(t.size >= 1);
    CHECK(t.size <= 8);
  }
}

TEST_CASE("shapes") {
  GeneratorSpec nas;
  nas.family = Family::NasLike;
  nas.branches = 4;
  nas.cells = 4;  // 20 user operators plus the input source
  DataflowGraph wide = generate(nas);
  CHECK(wide.op_count() == 21);
  CHECK(max_antichain(wide) >= 4);

  GeneratorSpec resnet;
  resnet.family = Family::ResnetLike;
  resnet.blocks = 3;
  DataflowGraph r = generate(resnet);
  CHECK(r.op_count() == 1 + 3 + 4 + 3);
  // every block output is read by the next block's first conv and its add
  CHECK(r.consumers(r.tensor_index("b0_y")).size() == 2);

  GeneratorSpec chain;
  chain.family = Family::Chain;
  chain.length = 5;
  CHECK(max_antichain(generate(chain)) == 1);

  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    GeneratorSpec spec;
    spec.family = Family::Random;
    spec.seed = seed;
    spec.ops = 3 + static_cast<int>(seed % 4);
    CHECK(generate(spec).op_count() == spec.ops);
  }
}

TEST_CASE("parameter checks") {
  GeneratorSpec bad;
  bad.family = Family::NasLike;
  bad.branches = 3;
  CHECK_THROWS_AS(generate(bad), Error);
  GeneratorSpec sizes;
  sizes.min_size = 5;
  sizes.max_size = 4;
  CHECK_THROWS_AS(generate(sizes), Error);
  GeneratorSpec diamond;
  diamond.family = Family::Diamond;
  diamond.sizes = {1, 2};
  CHECK_THROWS_AS(generate(diamond), Error);
  CHECK_THROWS_AS(family_from_string("tree"), Error);
}
