#pragma once

#include <string>
#include <string_view>

#include "cosma/graph.hpp"
#include "cosma/plan.hpp"

namespace cosma {

enum class RenderFormat { Svg, Ascii };

RenderFormat render_format_from_string(std::string_view text);

/// Memory map: x = timestep, y = address. One rectangle per stretch of
/// timesteps a tensor spends at one address; spills and retrieves are marked.
/// Validates the plan first (throws ValidationError). ASCII uses one row per
/// `alignment` bytes and one column per timestep.
std::string render_memory_map(const DataflowGraph& g, const ExecutionPlan& plan, RenderFormat format,
                              Bytes alignment = 1);

}  // namespace cosma
