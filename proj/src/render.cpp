#include "cosma/render.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "cosma/error.hpp"
#include "cosma/simulator.hpp"

namespace cosma {

RenderFormat render_format_from_string(std::string_view text) {
  if (text == "svg") return RenderFormat::Svg;
  if (text == "ascii") return RenderFormat::Ascii;
  throw Error(ErrorCode::InvalidParams, "unknown render format '" + std::string(text) + "'");
}

namespace {

struct Stretch {
  int tensor;
  int from, to;  // inclusive timesteps
  Bytes addr;
};

struct Marker {
  int t;
  int tensor;
  Action action;
};

void collect(const DataflowGraph& g, const ExecutionPlan& plan, std::vector<Stretch>& stretches,
             std::vector<Marker>& markers) {
  std::map<int, Stretch> open;
  for (int t = 0; t < plan.timestep_count(); ++t) {
    std::map<int, const PlanEvent*> events;
    for (const PlanEvent& e : plan.events[t]) events[g.tensor_index(e.tensor)] = &e;
    for (auto it = open.begin(); it != open.end();) {
      auto ev = events.find(it->first);
      bool continues = ev != events.end() && ev->second->action == Action::Preserve;
      if (continues) {
        it->second.to = t;
        ++it;
      } else {
        stretches.push_back(it->second);
        it = open.erase(it);
      }
    }
    for (auto [a, e] : events) {
      if (e->action == Action::Spill || e->action == Action::Retrieve) markers.push_back({t, a, e->action});
      if (e->action == Action::Create || e->action == Action::Retrieve) open[a] = {a, t, t, *e->addr};
    }
  }
  for (auto& [a, s] : open) stretches.push_back(s);
  std::sort(stretches.begin(), stretches.end(), [](const Stretch& x, const Stretch& y) {
    return std::tie(x.from, x.addr, x.tensor) < std::tie(y.from, y.addr, y.tensor);
  });
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr int kStepPx = 48;
constexpr int kLeft = 40;
constexpr int kTop = 20;

std::string svg(const DataflowGraph& g, const ExecutionPlan& plan, const std::vector<Stretch>& stretches,
                const std::vector<Marker>& markers) {
  const Bytes budget = std::max<Bytes>(plan.budget, 1);
  const int unit = static_cast<int>(std::max<Bytes>(2, 320 / budget));
  const int width = kLeft + kStepPx * plan.timestep_count() + 20;
  const int height = kTop + static_cast<int>(budget) * unit + 40;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
     << "\">\n";
  os << "<rect class=\"scratchpad\" x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
     << kStepPx * plan.timestep_count() << "\" height=\"" << budget * unit
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t < plan.timestep_count(); ++t) {
    os << "<text class=\"step\" x=\"" << kLeft + kStepPx * t + kStepPx / 2 << "\" y=\"" << height - 20
       << "\" font-size=\"10\" text-anchor=\"middle\">"
       << escape(plan.schedule[t] ? *plan.schedule[t] : std::string("-")) << "</text>\n";
  }
  for (const Stretch& s : stretches) {
    const Tensor& tensor = g.tensor(s.tensor);
    int x = kLeft + kStepPx * s.from;
    int y = kTop + static_cast<int>(s.addr) * unit;
    int w = kStepPx * (s.to - s.from + 1);
    int h = static_cast<int>(tensor.size) * unit;
    unsigned hue = static_cast<unsigned>(s.tensor * 47 % 360);
    os << "<rect class=\"tensor\" data-tensor=\"" << escape(tensor.id) << "\" x=\"" << x << "\" y=\"" << y
       << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\"hsl(" << hue
       << ",60%,70%)\" stroke=\"#222\"/>\n";
    os << "<text x=\"" << x + 3 << "\" y=\"" << y + std::min(h, 12) << "\" font-size=\"10\">" << escape(tensor.id)
       << "</text>\n";
  }
  for (const Marker& m : markers) {
    int x = kLeft + kStepPx * m.t;
    const char* cls = m.action == Action::Spill ? "spill" : "retrieve";
    const char* color = m.action == Action::Spill ? "#c00" : "#06c";
    os << "<circle class=\"" << cls << "\" data-tensor=\"" << escape(g.tensor(m.tensor).id) << "\" cx=\"" << x + 4
       << "\" cy=\"" << kTop - 8 << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

char glyph(int tensor) {
  static const std::string glyphs = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  return glyphs[static_cast<std::size_t>(tensor) % glyphs.size()];
}

std::string ascii(const DataflowGraph& g, const ExecutionPlan& plan, const std::vector<Stretch>& stretches,
                  const std::vector<Marker>& markers, Bytes alignment) {
  const int T = plan.timestep_count();
  const Bytes rows = (plan.budget + alignment - 1) / alignment;
  std::vector<std::string> grid(static_cast<std::size_t>(rows), std::string(T, '.'));
  std::vector<int> shown;
  for (const Stretch& s : stretches) {
    for (Bytes r = s.addr / alignment; r < (s.addr + g.tensor(s.tensor).size + alignment - 1) / alignment; ++r)
      for (int t = s.from; t <= s.to; ++t) grid[r][t] = glyph(s.tensor);
    if (std::find(shown.begin(), shown.end(), s.tensor) == shown.end()) shown.push_back(s.tensor);
  }
  std::string marks(T, ' ');
  for (const Marker& m : markers) {
    char c = m.action == Action::Spill ? 'S' : 'R';
    marks[m.t] = (marks[m.t] == ' ' || marks[m.t] == c) ? c : '*';
  }
  std::ostringstream os;
  for (const std::string& row : grid) os << row << "\n";
  os << marks << "\n\n";
  std::sort(shown.begin(), shown.end());
  for (int a : shown) os << glyph(a) << " " << g.tensor(a).id << "\n";
  return os.str();
}

}  // namespace

std::string render_memory_map(const DataflowGraph& g, const ExecutionPlan& plan, RenderFormat format,
                              Bytes alignment) {
  validate(g, plan);
  if (alignment < 1) throw Error(ErrorCode::InvalidParams, "alignment must be positive");
  std::vector<Stretch> stretches;
  std::vector<Marker> markers;
  collect(g, plan, stretches, markers);
  return format == RenderFormat::Svg ? svg(g, plan, stretches, markers) : ascii(g, plan, stretches, markers, alignment);
}

}  // namespace cosma
