#include "cosma/plan.hpp"

#include <fstream>
#include <sstream>

#include "cosma/error.hpp"
#include "json.hpp"

namespace cosma {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Action action) {
  switch (action) {
    case Action::Create: return "create";
    case Action::Preserve: return "preserve";
    case Action::Spill: return "spill";
    case Action::Retrieve: return "retrieve";
    case Action::Drop: return "drop";
  }
  return "drop";
}

Action action_from_string(std::string_view text) {
  if (text == "create") return Action::Create;
  if (text == "preserve") return Action::Preserve;
  if (text == "spill") return Action::Spill;
  if (text == "retrieve") return Action::Retrieve;
  if (text == "drop") return Action::Drop;
  throw Error(ErrorCode::ParseError, "unknown plan action '" + std::string(text) + "'");
}

std::string plan_to_json(const ExecutionPlan& plan) {
  // Hand-formatted so that one timestep's events stay on one line.
  std::ostringstream os;
  os << "{\n  \"budget\": " << plan.budget << ",\n  \"schedule\": [";
  for (std::size_t t = 0; t < plan.schedule.size(); ++t) {
    os << (t ? ", " : "");
    if (plan.schedule[t])
      os << ordered_json(*plan.schedule[t]).dump();
    else
      os << "null";
  }
  os << "],\n  \"events\": [";
  for (std::size_t t = 0; t < plan.events.size(); ++t) {
    os << (t ? "," : "") << "\n    [";
    for (std::size_t i = 0; i < plan.events[t].size(); ++i) {
      const PlanEvent& e = plan.events[t][i];
      ordered_json j;
      j["tensor"] = e.tensor;
      j["action"] = std::string(to_string(e.action));
      if (e.addr) j["addr"] = *e.addr;
      os << (i ? ", " : "") << j.dump();
    }
    os << "]";
  }
  os << (plan.events.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return os.str();
}

ExecutionPlan plan_from_json(const std::string& text) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ParseError, msg); };
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  }
  if (!j.is_object()) fail("plan must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "budget" && it.key() != "schedule" && it.key() != "events")
      fail("unknown plan field '" + it.key() + "'");
  if (!j.contains("budget") || !j["budget"].is_number_integer()) fail("plan without integer 'budget'");
  if (!j.contains("schedule") || !j["schedule"].is_array()) fail("plan without array 'schedule'");
  if (!j.contains("events") || !j["events"].is_array()) fail("plan without array 'events'");

  ExecutionPlan plan;
  plan.budget = j["budget"].get<Bytes>();
  for (const auto& s : j["schedule"]) {
    if (s.is_null())
      plan.schedule.emplace_back(std::nullopt);
    else if (s.is_string())
      plan.schedule.emplace_back(s.get<std::string>());
    else
      fail("schedule entries must be operator ids or null");
  }
  for (const auto& step : j["events"]) {
    if (!step.is_array()) fail("each timestep's events must be an array");
    std::vector<PlanEvent> events;
    for (const auto& je : step) {
      if (!je.is_object()) fail("event must be an object");
      for (auto it = je.begin(); it != je.end(); ++it)
        if (it.key() != "tensor" && it.key() != "action" && it.key() != "addr")
          fail("unknown event field '" + it.key() + "'");
      if (!je.contains("tensor") || !je["tensor"].is_string()) fail("event without string 'tensor'");
      if (!je.contains("action") || !je["action"].is_string()) fail("event without string 'action'");
      PlanEvent e;
      e.tensor = je["tensor"].get<std::string>();
      e.action = action_from_string(je["action"].get<std::string>());
      if (je.contains("addr")) {
        if (!je["addr"].is_number_integer()) fail("event 'addr' must be an integer");
        e.addr = je["addr"].get<Bytes>();
      }
      events.push_back(std::move(e));
    }
    plan.events.push_back(std::move(events));
  }
  if (plan.events.size() != plan.schedule.size())
    fail("plan has " + std::to_string(plan.schedule.size()) + " schedule entries but " +
         std::to_string(plan.events.size()) + " event lists");
  return plan;
}

ExecutionPlan load_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open plan file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return plan_from_json(buf.str());
}

std::vector<int> plan_operator_order(const DataflowGraph& g, const ExecutionPlan& plan) {
  std::vector<int> order;
  for (const auto& entry : plan.schedule)
    if (entry) order.push_back(g.op_index(*entry));
  return order;
}

}  // namespace cosma
