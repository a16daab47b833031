#pragma once

// JSON model bundle ("hierion/1") and the JSON forms of run outputs.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hierion/classify.hpp"
#include "hierion/model.hpp"
#include "hierion/rules.hpp"
#include "hierion/scenario.hpp"
#include "json.hpp"

namespace hierion::io {

using nlohmann::json;

inline constexpr std::string_view kSchema = "hierion/1";

// Scenario as stored in a bundle: diagrams and groups by id.
struct ScenarioSpec {
  std::string id;
  std::vector<std::string> diagrams;
  // Subsystem hierarchy; the bundle hierarchy is used when absent.
  std::optional<ParameterHierarchy> hierarchy;
  std::map<std::string, std::string> mapping;
  std::vector<scenario::ScheduleEntry> schedule;
  std::vector<std::string> after_effect;
  std::optional<Tick> horizon;

  bool operator==(const ScenarioSpec&) const = default;
};

struct ModelBundle {
  ParameterHierarchy hierarchy;
  std::map<std::string, classify::Classifier> classifiers;
  std::map<std::string, classify::ClassificationMatrix> matrices;
  std::map<std::string, CanonicalDiagram> canonical;
  std::map<std::string, scenario::ControlDiagram> control;
  std::map<std::string, scenario::CoupledGroup> groups;
  std::map<std::string, scenario::ElementaryRule> rules;
  std::map<std::string, scenario::GoalTree> goal_trees;
  std::map<std::string, scenario::PartialDiagram> partials;
  std::map<std::string, ScenarioSpec> scenarios;

  bool operator==(const ModelBundle&) const = default;
};

struct LoadOptions {
  // Unknown fields become warnings instead of ParseError.
  bool lenient = false;
};

struct LoadResult {
  ModelBundle bundle;
  std::vector<std::string> warnings;
};

// Throws ParseError (message starts with the JSON location), DanglingReference
// or ValidationFailed (report attached).
LoadResult load_bundle(std::string_view text, const LoadOptions& opts = {});
LoadResult load_bundle_json(const json& doc, const LoadOptions& opts = {});
// Throws IoError when the file cannot be read.
LoadResult load_bundle_file(const std::filesystem::path& path, const LoadOptions& opts = {});

json bundle_to_json(const ModelBundle& b);
std::string save_bundle(const ModelBundle& b);

// Parse a scenario document and check it against the bundle. Scenario-level
// validation problems are returned as a report rather than thrown.
ScenarioSpec parse_scenario_spec(const json& doc, const LoadOptions& opts = {});
void check_scenario_refs(const ModelBundle& b, const ScenarioSpec& spec);
scenario::Scenario resolve_scenario(const ModelBundle& b, const ScenarioSpec& spec);
scenario::Scenario resolve_scenario(const ModelBundle& b, const std::string& scenario_id);

scenario::PartialDiagram parse_partial(const json& doc, const LoadOptions& opts = {});
// {"states": {diagram: state}, "pool": x, "tick": t}
scenario::SystemState parse_system_state(const json& doc, const LoadOptions& opts = {});
json to_json(const scenario::SystemState& s);

json to_json(const ScenarioSpec& s);
json to_json(const scenario::PartialDiagram& p);
json to_json(const StateTrace& trace);
json to_json(const scenario::Event& e);
json to_json(const scenario::ScenarioMetrics& m);
json to_json(const MetricTrace& t);
json to_json(const scenario::SimulationResult& r);
json to_json(const scenario::ScenarioReport& r);
json to_json(const scenario::PartialCheck& c);
json to_json(const scenario::ForecastResult& f);
json to_json(const scenario::GoalReport& g);
json to_json(const Distribution& d);
json to_json(const ArcCounters& c);
json to_json(const classify::DivergenceReport& r);

}  // namespace hierion::io
