// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Symbolic simulator of how local-structure information moves between
// student layers under a pairing plan. Each (student, layer) slot carries a
// set of tags; tag "l{i}^{k}" marks structure information that originated at
// layer i of student k. One step replaces every slot with the union of its
// plan targets' tags, all read from the state at the step start — the same
// snapshot semantics the trainer uses.
//
// For two students every slot holds exactly one tag and the dynamics is a
// permutation; for three or more the union dynamics is absorbing. Tag sets
// model "has been influenced by", not signal magnitudes.

#pragma once

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignahead/distill.hpp"

namespace align {

/// Tags are small integers: tag(student k, layer i) = k * H + i, 0-based.
struct TagState {
  int num_students = 0;
  int num_layers = 0;
  std::vector<std::set<int>> slots;  // slot index = k * H + i

  static TagState initial(int num_students, int num_layers) {
    TagState s;
    s.num_students = num_students;
    s.num_layers = num_layers;
    s.slots.resize(std::size_t(num_students) * std::size_t(num_layers));
    for (int t = 0; t < int(s.slots.size()); ++t) s.slots[std::size_t(t)] = {t};
    return s;
  }

  std::set<int>& slot(int student, int layer) {
    return slots[std::size_t(student * num_layers + layer)];
  }
  const std::set<int>& slot(int student, int layer) const {
    return slots[std::size_t(student * num_layers + layer)];
  }

  bool operator==(const TagState&) const = default;
};

inline std::string tag_name(int tag, int num_layers) {
  const int student = tag / num_layers, layer = tag % num_layers;
  return "l" + std::to_string(layer + 1) + "^" + std::to_string(student + 1);
}

/// One full iteration: every slot becomes the union of its plan targets'
/// tags, all taken from the state at the iteration start.
inline TagState step(const TagState& state, const PairingPlan& plan) {
  TagState next = state;
  for (int k = 0; k < state.num_students; ++k)
    for (int i = 0; i < state.num_layers; ++i) {
      std::set<int> acc;
      for (const auto& [p, j] : plan.targets_of(k, i))
        acc.insert(state.slot(p, j).begin(), state.slot(p, j).end());
      next.slot(k, i) = std::move(acc);
    }
  return next;
}

/// The intermediate states within one iteration: entry m is the state after
/// students order[0..m] have been updated, each against the iteration-start
/// snapshot. The final entry equals step(state, plan) for any order.
inline std::vector<TagState> step_stages(const TagState& state,
                                         const PairingPlan& plan,
                                         const std::vector<int>& order) {
  const TagState snapshot = state;
  std::vector<TagState> stages;
  TagState current = state;
  for (int k : order) {
    for (int i = 0; i < state.num_layers; ++i) {
      std::set<int> acc;
      for (const auto& [p, j] : plan.targets_of(k, i))
        acc.insert(snapshot.slot(p, j).begin(), snapshot.slot(p, j).end());
      current.slot(k, i) = std::move(acc);
    }
    stages.push_back(current);
  }
  return stages;
}

struct PeriodResult {
  enum class Kind { kPeriod, kCoverage, kUnbounded } kind = Kind::kUnbounded;
  int steps = 0;
  int bound = 0;
};

/// For M = 2 (singleton dynamics): the smallest t with state(t) = state(0).
/// This is lcm(2, H) for the alignahead plan — the slot-transfer permutation
/// (k, i) -> (peer, i+1 mod H) is a single 2H-cycle only when H is odd; for
/// even H it splits into two H-cycles.
/// For M >= 3 the dynamics is not periodic, so this reports the first time
/// every slot has been influenced by every tag (first full coverage).
inline PeriodResult period(const PairingPlan& plan, int num_students,
                           int num_layers, int bound = -1) {
  if (num_students < 2)
    throw std::invalid_argument("period: need at least 2 students");
  if (bound <= 0) bound = 4 * num_students * num_layers;
  PeriodResult res;
  res.bound = bound;
  const TagState init = TagState::initial(num_students, num_layers);
  const std::size_t universe =
      std::size_t(num_students) * std::size_t(num_layers);
  TagState s = init;
  std::vector<std::set<int>> visited(s.slots.size());
  for (int t = 1; t <= bound; ++t) {
    s = step(s, plan);
    if (num_students == 2) {
      if (s == init) {
        res.kind = PeriodResult::Kind::kPeriod;
        res.steps = t;
        return res;
      }
    } else {
      bool full = true;
      for (std::size_t q = 0; q < s.slots.size(); ++q) {
        visited[q].insert(s.slots[q].begin(), s.slots[q].end());
        full = full && visited[q].size() == universe;
      }
      if (full) {
        res.kind = PeriodResult::Kind::kCoverage;
        res.steps = t;
        return res;
      }
    }
  }
  return res;  // kUnbounded
}

/// Number of steps until every slot has held every tag at least once,
/// counting the tags acquired after each step (the initial assignment is the
/// slot's own tag and does not count as acquired). nullopt if the bound is
/// hit — e.g. the OC plan, whose slots never see other layers.
inline std::optional<int> coverage_time(const PairingPlan& plan,
                                        int num_students, int num_layers,
                                        int bound = -1) {
  if (bound <= 0) bound = 4 * num_students * num_layers;
  const std::size_t universe =
      std::size_t(num_students) * std::size_t(num_layers);
  TagState s = TagState::initial(num_students, num_layers);
  std::vector<std::set<int>> visited(s.slots.size());
  for (int t = 1; t <= bound; ++t) {
    s = step(s, plan);
    bool all_full = true;
    for (std::size_t q = 0; q < s.slots.size(); ++q) {
      visited[q].insert(s.slots[q].begin(), s.slots[q].end());
      all_full = all_full && visited[q].size() == universe;
    }
    if (all_full) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// trajectories and rendering

struct FlowTrajectory {
  int num_students = 0;
  int num_layers = 0;
  std::string plan_name;
  TagState initial;
  // stages[t][m]: state after the (m+1)-th student update of iteration t+1
  std::vector<std::vector<TagState>> stages;

  const TagState& final_state() const {
    return stages.empty() ? initial : stages.back().back();
  }
};

inline FlowTrajectory simulate(const PairingPlan& plan, int num_students,
                               int num_layers, int steps,
                               const std::string& plan_name) {
  FlowTrajectory tr;
  tr.num_students = num_students;
  tr.num_layers = num_layers;
  tr.plan_name = plan_name;
  tr.initial = TagState::initial(num_students, num_layers);
  std::vector<int> order(std::size_t(num_students), 0);
  for (int k = 0; k < num_students; ++k) order[std::size_t(k)] = k;
  TagState s = tr.initial;
  for (int t = 0; t < steps; ++t) {
    tr.stages.push_back(step_stages(s, plan, order));
    s = tr.stages.back().back();
  }
  return tr;
}

namespace detail {

inline std::string render_tags(const std::set<int>& tags, int num_layers) {
  std::string out;
  for (int t : tags) {
    if (!out.empty()) out += "+";
    out += tag_name(t, num_layers);
  }
  return out.empty() ? "-" : out;
}

}  // namespace detail

/// Plain-text table, slots as rows, one column for the initial state and one
/// per (iteration, student stage).
inline std::string render_table(const FlowTrajectory& tr) {
  const int M = tr.num_students, H = tr.num_layers;
  std::vector<std::string> headers{"slot", "init"};
  for (std::size_t t = 0; t < tr.stages.size(); ++t)
    for (int m = 0; m < M; ++m)
      headers.push_back(std::to_string(t + 1) + ":S" + std::to_string(m + 1));

  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < M; ++k)
    for (int i = 0; i < H; ++i) {
      std::vector<std::string> row;
      row.push_back("S" + std::to_string(k + 1) + ".L" + std::to_string(i + 1));
      row.push_back(detail::render_tags(tr.initial.slot(k, i), H));
      for (const auto& stages : tr.stages)
        for (const TagState& st : stages)
          row.push_back(detail::render_tags(st.slot(k, i), H));
      rows.push_back(std::move(row));
    }

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream os;
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << (c == 0 ? "" : "  ");
      os << row[c] << std::string(widths[c] - row[c].size(), ' ');
    }
    os << "\n";
  };
  emit_row(headers);
  {
    std::vector<std::string> rule;
    for (auto w : widths) rule.push_back(std::string(w, '-'));
    emit_row(rule);
  }
  for (const auto& row : rows) emit_row(row);
  return os.str();
}

inline nlohmann::json state_to_json(const TagState& s) {
  auto students = nlohmann::json::array();
  for (int k = 0; k < s.num_students; ++k) {
    auto layers = nlohmann::json::array();
    for (int i = 0; i < s.num_layers; ++i) {
      auto tags = nlohmann::json::array();
      for (int t : s.slot(k, i)) tags.push_back(tag_name(t, s.num_layers));
      layers.push_back(std::move(tags));
    }
    students.push_back(std::move(layers));
  }
  return students;
}

inline nlohmann::json trajectory_to_json(const FlowTrajectory& tr) {
  nlohmann::json j;
  j["students"] = tr.num_students;
  j["layers"] = tr.num_layers;
  j["plan"] = tr.plan_name;
  j["steps"] = tr.stages.size();
  j["initial"] = state_to_json(tr.initial);
  auto iters = nlohmann::json::array();
  for (std::size_t t = 0; t < tr.stages.size(); ++t) {
    nlohmann::json it;
    it["iteration"] = t + 1;
    auto stages = nlohmann::json::array();
    for (int m = 0; m < tr.num_students; ++m) {
      nlohmann::json st;
      st["student"] = m + 1;
      st["state"] = state_to_json(tr.stages[t][std::size_t(m)]);
      stages.push_back(std::move(st));
    }
    it["stages"] = std::move(stages);
    iters.push_back(std::move(it));
  }
  j["iterations"] = std::move(iters);
  j["returned_to_initial"] = tr.final_state() == tr.initial;
  return j;
}

}  // namespace align
