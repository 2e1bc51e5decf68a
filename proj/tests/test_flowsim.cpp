// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "alignahead/flowsim.hpp"

using namespace align;

namespace {

// tag helper mirroring the encoding: (student k, layer i) 0-based
int tag(int k, int i, int H) { return k * H + i; }

std::set<int> single(int k, int i, int H) { return {tag(k, i, H)}; }

}  // namespace

TEST_CASE("one alignahead step matches the first training stage pattern") {
  // two students, three layers: after one full iteration student 1 holds
  // (l2^2, l3^2, l1^2) and student 2 holds (l2^1, l3^1, l1^1)
  const int H = 3;
  PairingPlan plan = make_plan(StrategyKind::kAlignahead, 2, H);
  TagState s = step(TagState::initial(2, H), plan);
  CHECK(s.slot(0, 0) == single(1, 1, H));
  CHECK(s.slot(0, 1) == single(1, 2, H));
  CHECK(s.slot(0, 2) == single(1, 0, H));
  CHECK(s.slot(1, 0) == single(0, 1, H));
  CHECK(s.slot(1, 1) == single(0, 2, H));
  CHECK(s.slot(1, 2) == single(0, 0, H));
}

TEST_CASE("stage order inside a step: first student updates, peer unchanged") {
  const int H = 3;
  PairingPlan plan = make_plan(StrategyKind::kAlignahead, 2, H);
  TagState init = TagState::initial(2, H);
  auto stages = step_stages(init, plan, {0, 1});
  REQUIRE(stages.size() == 2);
  // after the S1 stage, S1 slots moved but S2 still holds its own tags
  CHECK(stages[0].slot(0, 0) == single(1, 1, H));
  CHECK(stages[0].slot(1, 0) == single(1, 0, H));
  CHECK(stages[0].slot(1, 1) == single(1, 1, H));
  // the S2 stage reads the snapshot, not S1's fresh values
  CHECK(stages[1].slot(1, 0) == single(0, 1, H));
  // and the combined result equals the one-shot step
  CHECK(stages[1] == step(init, plan));
}

TEST_CASE("one oc step swaps the students' tags layerwise") {
  const int H = 4;
  PairingPlan plan = make_plan(StrategyKind::kOc, 2, H);
  TagState s = step(TagState::initial(2, H), plan);
  for (int i = 0; i < H; ++i) {
    CHECK(s.slot(0, i) == single(1, i, H));
    CHECK(s.slot(1, i) == single(0, i, H));
  }
  // and a second step swaps back
  TagState s2 = step(s, plan);
  CHECK(s2 == TagState::initial(2, H));
}

TEST_CASE("the six-iteration two-student trajectory reproduces the reference table") {
  const int H = 3;
  PairingPlan plan = make_plan(StrategyKind::kAlignahead, 2, H);
  FlowTrajectory tr = simulate(plan, 2, H, 6, "alignahead");

  // expected tags per iteration, 1-based (layer, student), S1 rows then S2
  // rows; S1 values are read after the S1 stage, S2 after the S2 stage
  struct Expect {
    int k, i;                       // slot
    std::vector<std::pair<int, int>> seq;  // (layer, student) per iteration
  };
  const std::vector<Expect> expected{
      {0, 0, {{2, 2}, {3, 1}, {1, 2}, {2, 1}, {3, 2}, {1, 1}}},
      {0, 1, {{3, 2}, {1, 1}, {2, 2}, {3, 1}, {1, 2}, {2, 1}}},
      {0, 2, {{1, 2}, {2, 1}, {3, 2}, {1, 1}, {2, 2}, {3, 1}}},
      {1, 0, {{2, 1}, {3, 2}, {1, 1}, {2, 2}, {3, 1}, {1, 2}}},
      {1, 1, {{3, 1}, {1, 2}, {2, 1}, {3, 2}, {1, 1}, {2, 2}}},
      {1, 2, {{1, 1}, {2, 2}, {3, 1}, {1, 2}, {2, 1}, {3, 2}}},
  };
  for (const auto& e : expected)
    for (int t = 0; t < 6; ++t) {
      const TagState& st = tr.stages[std::size_t(t)][std::size_t(e.k)];
      const auto [layer1, student1] = e.seq[std::size_t(t)];
      INFO("slot S" << e.k + 1 << ".L" << e.i + 1 << " iteration " << t + 1);
      CHECK(st.slot(e.k, e.i) == single(student1 - 1, layer1 - 1, H));
    }

  // within each iteration, the first stage leaves student 2 untouched
  for (int t = 0; t < 6; ++t) {
    const TagState& before =
        t == 0 ? tr.initial : tr.stages[std::size_t(t - 1)].back();
    const TagState& after_s1 = tr.stages[std::size_t(t)][0];
    for (int i = 0; i < H; ++i)
      CHECK(after_s1.slot(1, i) == before.slot(1, i));
  }

  // returns to the initial state at iteration 6
  CHECK(tr.final_state() == tr.initial);
  CHECK(tr.stages[4].back() != tr.initial);
}

TEST_CASE("alignahead periods follow lcm(2, H) for two students") {
  // the slot-transfer permutation maps (k, i) to (peer, i+1 mod H); its order
  // is lcm(2, H). For odd H that is 2H and one orbit covers every slot; for
  // even H the orbit splits into two H-cycles, so each slot only ever sees
  // half the tags.
  for (int H = 1; H <= 8; ++H) {
    INFO("H = " << H);
    const int expect = std::lcm(2, H);
    PairingPlan plan = make_plan(StrategyKind::kAlignahead, 2, H);
    PeriodResult r = period(plan, 2, H);
    REQUIRE(r.kind == PeriodResult::Kind::kPeriod);
    CHECK(r.steps == expect);

    // per period, each slot visits lcm(2, H) distinct tags, each exactly once
    TagState s = TagState::initial(2, H);
    std::vector<std::set<int>> seen(std::size_t(2 * H));
    for (int t = 0; t < expect; ++t) {
      s = step(s, plan);
      for (std::size_t q = 0; q < s.slots.size(); ++q) {
        REQUIRE(s.slots[q].size() == 1);
        seen[q].insert(*s.slots[q].begin());
      }
    }
    for (const auto& v : seen) CHECK(v.size() == std::size_t(expect));

    // full cross-layer coverage is only achieved when H is odd
    auto cov = coverage_time(plan, 2, H);
    if (H % 2 == 1) {
      REQUIRE(cov.has_value());
      CHECK(*cov == 2 * H);
    } else {
      CHECK_FALSE(cov.has_value());
    }
  }
}

TEST_CASE("specific periods from explicit iteration: H=1 -> 2, H=3 -> 6, H=4 -> 4") {
  CHECK(period(make_plan(StrategyKind::kAlignahead, 2, 1), 2, 1).steps == 2);
  CHECK(period(make_plan(StrategyKind::kAlignahead, 2, 3), 2, 3).steps == 6);
  // two disjoint 4-cycles: (S1.L1 S2.L2 S1.L3 S2.L4) and its mirror
  CHECK(period(make_plan(StrategyKind::kAlignahead, 2, 4), 2, 4).steps == 4);
}

TEST_CASE("coverage time of the reference setup is six iterations") {
  PairingPlan plan = make_plan(StrategyKind::kAlignahead, 2, 3);
  auto t = coverage_time(plan, 2, 3);
  REQUIRE(t.has_value());
  CHECK(*t == 6);
}

TEST_CASE("oc never mixes layers: coverage never completes") {
  for (int H = 2; H <= 5; ++H) {
    PairingPlan plan = make_plan(StrategyKind::kOc, 2, H);
    CHECK_FALSE(coverage_time(plan, 2, H).has_value());

    // the formal invariant: slot (k,i) only ever holds layer-i tags
    TagState s = TagState::initial(2, H);
    for (int t = 0; t < 4 * 2 * H; ++t) {
      s = step(s, plan);
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < H; ++i)
          for (int tg : s.slot(k, i)) CHECK(tg % H == i);
    }
  }
}

TEST_CASE("three-student union dynamics matches a brute-force oracle") {
  const int M = 3, H = 2;
  PairingPlan plan = make_plan(StrategyKind::kAlignahead, M, H);

  // independent recomputation with plain maps over (student, layer) keys
  using Key = std::pair<int, int>;
  std::map<Key, std::set<int>> oracle;
  for (int k = 0; k < M; ++k)
    for (int i = 0; i < H; ++i) oracle[{k, i}] = {tag(k, i, H)};

  TagState s = TagState::initial(M, H);
  for (int t = 0; t < 10; ++t) {
    s = step(s, plan);
    std::map<Key, std::set<int>> next;
    for (int k = 0; k < M; ++k)
      for (int i = 0; i < H; ++i) {
        std::set<int> acc;
        for (int p = 0; p < M; ++p) {
          if (p == k) continue;
          const auto& src = oracle[{p, (i + 1) % H}];
          acc.insert(src.begin(), src.end());
        }
        next[{k, i}] = std::move(acc);
      }
    oracle = std::move(next);
    for (int k = 0; k < M; ++k)
      for (int i = 0; i < H; ++i) CHECK(s.slot(k, i) == oracle[{k, i}]);
  }
}

TEST_CASE("three students, three layers: coverage and absorbing times") {
  PairingPlan plan = make_plan(StrategyKind::kAlignahead, 3, 3);
  auto cov = coverage_time(plan, 3, 3);
  REQUIRE(cov.has_value());
  CHECK(*cov == 4);
  PeriodResult r = period(plan, 3, 3);
  CHECK(r.kind == PeriodResult::Kind::kCoverage);
  CHECK(r.steps == 4);
}

TEST_CASE("rendered tables: frozen snapshots") {
  SECTION("alignahead M=2 H=3, the reference six-iteration table") {
    FlowTrajectory tr =
        simulate(make_plan(StrategyKind::kAlignahead, 2, 3), 2, 3, 6,
                 "alignahead");
    const std::string expect =
        "slot   init  1:S1  1:S2  2:S1  2:S2  3:S1  3:S2  4:S1  4:S2  5:S1  "
        "5:S2  6:S1  6:S2\n"
        "-----  ----  ----  ----  ----  ----  ----  ----  ----  ----  ----  "
        "----  ----  ----\n"
        "S1.L1  l1^1  l2^2  l2^2  l3^1  l3^1  l1^2  l1^2  l2^1  l2^1  l3^2  "
        "l3^2  l1^1  l1^1\n"
        "S1.L2  l2^1  l3^2  l3^2  l1^1  l1^1  l2^2  l2^2  l3^1  l3^1  l1^2  "
        "l1^2  l2^1  l2^1\n"
        "S1.L3  l3^1  l1^2  l1^2  l2^1  l2^1  l3^2  l3^2  l1^1  l1^1  l2^2  "
        "l2^2  l3^1  l3^1\n"
        "S2.L1  l1^2  l1^2  l2^1  l2^1  l3^2  l3^2  l1^1  l1^1  l2^2  l2^2  "
        "l3^1  l3^1  l1^2\n"
        "S2.L2  l2^2  l2^2  l3^1  l3^1  l1^2  l1^2  l2^1  l2^1  l3^2  l3^2  "
        "l1^1  l1^1  l2^2\n"
        "S2.L3  l3^2  l3^2  l1^1  l1^1  l2^2  l2^2  l3^1  l3^1  l1^2  l1^2  "
        "l2^1  l2^1  l3^2\n";
    CHECK(render_table(tr) == expect);
  }

  SECTION("oc M=2 H=3: constant layerwise swap") {
    FlowTrajectory tr =
        simulate(make_plan(StrategyKind::kOc, 2, 3), 2, 3, 2, "oc");
    const std::string expect =
        "slot   init  1:S1  1:S2  2:S1  2:S2\n"
        "-----  ----  ----  ----  ----  ----\n"
        "S1.L1  l1^1  l1^2  l1^2  l1^1  l1^1\n"
        "S1.L2  l2^1  l2^2  l2^2  l2^1  l2^1\n"
        "S1.L3  l3^1  l3^2  l3^2  l3^1  l3^1\n"
        "S2.L1  l1^2  l1^2  l1^1  l1^1  l1^2\n"
        "S2.L2  l2^2  l2^2  l2^1  l2^1  l2^2\n"
        "S2.L3  l3^2  l3^2  l3^1  l3^1  l3^2\n";
    CHECK(render_table(tr) == expect);
  }

  SECTION("alignahead M=3 H=2: union sets appear after the first step") {
    FlowTrajectory tr = simulate(make_plan(StrategyKind::kAlignahead, 3, 2), 3,
                                 2, 2, "alignahead");
    const std::string text = render_table(tr);
    CHECK(text.find("S1.L1  l1^1  l2^2+l2^3") != std::string::npos);
    // later students in a stage still read the iteration-start snapshot
    CHECK(text.find("S3.L1  l1^3  l1^3       l1^3       l2^1+l2^2") !=
          std::string::npos);
    CHECK(text.find("l1^1+l1^2+l1^3") != std::string::npos);
  }
}

TEST_CASE("trajectory JSON matches the simulated states") {
  PairingPlan plan = make_plan(StrategyKind::kAlignahead, 2, 3);
  FlowTrajectory tr = simulate(plan, 2, 3, 6, "alignahead");
  nlohmann::json j = trajectory_to_json(tr);
  CHECK(j.at("students") == 2);
  CHECK(j.at("layers") == 3);
  CHECK(j.at("steps") == 6);
  CHECK(j.at("returned_to_initial") == true);
  CHECK(j.at("initial")[0][0][0] == "l1^1");
  CHECK(j.at("iterations").size() == 6);
  // iteration 1, stage 1 (student 1 updated): S1.L1 holds l2^2
  CHECK(j.at("iterations")[0].at("stages")[0].at("state")[0][0][0] == "l2^2");
  // iteration 1, stage 2: S2.L1 holds l2^1
  CHECK(j.at("iterations")[0].at("stages")[1].at("state")[1][0][0] == "l2^1");
}
