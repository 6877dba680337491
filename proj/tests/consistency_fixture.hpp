#pragma once

#include <array>
#include <string>
#include <vector>

#include "phdeval/consistency.hpp"

namespace phdeval::testing {

/// Five groups voted on by twenty subjects:
///   g1 14/4/2   valid, majority A
///   g2 10/10/0  invalid (no choice reaches 11)
///   g3 3/5/12   valid, majority difficult
///   g4 2/16/2   valid, majority B
///   g5 11/6/3   valid, majority A
/// Precomputed scores make F1 agree on g3 (tie), g4, g5 -> 3/4 and PHD-3
/// agree on g1, g5 -> 2/4.
struct ScriptedStudy {
  std::vector<TripletGroup> groups;
  std::vector<VoteRecord> votes;
};

inline ScriptedStudy scripted_study() {
  ScriptedStudy s;
  struct Row {
    const char* id;
    std::array<int, 3> tally;
    SidePair f1;
    SidePair phd3;
  };
  const Row rows[] = {
      {"g1", {14, 4, 2}, {0.80, 0.90}, {1.0, 2.0}},
      {"g2", {10, 10, 0}, {0.50, 0.60}, {1.0, 1.0}},
      {"g3", {3, 5, 12}, {0.70, 0.70}, {1.5, 0.5}},
      {"g4", {2, 16, 2}, {0.60, 0.90}, {0.4, 3.0}},
      {"g5", {11, 6, 3}, {0.95, 0.85}, {0.2, 0.9}},
  };
  const Timestamp base = parse_timestamp("2024-05-01T10:00:00.000Z");
  int tick = 0;
  for (const Row& r : rows) {
    TripletGroup g;
    g.group_id = r.id;
    g.gt_path = std::string("/data/") + r.id + "/gt.png";
    g.pred_a_path = std::string("/data/") + r.id + "/a.png";
    g.pred_b_path = std::string("/data/") + r.id + "/b.png";
    g.scores["F1"] = r.f1;
    g.scores["PHD-3"] = r.phd3;
    s.groups.push_back(g);

    int subject = 0;
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < r.tally[static_cast<std::size_t>(c)]; ++k) {
        VoteRecord v;
        v.group_id = r.id;
        v.subject_id = "s" + std::to_string(++subject);
        v.choice = static_cast<Choice>(c);
        v.ts = base + std::chrono::seconds(tick++);
        s.votes.push_back(v);
      }
    }
  }
  return s;
}

inline std::string votes_to_jsonl(const std::vector<VoteRecord>& votes) {
  std::string out;
  for (const auto& v : votes) out += vote_to_json_line(v) + "\n";
  return out;
}

}  // namespace phdeval::testing
