#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phdeval/mask.hpp"
#include "phdeval/metrics.hpp"

namespace phdeval {

enum class Choice { PredA = 0, PredB = 1, DifficultToChoose = 2 };

/// "A", "B" or "difficult".
std::string to_wire(Choice c);
/// Throws std::invalid_argument.
Choice choice_from_wire(std::string_view s);

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/// ISO-8601 UTC with millisecond precision, e.g. 2024-03-01T12:00:00.000Z.
std::string format_timestamp(Timestamp ts);
/// Accepts YYYY-MM-DDTHH:MM:SS[.fff]Z. Throws std::invalid_argument.
Timestamp parse_timestamp(std::string_view s);

struct VoteRecord {
  std::string group_id;
  std::string subject_id;
  Choice choice = Choice::DifficultToChoose;
  Timestamp ts{};

  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

/// One JSON object without trailing newline.
std::string vote_to_json_line(const VoteRecord& v);

/// Parses a JSON-lines vote log. Blank lines are skipped. Throws SchemaError
/// with the offending line number and DuplicateSubjectVote on a repeated
/// (group, subject) pair.
std::vector<VoteRecord> parse_vote_log(std::string_view text);
/// Throws FileNotFound in addition to the parse errors.
std::vector<VoteRecord> read_vote_log(const std::string& path);

struct GroupVerdict {
  std::string group_id;
  std::array<std::size_t, 3> tally{};  // indexed by Choice
  bool valid = false;
  std::optional<Choice> majority;

  std::size_t votes() const { return tally[0] + tally[1] + tally[2]; }
  friend bool operator==(const GroupVerdict&, const GroupVerdict&) = default;
};

inline constexpr std::size_t kDefaultValidityThreshold = 11;

/// A group is valid when one choice alone reaches the threshold. Throws
/// DuplicateSubjectVote, and std::invalid_argument for a vote of another group.
GroupVerdict tally_group(const std::string& group_id, std::span<const VoteRecord> votes,
                         std::size_t validity_threshold = kDefaultValidityThreshold);

/// Append-only vote log. Replays the existing file on open; every accepted
/// vote is flushed and synced before append() returns. Thread-safe.
class VoteStore {
 public:
  enum class AppendResult { Accepted, Duplicate };

  /// Creates the file when missing. Throws IoError or the parse errors of
  /// parse_vote_log.
  explicit VoteStore(std::string path);
  ~VoteStore();
  VoteStore(const VoteStore&) = delete;
  VoteStore& operator=(const VoteStore&) = delete;

  /// Throws IoError when the record cannot be made durable; the vote is then
  /// not considered recorded.
  AppendResult append(const VoteRecord& vote);

  bool has_vote(const std::string& group_id, const std::string& subject_id) const;
  std::vector<VoteRecord> snapshot() const;
  /// Tallies maintained incrementally as votes arrive.
  std::map<std::string, std::array<std::size_t, 3>> running_tallies() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mu_;
  int fd_ = -1;
  std::vector<VoteRecord> votes_;
  std::set<std::pair<std::string, std::string>> seen_;
  std::map<std::string, std::array<std::size_t, 3>> tallies_;
};

struct SidePair {
  double a = 0.0;
  double b = 0.0;
};

struct TripletGroup {
  std::string group_id;
  std::string gt_path;
  std::string pred_a_path;
  std::string pred_b_path;
  /// Optional precomputed scores keyed by metric name.
  std::map<std::string, SidePair> scores;
};

/// Parses the group manifest (JSON array of {group_id, gt, pred_a, pred_b,
/// scores?}); relative paths are resolved against base_dir. Throws SchemaError.
std::vector<TripletGroup> parse_manifest(std::string_view text, const std::string& base_dir);
std::vector<TripletGroup> read_manifest(const std::string& path);

/// Verdict per manifest group, in manifest order. Throws SchemaError for a
/// vote naming a group absent from the manifest.
std::vector<GroupVerdict> tally_all(const std::vector<TripletGroup>& groups, std::span<const VoteRecord> votes,
                                    std::size_t validity_threshold = kDefaultValidityThreshold);

enum class Preference { PredA, PredB, Tie };

/// Tie when |a - b| <= tie_epsilon, else the better score under the
/// metric's orientation. Throws NonFiniteScore.
Preference metric_preference(double score_a, double score_b, const MetricDescriptor& desc, double tie_epsilon = 0.0);

/// group_id -> metric name -> scores of pred_a and pred_b against the ground truth.
using ScoreTable = std::map<std::string, std::map<std::string, SidePair>>;

/// Exact ratio with its decimal and percentage renderings.
struct Ratio {
  std::size_t matched = 0;
  std::size_t valid = 0;

  std::optional<double> value() const;
  std::string rational() const;  // "39/113"
  std::string percent() const;   // "34.51%", "n/a" when valid == 0
};

struct ConsistencyEntry {
  std::string metric;
  Ratio ratio;
  std::vector<std::string> matched_groups;
};

/// Agreement of one metric with the human majority over the valid groups.
/// A DifficultToChoose majority is matched only by a metric tie. Throws
/// MissingScores naming the first valid group without scores for desc.
ConsistencyEntry consistency(const std::vector<TripletGroup>& groups, const std::vector<GroupVerdict>& verdicts,
                             const MetricDescriptor& desc, const ScoreTable& scores, double tie_epsilon = 0.0);

struct SweepPoint {
  double tolerance = 0.0;
  ConsistencyEntry entry;
};

/// PHD consistency at each tolerance. The score table must hold a PHD-t
/// entry for every tolerance.
std::vector<SweepPoint> sweep_tolerance(const std::vector<TripletGroup>& groups,
                                        const std::vector<GroupVerdict>& verdicts,
                                        const std::vector<ToleranceDistance>& tolerances, const ScoreTable& scores,
                                        double tie_epsilon = 0.0);

/// Parses "A..B:S" into A, A+S, ... up to B inclusive. Throws std::invalid_argument.
std::vector<ToleranceDistance> parse_sweep(std::string_view spec);

/// Fills in every (valid group, metric) score that the table lacks, using the
/// manifest's precomputed values first and the images otherwise. Groups are
/// scored in parallel; each image pair is evaluated once for all metrics.
void compute_scores(const std::vector<TripletGroup>& groups, const std::vector<GroupVerdict>& verdicts,
                    const std::vector<MetricDescriptor>& metrics, const BinarizationPolicy& policy,
                    ScoreTable& table);

struct ConsistencyConfig {
  std::size_t validity_threshold = kDefaultValidityThreshold;
  double tie_epsilon = 0.0;
  std::vector<MetricDescriptor> metrics;
  std::vector<ToleranceDistance> sweep;
  BinarizationPolicy policy;
};

struct ConsistencyReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<GroupVerdict> verdicts;
  std::vector<ConsistencyEntry> entries;
  std::vector<SweepPoint> sweep;

  std::size_t valid_groups() const;
  std::vector<std::string> invalid_groups() const;
};

/// Full analysis: tally, score, per-metric consistency and optional sweep.
/// Scores already present in cache are reused and new ones are added to it.
ConsistencyReport analyze(const std::vector<TripletGroup>& groups, std::span<const VoteRecord> votes,
                          const ConsistencyConfig& config, ScoreTable* cache = nullptr);

std::string report_to_json(const ConsistencyReport& report);
std::string report_to_csv(const ConsistencyReport& report);
std::string sweep_to_csv(const ConsistencyReport& report);

}  // namespace phdeval
