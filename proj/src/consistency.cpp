#include "phdeval/consistency.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "phdeval/errors.hpp"

namespace phdeval {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string to_wire(Choice c) {
  switch (c) {
    case Choice::PredA:
      return "A";
    case Choice::PredB:
      return "B";
    case Choice::DifficultToChoose:
      return "difficult";
  }
  return "difficult";
}

Choice choice_from_wire(std::string_view s) {
  if (s == "A") return Choice::PredA;
  if (s == "B") return Choice::PredB;
  if (s == "difficult") return Choice::DifficultToChoose;
  throw std::invalid_argument("choice must be \"A\", \"B\" or \"difficult\", got \"" + std::string(s) + "\"");
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto secs = floor<seconds>(ts);
  const auto ms = (ts - secs).count();
  const std::time_t t = system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

Timestamp parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  const std::string str(s);
  int Y, M, D, h, m, sec, consumed = 0;
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &Y, &M, &D, &h, &m, &sec, &consumed) != 6 ||
      consumed != 19) {
    throw std::invalid_argument("timestamp is not ISO-8601: \"" + str + "\"");
  }
  std::size_t pos = 19;
  int ms = 0;
  if (pos < str.size() && str[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < str.size() && std::isdigit(static_cast<unsigned char>(str[pos]))) {
      if (digits < 3) ms = ms * 10 + (str[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw std::invalid_argument("timestamp has an empty fraction: \"" + str + "\"");
    for (; digits < 3; ++digits) ms *= 10;
  }
  const std::string_view zone = std::string_view(str).substr(pos);
  if (zone != "Z" && zone != "+00:00") throw std::invalid_argument("timestamp must be UTC: \"" + str + "\"");
  const year_month_day ymd{year{Y}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
  if (!ymd.ok() || h > 23 || m > 59 || sec > 60) {
    throw std::invalid_argument("timestamp out of range: \"" + str + "\"");
  }
  return sys_days{ymd} + hours{h} + minutes{m} + seconds{sec} + milliseconds{ms};
}

std::string vote_to_json_line(const VoteRecord& v) {
  ordered_json j;
  j["group_id"] = v.group_id;
  j["subject_id"] = v.subject_id;
  j["choice"] = to_wire(v.choice);
  j["ts"] = format_timestamp(v.ts);
  return j.dump();
}

namespace {

std::string required_string(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw SchemaError(line, std::string("missing string field \"") + key + "\"");
  std::string s = it->get<std::string>();
  if (s.empty()) throw SchemaError(line, std::string("field \"") + key + "\" is empty");
  return s;
}

std::string slurp(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw FileNotFound("no such file: " + path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string duplicate_message(const VoteRecord& v) {
  return "duplicate vote by subject \"" + v.subject_id + "\" on group \"" + v.group_id + "\"";
}

}  // namespace

std::vector<VoteRecord> parse_vote_log(std::string_view text) {
  std::vector<VoteRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError(line_no, "vote must be a JSON object");
    VoteRecord v;
    v.group_id = required_string(j, "group_id", line_no);
    v.subject_id = required_string(j, "subject_id", line_no);
    try {
      v.choice = choice_from_wire(required_string(j, "choice", line_no));
      v.ts = parse_timestamp(required_string(j, "ts", line_no));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(line_no, e.what());
    }
    if (!seen.emplace(v.group_id, v.subject_id).second) {
      throw DuplicateSubjectVote("line " + std::to_string(line_no) + ": " + duplicate_message(v));
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<VoteRecord> read_vote_log(const std::string& path) { return parse_vote_log(slurp(path)); }

GroupVerdict tally_group(const std::string& group_id, std::span<const VoteRecord> votes,
                         std::size_t validity_threshold) {
  GroupVerdict v;
  v.group_id = group_id;
  std::set<std::string> subjects;
  for (const VoteRecord& r : votes) {
    if (r.group_id != group_id) {
      throw std::invalid_argument("vote for group \"" + r.group_id + "\" tallied under \"" + group_id + "\"");
    }
    if (!subjects.insert(r.subject_id).second) throw DuplicateSubjectVote(duplicate_message(r));
    ++v.tally[static_cast<std::size_t>(r.choice)];
  }
  const std::size_t top = *std::max_element(v.tally.begin(), v.tally.end());
  const auto leaders = std::count(v.tally.begin(), v.tally.end(), top);
  if (top >= validity_threshold && leaders == 1) {
    v.valid = true;
    v.majority = static_cast<Choice>(std::max_element(v.tally.begin(), v.tally.end()) - v.tally.begin());
  }
  return v;
}

// ---------------------------------------------------------------------------
// VoteStore

VoteStore::VoteStore(std::string path) : path_(std::move(path)) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(path_, ec)) {
    for (auto& v : read_vote_log(path_)) {
      seen_.emplace(v.group_id, v.subject_id);
      ++tallies_[v.group_id][static_cast<std::size_t>(v.choice)];
      votes_.push_back(std::move(v));
    }
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open vote log " + path_ + ": " + std::strerror(errno));
}

VoteStore::~VoteStore() {
  if (fd_ >= 0) ::close(fd_);
}

VoteStore::AppendResult VoteStore::append(const VoteRecord& vote) {
  const std::string line = vote_to_json_line(vote) + "\n";
  std::lock_guard lock(mu_);
  if (seen_.count({vote.group_id, vote.subject_id})) return AppendResult::Duplicate;

  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("vote log write failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) throw IoError("vote log sync failed: " + std::string(std::strerror(errno)));

  seen_.emplace(vote.group_id, vote.subject_id);
  ++tallies_[vote.group_id][static_cast<std::size_t>(vote.choice)];
  votes_.push_back(vote);
  return AppendResult::Accepted;
}

bool VoteStore::has_vote(const std::string& group_id, const std::string& subject_id) const {
  std::lock_guard lock(mu_);
  return seen_.count({group_id, subject_id}) != 0;
}

std::vector<VoteRecord> VoteStore::snapshot() const {
  std::lock_guard lock(mu_);
  return votes_;
}

std::map<std::string, std::array<std::size_t, 3>> VoteStore::running_tallies() const {
  std::lock_guard lock(mu_);
  return tallies_;
}

// ---------------------------------------------------------------------------
// Manifest

std::vector<TripletGroup> parse_manifest(std::string_view text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(0, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw SchemaError(0, "manifest must be a JSON array");

  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : std::filesystem::path(base_dir) / path).string();
  };

  std::vector<TripletGroup> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& e = doc[i];
    const std::string where = "manifest entry " + std::to_string(i);
    if (!e.is_object()) throw SchemaError(0, where + " is not an object");
    TripletGroup g;
    try {
      g.group_id = required_string(e, "group_id", 0);
      g.gt_path = resolve(required_string(e, "gt", 0));
      g.pred_a_path = resolve(required_string(e, "pred_a", 0));
      g.pred_b_path = resolve(required_string(e, "pred_b", 0));
    } catch (const SchemaError& err) {
      throw SchemaError(0, where + ": " + err.what());
    }
    if (g.gt_path == g.pred_a_path || g.gt_path == g.pred_b_path || g.pred_a_path == g.pred_b_path) {
      throw SchemaError(0, where + ": the three image paths must be distinct");
    }
    if (!ids.insert(g.group_id).second) throw SchemaError(0, where + ": duplicate group_id \"" + g.group_id + "\"");
    if (const auto it = e.find("scores"); it != e.end()) {
      if (!it->is_object()) throw SchemaError(0, where + ": \"scores\" must be an object");
      for (const auto& [metric, pair] : it->items()) {
        if (!pair.is_object() || !pair.contains("a") || !pair.contains("b") || !pair["a"].is_number() ||
            !pair["b"].is_number()) {
          throw SchemaError(0, where + ": scores for \"" + metric + "\" need numeric \"a\" and \"b\"");
        }
        g.scores[metric] = {pair["a"].get<double>(), pair["b"].get<double>()};
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<TripletGroup> read_manifest(const std::string& path) {
  return parse_manifest(slurp(path), std::filesystem::path(path).parent_path().string());
}

std::vector<GroupVerdict> tally_all(const std::vector<TripletGroup>& groups, std::span<const VoteRecord> votes,
                                    std::size_t validity_threshold) {
  std::map<std::string, std::vector<VoteRecord>> by_group;
  for (const auto& g : groups) by_group[g.group_id];
  for (const VoteRecord& v : votes) {
    const auto it = by_group.find(v.group_id);
    if (it == by_group.end()) throw SchemaError(0, "vote for unknown group \"" + v.group_id + "\"");
    it->second.push_back(v);
  }
  std::vector<GroupVerdict> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(tally_group(g.group_id, by_group[g.group_id], validity_threshold));
  return out;
}

// ---------------------------------------------------------------------------
// Metric agreement

Preference metric_preference(double score_a, double score_b, const MetricDescriptor& desc, double tie_epsilon) {
  if (!std::isfinite(score_a) || !std::isfinite(score_b)) {
    throw NonFiniteScore("non-finite " + desc.name + " score");
  }
  if (!(tie_epsilon >= 0.0)) throw std::invalid_argument("tie epsilon must be non-negative");
  if (std::fabs(score_a - score_b) <= tie_epsilon) return Preference::Tie;
  const bool a_higher = score_a > score_b;
  const bool a_better = desc.orientation == Orientation::HigherIsBetter ? a_higher : !a_higher;
  return a_better ? Preference::PredA : Preference::PredB;
}

std::optional<double> Ratio::value() const {
  if (valid == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(valid);
}

std::string Ratio::rational() const { return std::to_string(matched) + "/" + std::to_string(valid); }

std::string Ratio::percent() const {
  const auto v = value();
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

namespace {
bool matches(Preference p, Choice majority) {
  switch (majority) {
    case Choice::PredA:
      return p == Preference::PredA;
    case Choice::PredB:
      return p == Preference::PredB;
    case Choice::DifficultToChoose:
      return p == Preference::Tie;
  }
  return false;
}
}  // namespace

ConsistencyEntry consistency(const std::vector<TripletGroup>& groups, const std::vector<GroupVerdict>& verdicts,
                             const MetricDescriptor& desc, const ScoreTable& scores, double tie_epsilon) {
  std::map<std::string, const GroupVerdict*> verdict_of;
  for (const auto& v : verdicts) verdict_of[v.group_id] = &v;

  ConsistencyEntry entry;
  entry.metric = desc.name;
  for (const TripletGroup& group : groups) {
    const auto found = verdict_of.find(group.group_id);
    if (found == verdict_of.end() || !found->second->valid) continue;
    const GroupVerdict& v = *found->second;
    const auto g = scores.find(v.group_id);
    const SidePair* s = nullptr;
    if (g != scores.end()) {
      const auto m = g->second.find(desc.name);
      if (m != g->second.end()) s = &m->second;
    }
    if (!s) throw MissingScores("no " + desc.name + " scores for group \"" + v.group_id + "\"");
    ++entry.ratio.valid;
    if (matches(metric_preference(s->a, s->b, desc, tie_epsilon), *v.majority)) {
      ++entry.ratio.matched;
      entry.matched_groups.push_back(v.group_id);
    }
  }
  return entry;
}

std::vector<SweepPoint> sweep_tolerance(const std::vector<TripletGroup>& groups,
                                        const std::vector<GroupVerdict>& verdicts,
                                        const std::vector<ToleranceDistance>& tolerances, const ScoreTable& scores,
                                        double tie_epsilon) {
  std::vector<SweepPoint> out;
  out.reserve(tolerances.size());
  for (const ToleranceDistance& t : tolerances) {
    out.push_back({t.value(), consistency(groups, verdicts, make_phd(t.value()), scores, tie_epsilon)});
  }
  return out;
}

std::vector<ToleranceDistance> parse_sweep(std::string_view spec) {
  const std::string s(spec);
  const auto bad = [&] { return std::invalid_argument("sweep must look like A..B:S, got \"" + s + "\""); };
  const auto dots = spec.find("..");
  const auto colon = spec.find(':', dots == std::string_view::npos ? 0 : dots);
  if (dots == std::string_view::npos || colon == std::string_view::npos) throw bad();
  const auto number = [&](std::string_view part) {
    double v = 0;
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || end != part.data() + part.size()) throw bad();
    return v;
  };
  const double a = number(spec.substr(0, dots));
  const double b = number(spec.substr(dots + 2, colon - dots - 2));
  const double step = number(spec.substr(colon + 1));
  if (!(step > 0.0) || !(b >= a) || a < 0.0) {
    throw std::invalid_argument("sweep needs 0 <= A <= B and S > 0, got \"" + s + "\"");
  }
  std::vector<ToleranceDistance> out;
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.emplace_back(a + static_cast<double>(i) * step);
  return out;
}

void compute_scores(const std::vector<TripletGroup>& groups, const std::vector<GroupVerdict>& verdicts,
                    const std::vector<MetricDescriptor>& metrics, const BinarizationPolicy& policy,
                    ScoreTable& table) {
  std::map<std::string, const GroupVerdict*> verdict_of;
  for (const auto& v : verdicts) verdict_of[v.group_id] = &v;

  std::vector<const TripletGroup*> todo;
  for (const TripletGroup& g : groups) {
    const auto v = verdict_of.find(g.group_id);
    if (v == verdict_of.end() || !v->second->valid) continue;
    auto& row = table[g.group_id];
    bool missing = false;
    for (const auto& m : metrics) {
      if (row.count(m.name)) continue;
      if (const auto pre = g.scores.find(m.name); pre != g.scores.end()) {
        row[m.name] = pre->second;
      } else {
        missing = true;
      }
    }
    if (missing) todo.push_back(&g);
  }

  std::vector<std::map<std::string, SidePair>> computed(todo.size());
  std::vector<std::string> errors(todo.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(todo.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const TripletGroup& g = *todo[static_cast<std::size_t>(i)];
    try {
      const BinaryMask gt = load_mask(g.gt_path, policy);
      const MetricReport ra = evaluate_pair(load_mask(g.pred_a_path, policy), gt, metrics);
      const MetricReport rb = evaluate_pair(load_mask(g.pred_b_path, policy), gt, metrics);
      for (std::size_t k = 0; k < metrics.size(); ++k) {
        const auto& ea = ra.entries[k];
        const auto& eb = rb.entries[k];
        if (ea.ok() && eb.ok()) computed[static_cast<std::size_t>(i)][metrics[k].name] = {*ea.value, *eb.value};
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = "group \"" + g.group_id + "\": " + e.what();
    }
  }
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (!errors[i].empty()) throw MissingScores(errors[i]);
    auto& row = table[todo[i]->group_id];
    for (auto& [name, pair] : computed[i]) row.emplace(name, pair);
  }
}

std::size_t ConsistencyReport::valid_groups() const {
  return static_cast<std::size_t>(std::count_if(verdicts.begin(), verdicts.end(), [](auto& v) { return v.valid; }));
}

std::vector<std::string> ConsistencyReport::invalid_groups() const {
  std::vector<std::string> out;
  for (const auto& v : verdicts)
    if (!v.valid) out.push_back(v.group_id);
  return out;
}

ConsistencyReport analyze(const std::vector<TripletGroup>& groups, std::span<const VoteRecord> votes,
                          const ConsistencyConfig& config, ScoreTable* cache) {
  ConsistencyReport report;
  auto metric_names = [&] {
    std::string s;
    for (const auto& m : config.metrics) s += (s.empty() ? "" : ",") + m.name;
    return s;
  };
  char eps[32];
  std::snprintf(eps, sizeof eps, "%g", config.tie_epsilon);
  std::string sweep;
  for (const auto& t : config.sweep) sweep += (sweep.empty() ? "" : ",") + format_tolerance(t.value());
  report.config = {
      {"groups", std::to_string(groups.size())},
      {"votes", std::to_string(votes.size())},
      {"validity_threshold", std::to_string(config.validity_threshold)},
      {"tie_epsilon", eps},
      {"metrics", metric_names()},
      {"sweep", sweep},
      {"threshold", std::to_string(config.policy.threshold)},
      {"polarity", config.policy.polarity == Polarity::DarkIsForeground ? "dark" : "light"},
  };

  report.verdicts = tally_all(groups, votes, config.validity_threshold);

  std::vector<MetricDescriptor> needed = config.metrics;
  for (const auto& t : config.sweep) {
    MetricDescriptor d = make_phd(t.value());
    if (std::find(needed.begin(), needed.end(), d) == needed.end()) needed.push_back(d);
  }
  ScoreTable local;
  ScoreTable& table = cache ? *cache : local;
  if (!needed.empty()) compute_scores(groups, report.verdicts, needed, config.policy, table);

  for (const auto& m : config.metrics) {
    report.entries.push_back(consistency(groups, report.verdicts, m, table, config.tie_epsilon));
  }
  if (!config.sweep.empty()) {
    report.sweep = sweep_tolerance(groups, report.verdicts, config.sweep, table, config.tie_epsilon);
  }
  return report;
}

namespace {
ordered_json entry_json(const ConsistencyEntry& e) {
  ordered_json j;
  j["metric"] = e.metric;
  j["matched"] = e.ratio.matched;
  j["valid"] = e.ratio.valid;
  j["ratio"] = e.ratio.rational();
  if (const auto v = e.ratio.value()) {
    j["consistency"] = *v;
  } else {
    j["consistency"] = nullptr;
  }
  j["percent"] = e.ratio.percent();
  j["matched_groups"] = e.matched_groups;
  return j;
}
}  // namespace

std::string report_to_json(const ConsistencyReport& report) {
  ordered_json j;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : report.config) cfg[k] = v;
  j["config"] = cfg;
  j["valid_groups"] = report.valid_groups();
  j["invalid_groups"] = report.invalid_groups();
  ordered_json verdicts = ordered_json::array();
  for (const auto& v : report.verdicts) {
    ordered_json vj;
    vj["group_id"] = v.group_id;
    vj["tally"] = {{"A", v.tally[0]}, {"B", v.tally[1]}, {"difficult", v.tally[2]}};
    vj["valid"] = v.valid;
    if (v.majority) {
      vj["majority"] = to_wire(*v.majority);
    } else {
      vj["majority"] = nullptr;
    }
    verdicts.push_back(vj);
  }
  j["verdicts"] = verdicts;
  ordered_json metrics = ordered_json::array();
  for (const auto& e : report.entries) metrics.push_back(entry_json(e));
  j["metrics"] = metrics;
  if (!report.sweep.empty()) {
    ordered_json sweep = ordered_json::array();
    for (const auto& p : report.sweep) {
      ordered_json pj = entry_json(p.entry);
      pj["tolerance"] = p.tolerance;
      sweep.push_back(pj);
    }
    j["sweep"] = sweep;
  }
  return j.dump(2) + "\n";
}

namespace {
std::string decimal(const Ratio& r) {
  const auto v = r.value();
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string header(const ConsistencyReport& report) {
  std::string out;
  for (const auto& [k, v] : report.config) out += "# " + k + "=" + v + "\n";
  return out;
}
}  // namespace

std::string report_to_csv(const ConsistencyReport& report) {
  std::string out = header(report);
  out += "metric,matched,valid,ratio,consistency,percent\n";
  for (const auto& e : report.entries) {
    out += e.metric + "," + std::to_string(e.ratio.matched) + "," + std::to_string(e.ratio.valid) + "," +
           e.ratio.rational() + "," + decimal(e.ratio) + "," + e.ratio.percent() + "\n";
  }
  return out;
}

std::string sweep_to_csv(const ConsistencyReport& report) {
  std::string out = header(report);
  out += "tolerance,matched,valid,ratio,consistency,percent\n";
  for (const auto& p : report.sweep) {
    const auto& r = p.entry.ratio;
    out += format_tolerance(p.tolerance) + "," + std::to_string(r.matched) + "," + std::to_string(r.valid) + "," +
           r.rational() + "," + decimal(r) + "," + r.percent() + "\n";
  }
  return out;
}

}  // namespace phdeval
