#include "phdeval/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phdeval/errors.hpp"

namespace phdeval {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png";
}

std::map<std::string, std::string> list_pngs(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw FileNotFound("not a directory: " + dir);
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_png(entry.path())) out[entry.path().stem().string()] = entry.path().string();
  }
  if (out.empty()) throw FileNotFound("no PNG files in " + dir);
  return out;
}

std::vector<PairTask> pairs_from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FileNotFound("no such file: " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(is);
  } catch (const ordered_json::parse_error& e) {
    throw SchemaError(0, path + ": " + e.what());
  }
  if (!doc.is_array()) throw SchemaError(0, path + ": pair manifest must be a JSON array");
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
  std::vector<PairTask> out;
  for (const auto& e : doc) {
    for (const char* key : {"method", "image", "gt", "pred"}) {
      if (!e.is_object() || !e.contains(key) || !e[key].is_string()) {
        throw SchemaError(0, path + ": each pair needs string field \"" + key + "\"");
      }
    }
    out.push_back({e["method"].get<std::string>(), e["image"].get<std::string>(), resolve(e["gt"].get<std::string>()),
                   resolve(e["pred"].get<std::string>())});
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const char* arrow(const MetricDescriptor& d) {
  return d.orientation == Orientation::HigherIsBetter ? "↑" : "↓";
}

std::vector<std::pair<std::string, std::string>> config_of(const EvalJob& job) {
  std::string preds, metrics;
  for (const auto& p : job.preds) preds += (preds.empty() ? "" : ";") + p.name + "=" + p.dir;
  for (const auto& m : job.metrics) metrics += (metrics.empty() ? "" : ",") + m.name;
  std::vector<std::pair<std::string, std::string>> cfg = {
      {"gt", job.gt_dir},
      {"pred", preds},
      {"metrics", metrics},
      {"threshold", std::to_string(job.policy.threshold)},
      {"polarity", job.policy.polarity == Polarity::DarkIsForeground ? "dark" : "light"},
  };
  if (job.pairs_file) cfg.emplace_back("pairs", *job.pairs_file);
  return cfg;
}

std::string header(const EvalJob& job) {
  std::string out;
  for (const auto& [k, v] : config_of(job)) out += "# " + k + "=" + v + "\n";
  return out;
}

struct Aggregate {
  std::string method;
  std::size_t images = 0;
  std::vector<double> sum;
  std::vector<std::size_t> count;
  std::size_t failures = 0;

  std::optional<double> mean(std::size_t k) const {
    if (count[k] == 0) return std::nullopt;
    return sum[k] / static_cast<double>(count[k]);
  }
};

std::vector<Aggregate> aggregate(const EvalJob& job, const EvalOutcome& outcome) {
  std::vector<Aggregate> out;
  std::vector<std::string> order;
  for (const auto& p : job.preds) order.push_back(p.name);
  for (const auto& r : outcome.images) {
    if (std::find(order.begin(), order.end(), r.task.method) == order.end()) order.push_back(r.task.method);
  }
  for (const auto& name : order) {
    Aggregate a;
    a.method = name;
    a.sum.assign(job.metrics.size(), 0.0);
    a.count.assign(job.metrics.size(), 0);
    for (const auto& r : outcome.images) {
      if (r.task.method != name) continue;
      ++a.images;
      for (std::size_t k = 0; k < job.metrics.size(); ++k) {
        if (!r.error.empty() || !r.report.entries[k].ok()) {
          ++a.failures;
          continue;
        }
        a.sum[k] += *r.report.entries[k].value;
        ++a.count[k];
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

std::vector<PairTask> pair_images(const EvalJob& job) {
  if (job.pairs_file) return pairs_from_file(*job.pairs_file);

  const auto gt = list_pngs(job.gt_dir);
  std::vector<PairTask> tasks;
  std::vector<std::string> unmatched;
  for (const auto& method : job.preds) {
    const auto pred = list_pngs(method.dir);
    for (const auto& [stem, path] : gt) {
      if (!pred.count(stem)) unmatched.push_back(method.name + ": missing prediction for " + fs::path(path).filename().string());
    }
    for (const auto& [stem, path] : pred) {
      if (!gt.count(stem)) {
        unmatched.push_back(method.name + ": no ground truth for " + fs::path(path).filename().string());
      } else {
        tasks.push_back({method.name, stem, gt.at(stem), path});
      }
    }
  }
  if (!unmatched.empty()) {
    std::string msg = "unmatched files:";
    for (const auto& u : unmatched) msg += "\n  " + u;
    throw ManifestMismatch(msg);
  }
  return tasks;
}

EvalOutcome evaluate_all(const EvalJob& job, const std::vector<PairTask>& tasks) {
  EvalOutcome outcome;
  outcome.images.resize(tasks.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(tasks.size());
  const int workers = std::max(1, job.jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    ImageResult& r = outcome.images[static_cast<std::size_t>(i)];
    r.task = tasks[static_cast<std::size_t>(i)];
    try {
      const BinaryMask gt = load_mask(r.task.gt_path, job.policy);
      const BinaryMask pred = load_mask(r.task.pred_path, job.policy);
      r.report = evaluate_pair(pred, gt, job.metrics);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  }
  for (const auto& r : outcome.images) {
    if (!r.error.empty()) {
      outcome.failures += job.metrics.size();
      continue;
    }
    for (const auto& e : r.report.entries) outcome.failures += e.ok() ? 0 : 1;
  }
  return outcome;
}

std::string per_image_csv(const EvalJob& job, const EvalOutcome& outcome) {
  std::string out = header(job);
  out += "method,image";
  for (const auto& m : job.metrics) out += "," + m.name;
  out += ",errors,warnings\n";
  for (const auto& r : outcome.images) {
    out += csv_field(r.task.method) + "," + csv_field(r.task.image);
    std::string errors = r.error, warnings;
    for (std::size_t k = 0; k < job.metrics.size(); ++k) {
      if (!r.error.empty()) {
        out += ",";
        continue;
      }
      const auto& e = r.report.entries[k];
      out += "," + (e.ok() ? fixed(*e.value, 6) : std::string());
      if (!e.error.empty()) errors += (errors.empty() ? "" : "; ") + e.descriptor.name + ": " + e.error;
      if (!e.warning.empty()) warnings += (warnings.empty() ? "" : "; ") + e.descriptor.name + ": " + e.warning;
    }
    out += "," + csv_field(errors) + "," + csv_field(warnings) + "\n";
  }
  return out;
}

std::string summary_csv(const EvalJob& job, const EvalOutcome& outcome) {
  std::string out = header(job);
  out += "method,images";
  for (const auto& m : job.metrics) out += "," + m.name + " " + arrow(m);
  out += ",failures\n";
  for (const auto& a : aggregate(job, outcome)) {
    out += csv_field(a.method) + "," + std::to_string(a.images);
    for (std::size_t k = 0; k < job.metrics.size(); ++k) {
      const auto m = a.mean(k);
      out += "," + (m ? fixed(*m, 4) : std::string());
    }
    out += "," + std::to_string(a.failures) + "\n";
  }
  return out;
}

std::string summary_json(const EvalJob& job, const EvalOutcome& outcome) {
  ordered_json j;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config_of(job)) cfg[k] = v;
  j["config"] = cfg;
  ordered_json metrics = ordered_json::array();
  for (const auto& m : job.metrics) {
    metrics.push_back({{"name", m.name},
                       {"orientation", m.orientation == Orientation::HigherIsBetter ? "higher" : "lower"}});
  }
  j["metrics"] = metrics;
  ordered_json methods = ordered_json::array();
  for (const auto& a : aggregate(job, outcome)) {
    ordered_json mj;
    mj["method"] = a.method;
    mj["images"] = a.images;
    ordered_json means = ordered_json::object();
    for (std::size_t k = 0; k < job.metrics.size(); ++k) {
      const auto m = a.mean(k);
      if (m) {
        means[job.metrics[k].name] = *m;
      } else {
        means[job.metrics[k].name] = nullptr;
      }
    }
    mj["mean"] = means;
    mj["failures"] = a.failures;
    methods.push_back(mj);
  }
  j["methods"] = methods;
  ordered_json failures = ordered_json::array();
  for (const auto& r : outcome.images) {
    if (!r.error.empty()) {
      failures.push_back({{"method", r.task.method}, {"image", r.task.image}, {"metric", nullptr}, {"error", r.error}});
      continue;
    }
    for (const auto& e : r.report.entries) {
      if (!e.ok()) {
        failures.push_back(
            {{"method", r.task.method}, {"image", r.task.image}, {"metric", e.descriptor.name}, {"error", e.error}});
      }
    }
  }
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

std::string summary_table(const EvalJob& job, const EvalOutcome& outcome) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-16s", "Methods");
  os << buf;
  for (const auto& m : job.metrics) {
    const std::string label = m.name + " " + arrow(m);
    // The arrow is three bytes wide in UTF-8 but occupies one column.
    std::snprintf(buf, sizeof buf, "%14s", label.c_str());
    os << "  " << buf;
  }
  os << "\n";
  for (const auto& a : aggregate(job, outcome)) {
    std::snprintf(buf, sizeof buf, "%-16s", a.method.c_str());
    os << buf;
    for (std::size_t k = 0; k < job.metrics.size(); ++k) {
      const auto m = a.mean(k);
      std::snprintf(buf, sizeof buf, "%12s", m ? fixed(*m, 4).c_str() : "-");
      os << "  " << buf;
    }
    os << "\n";
  }
  return os.str();
}

namespace {
void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << content;
  if (!os) throw IoError("write failed: " + path.string());
}
}  // namespace

EvalOutcome run_evaluation(const EvalJob& job) {
  const auto tasks = pair_images(job);
  const EvalOutcome outcome = evaluate_all(job, tasks);
  fs::create_directories(job.out_dir);
  const fs::path out(job.out_dir);
  write_file(out / "per_image.csv", per_image_csv(job, outcome));
  write_file(out / "summary.csv", summary_csv(job, outcome));
  write_file(out / "summary.json", summary_json(job, outcome));
  return outcome;
}

}  // namespace phdeval
