#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phdeval/mask.hpp"
#include "phdeval/metrics.hpp"

namespace phdeval {

struct MethodDir {
  std::string name;
  std::string dir;
};

struct EvalJob {
  std::string gt_dir;
  std::vector<MethodDir> preds;
  std::vector<MetricDescriptor> metrics;
  std::string out_dir;
  int jobs = 1;
  BinarizationPolicy policy;
  /// Optional JSON array of {"method","image","gt","pred"} replacing stem matching.
  std::optional<std::string> pairs_file;
};

struct PairTask {
  std::string method;
  std::string image;  // file stem
  std::string gt_path;
  std::string pred_path;
};

/// Matches prediction and ground-truth PNGs by file stem. Throws
/// ManifestMismatch listing every unmatched file, FileNotFound for a missing
/// or empty directory.
std::vector<PairTask> pair_images(const EvalJob& job);

struct ImageResult {
  PairTask task;
  MetricReport report;
  std::string error;  // whole-image failure (I/O, shape mismatch)
};

struct EvalOutcome {
  std::vector<ImageResult> images;
  std::size_t failures = 0;  // failed (image, metric) cells
  int exit_code() const { return failures == 0 ? 0 : 2; }
};

/// Scores every pair with job.jobs workers; result order is independent of
/// the worker count.
EvalOutcome evaluate_all(const EvalJob& job, const std::vector<PairTask>& tasks);

std::string per_image_csv(const EvalJob& job, const EvalOutcome& outcome);
/// Unweighted mean per method and metric over the images where it succeeded.
std::string summary_csv(const EvalJob& job, const EvalOutcome& outcome);
std::string summary_json(const EvalJob& job, const EvalOutcome& outcome);
/// Fixed-width table with orientation arrows, for the terminal.
std::string summary_table(const EvalJob& job, const EvalOutcome& outcome);

/// pair_images + evaluate_all + report files in job.out_dir (per_image.csv,
/// summary.csv, summary.json).
EvalOutcome run_evaluation(const EvalJob& job);

}  // namespace phdeval
