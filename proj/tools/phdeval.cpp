// Command-line front end: batch evaluation, skeletonization, consistency
// analysis and the study service.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phdeval/consistency.hpp"
#include "phdeval/errors.hpp"
#include "phdeval/evaluate.hpp"
#include "phdeval/mask.hpp"
#include "phdeval/parallel.hpp"
#include "phdeval/skeleton.hpp"
#include "phdeval/study_service.hpp"

namespace {

using namespace phdeval;

constexpr int kExitError = 1;

BinarizationPolicy make_policy(const std::string& polarity, int threshold) {
  BinarizationPolicy p;
  p.threshold = threshold;
  p.polarity = polarity == "light" ? Polarity::LightIsForeground : Polarity::DarkIsForeground;
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

StudyService* g_service = nullptr;
extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thin-structure segmentation evaluation with the perceptual Hausdorff distance"};
  app.require_subcommand(1);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score prediction directories against a ground-truth directory");
  std::string gt_dir, out_dir, metrics = "f1,iou,dice,phd:0,phd:1,phd:3,phd:5", polarity = "dark", pairs;
  std::vector<std::string> preds;
  bool sk = false;
  int threshold = 128, jobs = 1;
  eval->add_option("--gt", gt_dir, "Ground-truth directory")->required();
  eval->add_option("--pred", preds, "Prediction directory as NAME=DIR (repeatable)")->required();
  eval->add_option("--metrics", metrics, "Comma-separated metrics")->capture_default_str();
  eval->add_flag("--sk", sk, "Also report skeletonized (-SK) variants of the pixel metrics");
  eval->add_option("--polarity", polarity, "Which gray levels are foreground")
      ->check(CLI::IsMember({"dark", "light"}))
      ->capture_default_str();
  eval->add_option("--threshold", threshold, "Binarization threshold")->check(CLI::Range(0, 255))->capture_default_str();
  eval->add_option("--out", out_dir, "Output directory")->required();
  eval->add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--pairs", pairs, "JSON pair manifest overriding file-stem matching");

  // skeletonize
  auto* skel = app.add_subcommand("skeletonize", "Zhang-Suen thinning of one mask");
  std::string skel_in, skel_out;
  skel->add_option("input", skel_in, "Input mask")->required();
  skel->add_option("output", skel_out, "Output skeleton PNG")->required();
  skel->add_option("--polarity", polarity)->check(CLI::IsMember({"dark", "light"}))->capture_default_str();
  skel->add_option("--threshold", threshold)->check(CLI::Range(0, 255))->capture_default_str();

  // consistency
  auto* cons = app.add_subcommand("consistency", "Agreement of metrics with human majority votes");
  std::string manifest, votes, sweep, cons_out;
  double tie_epsilon = 0.0;
  std::size_t validity = kDefaultValidityThreshold;
  cons->add_option("--manifest", manifest, "Group manifest (JSON)")->required();
  cons->add_option("--votes", votes, "Vote log (JSON lines)")->required();
  cons->add_option("--sweep", sweep, "PHD tolerance sweep A..B:S");
  cons->add_option("--tie-epsilon", tie_epsilon, "Score difference treated as a tie")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cons->add_option("--validity-threshold", validity, "Votes needed for a valid group")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cons->add_option("--metrics", metrics)->capture_default_str();
  cons->add_flag("--sk", sk);
  cons->add_option("--polarity", polarity)->check(CLI::IsMember({"dark", "light"}))->capture_default_str();
  cons->add_option("--threshold", threshold)->check(CLI::Range(0, 255))->capture_default_str();
  cons->add_option("--out", cons_out, "Write consistency.{json,csv} (and sweep.csv) here instead of stdout");
  cons->add_option("--jobs,-j", jobs)->check(CLI::PositiveNumber)->capture_default_str();

  // study serve
  auto* study = app.add_subcommand("study", "Perceptual study service");
  study->require_subcommand(1);
  auto* serve = study->add_subcommand("serve", "Serve the voting API");
  std::string bind = "127.0.0.1:8080", static_dir;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;
  serve->add_option("--manifest", manifest)->required();
  serve->add_option("--votes", votes)->required();
  serve->add_option("--bind", bind, "HOST:PORT")->capture_default_str();
  serve->add_option("--seed", seed, "Seed for order and label randomization")->capture_default_str();
  serve->add_option("--batch-size", batch_size, "Suggest a break every N groups");
  serve->add_option("--static", static_dir, "Directory with the browser UI");
  serve->add_option("--validity-threshold", validity)->check(CLI::PositiveNumber)->capture_default_str();
  serve->add_option("--tie-epsilon", tie_epsilon)->check(CLI::NonNegativeNumber)->capture_default_str();
  serve->add_option("--metrics", metrics)->capture_default_str();
  serve->add_option("--polarity", polarity)->check(CLI::IsMember({"dark", "light"}))->capture_default_str();
  serve->add_option("--threshold", threshold)->check(CLI::Range(0, 255))->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eval) {
      EvalJob job;
      job.gt_dir = gt_dir;
      for (const auto& p : preds) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == p.size()) {
          std::cerr << "error: --pred expects NAME=DIR, got " << p << "\n";
          return kExitError;
        }
        job.preds.push_back({p.substr(0, eq), p.substr(eq + 1)});
      }
      job.metrics = parse_metric_list(metrics, sk);
      job.out_dir = out_dir;
      job.jobs = jobs;
      job.policy = make_policy(polarity, threshold);
      if (!pairs.empty()) job.pairs_file = pairs;

      const EvalOutcome outcome = run_evaluation(job);
      std::cout << summary_table(job, outcome);
      if (outcome.failures) {
        std::cerr << outcome.failures << " metric evaluation(s) failed; see " << out_dir << "/summary.json\n";
      }
      return outcome.exit_code();
    }

    if (*skel) {
      const BinaryMask mask = load_mask(skel_in, make_policy(polarity, threshold));
      write_mask(skeleton_to_mask(thin(mask)), skel_out);
      return 0;
    }

    if (*cons) {
      set_thread_count(jobs);
      ConsistencyConfig config;
      config.validity_threshold = validity;
      config.tie_epsilon = tie_epsilon;
      config.metrics = parse_metric_list(metrics, sk);
      if (!sweep.empty()) config.sweep = parse_sweep(sweep);
      config.policy = make_policy(polarity, threshold);

      const auto groups = read_manifest(manifest);
      const auto log = read_vote_log(votes);
      const ConsistencyReport report = analyze(groups, log, config);
      if (cons_out.empty()) {
        std::cout << report_to_csv(report);
        if (!report.sweep.empty()) std::cout << "\n" << sweep_to_csv(report);
      } else {
        const std::filesystem::path out(cons_out);
        std::filesystem::create_directories(out);
        write_text(out / "consistency.json", report_to_json(report));
        write_text(out / "consistency.csv", report_to_csv(report));
        if (!report.sweep.empty()) write_text(out / "sweep.csv", sweep_to_csv(report));
      }
      return 0;
    }

    if (*serve) {
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos) {
        std::cerr << "error: --bind expects HOST:PORT\n";
        return kExitError;
      }
      const std::string host = bind.substr(0, colon);
      const int port = std::stoi(bind.substr(colon + 1));

      StudyOptions options;
      options.seed = seed;
      options.batch_size = batch_size;
      options.static_dir = static_dir;
      options.analysis.validity_threshold = validity;
      options.analysis.tie_epsilon = tie_epsilon;
      options.analysis.metrics = parse_metric_list(metrics);
      options.analysis.policy = make_policy(polarity, threshold);

      VoteStore store(votes);
      StudyService service(read_manifest(manifest), store, options);
      const int bound = service.bind(host, port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on " << host << ":" << bound << "\n";
      service.listen();
      g_service = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
