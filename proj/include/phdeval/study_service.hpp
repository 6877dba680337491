#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "phdeval/consistency.hpp"

namespace httplib {
class Server;
}

namespace phdeval {

struct StudyOptions {
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;  // 0: no pacing hint
  std::string static_dir;      // served at "/" when set (browser UI bundle)
  ConsistencyConfig analysis;
};

/// HTTP front end of the triplet-choice experiment.
///
///   GET  /api/session/{subject}/next  -> {group_id, gt_url, a_url, b_url, answered, total}
///                                        or {done: true, answered, total}
///   POST /api/votes {group_id, subject_id, choice}  -> 201, 409 duplicate,
///                                                     400 bad request, 503 storage failure
///   GET  /api/results                 -> consistency report JSON
///   GET  /img/{id}                    -> PNG bytes
///
/// Group order is a per-subject permutation, and which prediction is shown
/// as "A" is drawn per (subject, group). Both derive from the seed and are
/// remembered server-side, so votes are logged as pred_a/pred_b. Image ids
/// are opaque so URLs do not reveal the mapping.
class StudyService {
 public:
  StudyService(std::vector<TripletGroup> groups, VoteStore& store, StudyOptions options = {});
  ~StudyService();
  StudyService(const StudyService&) = delete;
  StudyService& operator=(const StudyService&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound
  /// port. Throws Error("address in use ...") when binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires bind().
  void listen();
  void stop();
  /// Blocks until the server thread accepts connections.
  void wait_until_ready() const;

  /// Request handlers, exposed for direct testing: {status, JSON body}.
  struct Response {
    int status = 200;
    std::string body;
  };
  Response next_group(const std::string& subject_id);
  Response submit_vote(const std::string& request_body);
  Response results();
  std::optional<std::string> image_path(const std::string& image_id) const;

  /// True when the subject sees pred_b in the "A" slot of the group.
  bool swapped(const std::string& subject_id, const std::string& group_id) const;
  std::vector<std::size_t> order_for(const std::string& subject_id) const;

 private:
  std::string register_image(const std::string& subject, const std::string& group, const char* role,
                             const std::string& path);

  std::vector<TripletGroup> groups_;
  std::map<std::string, std::size_t> index_;
  VoteStore& store_;
  StudyOptions options_;
  std::unique_ptr<httplib::Server> server_;

  mutable std::mutex mu_;
  std::map<std::string, std::string> images_;                      // id -> path
  std::map<std::pair<std::string, std::string>, bool> swap_;        // (subject, group) -> swapped
  std::optional<ScoreTable> scores_;
};

}  // namespace phdeval
