#include "phdeval/study_service.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "phdeval/errors.hpp"

namespace phdeval {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::uint64_t seed, std::initializer_list<std::string_view> parts) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (std::string_view part : parts) {
    for (unsigned char c : part) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

StudyService::Response json_response(int status, const json& body) { return {status, body.dump()}; }

StudyService::Response error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

}  // namespace

StudyService::StudyService(std::vector<TripletGroup> groups, VoteStore& store, StudyOptions options)
    : groups_(std::move(groups)), store_(store), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  for (std::size_t i = 0; i < groups_.size(); ++i) index_[groups_[i].group_id] = i;

  // No SO_REUSEPORT: a second instance on the same port must fail instead of
  // silently sharing the vote traffic.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });

  server_->Get(R"(/api/session/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = next_group(req.matches[1].str());
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->Post("/api/votes", [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = submit_vote(req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->Get("/api/results", [this](const httplib::Request&, httplib::Response& res) {
    const Response r = results();
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->Get(R"(/img/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto path = image_path(req.matches[1].str());
    std::ifstream is;
    if (path) is.open(*path, std::ios::binary);
    if (!path || !is) {
      res.status = 404;
      res.set_content(json{{"error", "unknown image"}}.dump(), "application/json");
      return;
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    res.set_content(ss.str(), "image/png");
  });
  if (!options_.static_dir.empty()) server_->set_mount_point("/", options_.static_dir);
}

StudyService::~StudyService() { stop(); }

int StudyService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound <= 0) throw Error("cannot bind " + host + ": address in use or unavailable");
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port) + ": address in use or unavailable");
  }
  return port;
}

void StudyService::listen() { server_->listen_after_bind(); }

void StudyService::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void StudyService::wait_until_ready() const { server_->wait_until_ready(); }

std::vector<std::size_t> StudyService::order_for(const std::string& subject_id) const {
  std::vector<std::size_t> order(groups_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(fnv1a(options_.seed, {"order", subject_id}));
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

bool StudyService::swapped(const std::string& subject_id, const std::string& group_id) const {
  {
    std::lock_guard lock(mu_);
    const auto it = swap_.find({subject_id, group_id});
    if (it != swap_.end()) return it->second;
  }
  return (fnv1a(options_.seed, {"swap", subject_id, group_id}) >> 17) & 1u;
}

std::string StudyService::register_image(const std::string& subject, const std::string& group, const char* role,
                                         const std::string& path) {
  const std::string id = hex(fnv1a(options_.seed, {"img", subject, group, role}));
  images_[id] = path;
  return id;
}

std::optional<std::string> StudyService::image_path(const std::string& image_id) const {
  std::lock_guard lock(mu_);
  const auto it = images_.find(image_id);
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

StudyService::Response StudyService::next_group(const std::string& subject_id) {
  if (subject_id.empty()) return error_response(400, "subject id is empty");
  std::size_t answered = 0;
  std::optional<std::size_t> next;
  for (std::size_t idx : order_for(subject_id)) {
    if (store_.has_vote(groups_[idx].group_id, subject_id)) {
      ++answered;
    } else if (!next) {
      next = idx;
    }
  }
  json body;
  body["answered"] = answered;
  body["total"] = groups_.size();
  if (!next) {
    body["done"] = true;
    return json_response(200, body);
  }

  const TripletGroup& g = groups_[*next];
  const bool swap = swapped(subject_id, g.group_id);
  std::lock_guard lock(mu_);
  swap_[{subject_id, g.group_id}] = swap;
  body["group_id"] = g.group_id;
  body["gt_url"] = "/img/" + register_image(subject_id, g.group_id, "gt", g.gt_path);
  body["a_url"] = "/img/" + register_image(subject_id, g.group_id, "A", swap ? g.pred_b_path : g.pred_a_path);
  body["b_url"] = "/img/" + register_image(subject_id, g.group_id, "B", swap ? g.pred_a_path : g.pred_b_path);
  if (options_.batch_size > 0) {
    body["batch_size"] = options_.batch_size;
    body["break_suggested"] = answered > 0 && answered % options_.batch_size == 0;
  }
  return json_response(200, body);
}

StudyService::Response StudyService::submit_vote(const std::string& request_body) {
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::parse_error&) {
    return error_response(400, "body is not valid JSON");
  }
  if (!req.is_object()) return error_response(400, "body must be a JSON object");
  for (const char* key : {"group_id", "subject_id", "choice"}) {
    if (!req.contains(key) || !req[key].is_string() || req[key].get<std::string>().empty()) {
      return error_response(400, std::string("missing string field \"") + key + "\"");
    }
  }
  VoteRecord vote;
  vote.group_id = req["group_id"].get<std::string>();
  vote.subject_id = req["subject_id"].get<std::string>();
  if (!index_.count(vote.group_id)) return error_response(400, "unknown group \"" + vote.group_id + "\"");

  Choice shown;
  try {
    shown = choice_from_wire(req["choice"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    return error_response(400, e.what());
  }
  vote.choice = shown;
  if (shown != Choice::DifficultToChoose && swapped(vote.subject_id, vote.group_id)) {
    vote.choice = shown == Choice::PredA ? Choice::PredB : Choice::PredA;
  }
  vote.ts = std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());

  try {
    if (store_.append(vote) == VoteStore::AppendResult::Duplicate) {
      return error_response(409, "subject already voted on this group");
    }
  } catch (const IoError& e) {
    return error_response(503, e.what());
  }
  return json_response(201, json{{"recorded", true}, {"group_id", vote.group_id}});
}

StudyService::Response StudyService::results() {
  const auto votes = store_.snapshot();
  std::lock_guard lock(mu_);
  try {
    if (!scores_) scores_.emplace();
    const ConsistencyReport report = analyze(groups_, votes, options_.analysis, &*scores_);
    return {200, report_to_json(report)};
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

}  // namespace phdeval
