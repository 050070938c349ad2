/*
 * Copyright 2026 The slicevis Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "slicevis/server.h"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <stop_token>
#include <thread>

#include "httplib.h"
#include "slicevis/error.h"
#include "slicevis/protocol.h"
#include "slicevis/session.h"

namespace slicevis {
namespace {

using nlohmann::json;

class NotFound : public Error {
 public:
  using Error::Error;
};

struct Mailbox {
  std::mutex mu;
  std::condition_variable cv;
  std::optional<std::string> pending;
  bool closed = false;

  void Post(std::string message) {
    {
      std::lock_guard lock(mu);
      pending = std::move(message);
    }
    cv.notify_all();
  }
  void Close() {
    {
      std::lock_guard lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

struct SessionEntry {
  std::shared_ptr<Session> session;
  std::mutex subscribers_mu;
  std::vector<std::weak_ptr<Mailbox>> subscribers;
  std::mutex player_mu;
  std::jthread player;

  void Publish(const std::string& event, const std::string& data) {
    const std::string message = "event: " + event + "\ndata: " + data + "\n\n";
    std::lock_guard lock(subscribers_mu);
    std::erase_if(subscribers, [](const auto& w) { return w.expired(); });
    for (const auto& weak : subscribers) {
      if (auto box = weak.lock()) box->Post(message);
    }
  }

  void CloseSubscribers() {
    std::lock_guard lock(subscribers_mu);
    for (const auto& weak : subscribers) {
      if (auto box = weak.lock()) box->Close();
    }
    subscribers.clear();
  }

  void StopPlayer() {
    std::jthread old;
    {
      std::lock_guard lock(player_mu);
      old = std::move(player);
    }
    // Joined here, outside the lock.
  }
};

struct ModelEntry {
  ModelHandle handle;
  std::string dataset;
  std::optional<std::string> response;
};

json ErrorJson(const std::string& type, const std::string& message) {
  return {{"error", message}, {"type", type}};
}

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void Guard(httplib::Response& res, F&& handler) {
  try {
    handler();
  } catch (const NotFound& e) {
    Reply(res, 404, ErrorJson("not_found", e.what()));
  } catch (const ProtocolError& e) {
    Reply(res, 502, ErrorJson("protocol", e.what()));
  } catch (const ModelError& e) {
    Reply(res, 422, ErrorJson("model", e.what()));
  } catch (const DataError& e) {
    Reply(res, 400, ErrorJson("data", e.what()));
  } catch (const StateError& e) {
    Reply(res, 409, ErrorJson("state", e.what()));
  } catch (const json::exception& e) {
    Reply(res, 400, ErrorJson("data", std::string("bad JSON: ") + e.what()));
  } catch (const std::exception& e) {
    Reply(res, 500, ErrorJson("internal", e.what()));
  }
}

json ParseBody(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body);
  if (!body.is_object()) throw DataError("request body must be a JSON object");
  return body;
}

std::vector<std::string> Names(const json& body, const char* key) {
  std::vector<std::string> out;
  if (!body.contains(key) || body[key].is_null()) return out;
  if (body[key].is_string()) return {body[key].get<std::string>()};
  for (const auto& item : body.at(key)) out.push_back(item.get<std::string>());
  return out;
}

std::optional<std::string> OptionalName(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  return body.at(key).get<std::string>();
}

}  // namespace

json DatasetSummaryJson(const DataFrame& frame, std::size_t dropped_rows) {
  json columns = json::array();
  for (const auto& col : frame.columns()) {
    json c = {{"name", col.name}, {"kind", KindName(col.kind)}};
    if (col.is_numeric()) {
      const NumericStats s = ScalingStats::ComputeColumn(col);
      c["min"] = s.min;
      c["max"] = s.max;
      c["mean"] = s.mean;
      c["sd"] = s.sd;
    } else {
      c["levels"] = col.levels;
    }
    columns.push_back(std::move(c));
  }
  return {{"schema", "v1"},
          {"rows", frame.num_rows()},
          {"droppedRows", dropped_rows},
          {"columns", std::move(columns)}};
}

json ModelSummaryJson(const ModelHandle& model) {
  json schema = json::array();
  for (const auto& field : model.schema) {
    json f = {{"name", field.name}, {"kind", KindName(field.kind)}};
    if (!field.levels.empty()) f["levels"] = field.levels;
    schema.push_back(std::move(f));
  }
  json out = {{"schema", "v1"},
              {"id", model.id},
              {"kind", PredictionKindName(model.kind)},
              {"source", model.source},
              {"inputs", std::move(schema)}};
  if (const auto* impl = model.impl.get();
      impl != nullptr && model.source.starts_with("builtin:linear")) {
    const LinearCoefficients& c = LinearCoefficientsOf(model);
    json terms = json::array();
    for (std::size_t i = 0; i < c.terms.size(); ++i) {
      terms.push_back({{"term", c.terms[i]}, {"estimate", c.beta[i]}});
    }
    out["coefficients"] = std::move(terms);
  }
  return out;
}

struct Server::Impl {
  ServerOptions options;
  httplib::Server http;
  std::thread thread;
  int port = 0;

  std::mutex mu;
  std::map<std::string, std::shared_ptr<const DataFrame>> datasets;
  std::map<std::string, ModelEntry> models;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  std::size_t next_dataset = 1;
  std::size_t next_model = 1;
  std::size_t next_session = 1;

  explicit Impl(ServerOptions o) : options(std::move(o)) { Routes(); }

  std::shared_ptr<const DataFrame> Dataset(const std::string& id) {
    std::lock_guard lock(mu);
    const auto it = datasets.find(id);
    if (it == datasets.end()) throw NotFound("unknown dataset '" + id + "'");
    return it->second;
  }

  std::shared_ptr<SessionEntry> SessionById(const std::string& id) {
    std::lock_guard lock(mu);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
  }

  std::string AddDataset(DataFrame frame) {
    std::lock_guard lock(mu);
    const std::string id = "d" + std::to_string(next_dataset++);
    datasets[id] = std::make_shared<const DataFrame>(std::move(frame));
    return id;
  }

  json PostDataset(const httplib::Request& req) {
    IngestResult ingest;
    const bool is_json =
        req.get_header_value("Content-Type").find("json") != std::string::npos;
    if (is_json) {
      const json body = ParseBody(req);
      SchemaOverride schema;
      if (body.contains("schema")) {
        const json& s = body["schema"];
        if (s.is_string()) {
          schema = ParseSchemaOverride(s.get<std::string>());
        } else {
          for (const auto& [name, kind] : s.items()) {
            schema[name] = ParseColumnKind(kind.get<std::string>());
          }
        }
      }
      if (body.contains("csv")) {
        ingest = IngestCsv(body["csv"].get<std::string>(), schema);
      } else if (body.contains("path")) {
        ingest = IngestCsvFile(body["path"].get<std::string>(), schema);
      } else {
        throw DataError("dataset needs \"csv\" text or a \"path\"");
      }
    } else {
      ingest = IngestCsv(req.body);
    }
    json out = DatasetSummaryJson(ingest.frame, ingest.dropped_rows);
    out["id"] = AddDataset(std::move(ingest.frame));
    return out;
  }

  json PostModel(const httplib::Request& req) {
    const json body = ParseBody(req);
    const std::string dataset = body.at("dataset").get<std::string>();
    const auto frame = Dataset(dataset);
    const ModelSpec spec =
        ModelSpec::Parse(body.contains("spec") ? body["spec"].get<std::string>()
                                               : "linear");
    const auto response = OptionalName(body, "response");
    auto predictors = Names(body, "predictors");
    if (predictors.empty()) {
      for (const auto& name : frame->ColumnNames()) {
        if (!response || name != *response) predictors.push_back(name);
      }
    }
    std::string id;
    {
      std::lock_guard lock(mu);
      id = body.contains("id") ? body["id"].get<std::string>()
                               : "m" + std::to_string(next_model++);
      if (models.contains(id)) throw DataError("model id '" + id + "' is taken");
    }
    ModelHandle handle;
    if (spec.type == ModelSpec::Type::kExternal) {
      std::vector<std::string> levels;
      if (response && !frame->column(*response).is_numeric()) {
        levels = frame->column(*response).levels;
      }
      handle = ConnectExternal(spec, SchemaOf(*frame, predictors), levels, id);
    } else {
      handle = FitBuiltin(spec, *frame, response, predictors, id);
    }
    json out = ModelSummaryJson(handle);
    out["dataset"] = dataset;
    out["response"] = response ? json(*response) : json();
    std::lock_guard lock(mu);
    if (models.contains(id)) throw DataError("model id '" + id + "' is taken");
    models[id] = {std::move(handle), dataset, response};
    return out;
  }

  json PostSession(const httplib::Request& req) {
    const json body = ParseBody(req);
    const std::string dataset = body.at("dataset").get<std::string>();
    const auto frame = Dataset(dataset);
    std::vector<ModelHandle> handles;
    std::optional<std::string> response = OptionalName(body, "response");
    {
      std::lock_guard lock(mu);
      for (const auto& id : Names(body, "models")) {
        const auto it = models.find(id);
        if (it == models.end()) throw NotFound("unknown model '" + id + "'");
        if (it->second.dataset != dataset) {
          throw DataError("model '" + id + "' was not fitted on '" + dataset + "'");
        }
        if (!response) response = it->second.response;
        handles.push_back(it->second.handle);
      }
    }
    Roles roles = Roles::Complete(*frame, Names(body, "section"),
                                  Names(body, "hidden"), response);
    SessionOptions options;
    options.seed = body.contains("seed") ? body["seed"].get<std::uint64_t>()
                                         : this->options.seed;
    if (body.contains("sigma")) {
      const json& s = body["sigma"];
      options.similarity.sigma =
          s.is_string() && s.get<std::string>() == "inf" ? kShowAll
                                                          : s.get<double>();
    }
    if (body.contains("distance")) {
      options.similarity.distance =
          ParseDistanceKind(body["distance"].get<std::string>());
    }
    if (body.contains("fadeBins")) {
      options.similarity.fade_bins = body["fadeBins"].get<int>();
    }
    options.color_var = OptionalName(body, "colorVar");
    if (body.contains("resolution")) {
      options.section.resolution = body["resolution"].get<std::vector<int>>();
    }
    if (body.contains("barBins")) options.section.bar_bins = body["barBins"].get<int>();
    if (body.contains("conditionCap")) {
      options.condition_cap = body["conditionCap"].get<std::size_t>();
    }
    roles.Validate(*frame);
    if (body.contains("initialPoint")) {
      options.initial_point = PointFromJson(body["initialPoint"], *frame, roles);
    }
    std::string id;
    {
      std::lock_guard lock(mu);
      id = "s" + std::to_string(next_session++);
    }
    auto entry = std::make_shared<SessionEntry>();
    entry->session = std::make_shared<Session>(id, frame, std::move(handles),
                                               std::move(roles), std::move(options));
    json out = entry->session->StateJson();
    std::lock_guard lock(mu);
    sessions[id] = std::move(entry);
    return out;
  }

  json Mutate(SessionEntry& entry, const json& mutation) {
    const MutationResult result = entry.session->Apply(mutation);
    json section = entry.session->SectionJson();
    entry.Publish("section", section.dump());
    json out = {{"state", entry.session->StateJson()},
                {"section", std::move(section)}};
    if (result.conditions_changed) {
      out["conditions"] = entry.session->ConditionsJson();
    }
    return out;
  }

  void Play(const std::shared_ptr<SessionEntry>& entry, int interval_ms) {
    const auto state = entry->session->state();
    if (!state->tour) throw StateError("no tour has been started");
    entry->StopPlayer();
    std::lock_guard lock(entry->player_mu);
    entry->player = std::jthread([this, entry, interval_ms](std::stop_token stop) {
      std::mutex m;
      std::condition_variable_any cv;
      while (!stop.stop_requested()) {
        std::unique_lock lock(m);
        cv.wait_for(lock, stop, std::chrono::milliseconds(interval_ms),
                    [] { return false; });
        if (stop.stop_requested()) return;
        const auto s = entry->session->state();
        if (!s->tour || s->tour_step + 1 >= s->path()->size()) return;
        try {
          Mutate(*entry, {{"op", "tourStep"}, {"step", s->tour_step + 1}});
        } catch (const std::exception&) {
          return;
        }
      }
    });
  }

  void Events(const std::shared_ptr<SessionEntry>& entry,
              httplib::Response& res) {
    auto box = std::make_shared<Mailbox>();
    box->pending =
        "event: section\ndata: " + entry->session->SectionJson().dump() + "\n\n";
    {
      std::lock_guard lock(entry->subscribers_mu);
      entry->subscribers.push_back(box);
    }
    const auto keepalive = std::chrono::milliseconds(options.keepalive_ms);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [box, keepalive](std::size_t, httplib::DataSink& sink) {
          std::unique_lock lock(box->mu);
          box->cv.wait_for(lock, keepalive,
                           [&] { return box->pending || box->closed; });
          if (box->closed) {
            sink.done();
            return true;
          }
          std::string message = ": keepalive\n\n";
          if (box->pending) {
            message = std::move(*box->pending);
            box->pending.reset();
          }
          lock.unlock();
          return sink.write(message.data(), message.size());
        },
        [box](bool) { box->Close(); });
  }

  void Bind() {
    port = options.port == 0
               ? http.bind_to_any_port(options.host)
               : (http.bind_to_port(options.host, options.port) ? options.port
                                                                : -1);
    if (port <= 0) {
      throw StateError("cannot bind " + options.host + ":" +
                       std::to_string(options.port));
    }
  }

  void CloseAll() {
    std::map<std::string, std::shared_ptr<SessionEntry>> all;
    {
      std::lock_guard lock(mu);
      all = sessions;
    }
    for (auto& [id, entry] : all) {
      entry->StopPlayer();
      entry->CloseSubscribers();
    }
  }

  void Routes() {
    http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      Reply(res, 200, {{"status", "ok"}});
    });
    http.Post("/datasets", [this](const httplib::Request& req, httplib::Response& res) {
      Guard(res, [&] { Reply(res, 201, PostDataset(req)); });
    });
    http.Get(R"(/datasets/([^/]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 json out = DatasetSummaryJson(*Dataset(req.matches[1]), 0);
                 out["id"] = req.matches[1];
                 Reply(res, 200, out);
               });
             });
    http.Post("/models", [this](const httplib::Request& req, httplib::Response& res) {
      Guard(res, [&] { Reply(res, 201, PostModel(req)); });
    });
    http.Get(R"(/models/([^/]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 std::lock_guard lock(mu);
                 const auto it = models.find(req.matches[1]);
                 if (it == models.end()) {
                   throw NotFound("unknown model '" + std::string(req.matches[1]) + "'");
                 }
                 json out = ModelSummaryJson(it->second.handle);
                 out["dataset"] = it->second.dataset;
                 Reply(res, 200, out);
               });
             });
    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      Guard(res, [&] { Reply(res, 201, PostSession(req)); });
    });
    http.Get(R"(/sessions/([^/]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 Reply(res, 200, SessionById(req.matches[1])->session->StateJson());
               });
             });
    http.Patch(R"(/sessions/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Guard(res, [&] {
                   const auto entry = SessionById(req.matches[1]);
                   Reply(res, 200, Mutate(*entry, json::parse(req.body)));
                 });
               });
    http.Get(R"(/sessions/([^/]+)/section)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 Reply(res, 200, SessionById(req.matches[1])->session->SectionJson());
               });
             });
    http.Get(R"(/sessions/([^/]+)/conditions)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 Reply(res, 200,
                       SessionById(req.matches[1])->session->ConditionsJson());
               });
             });
    http.Post(R"(/sessions/([^/]+)/tours)",
              [this](const httplib::Request& req, httplib::Response& res) {
                Guard(res, [&] {
                  const auto entry = SessionById(req.matches[1]);
                  json mutation = ParseBody(req);
                  mutation["op"] = "startTour";
                  entry->StopPlayer();
                  json out = Mutate(*entry, mutation);
                  out["tour"] = entry->session->TourJson();
                  Reply(res, 201, out);
                });
              });
    http.Get(R"(/sessions/([^/]+)/tour)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 Reply(res, 200, SessionById(req.matches[1])->session->TourJson());
               });
             });
    http.Post(R"(/sessions/([^/]+)/play)",
              [this](const httplib::Request& req, httplib::Response& res) {
                Guard(res, [&] {
                  const auto entry = SessionById(req.matches[1]);
                  const json body = ParseBody(req);
                  const int interval =
                      body.contains("intervalMs") ? body["intervalMs"].get<int>() : 500;
                  if (interval < 1) throw DataError("intervalMs must be positive");
                  Play(entry, interval);
                  Reply(res, 202, {{"playing", true}, {"intervalMs", interval}});
                });
              });
    http.Post(R"(/sessions/([^/]+)/pause)",
              [this](const httplib::Request& req, httplib::Response& res) {
                Guard(res, [&] {
                  SessionById(req.matches[1])->StopPlayer();
                  Reply(res, 200, {{"playing", false}});
                });
              });
    http.Get(R"(/sessions/([^/]+)/events)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] { Events(SessionById(req.matches[1]), res); });
             });
    http.Get(R"(/sessions/([^/]+)/log)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 Reply(res, 200,
                       {{"schema", "v1"},
                        {"mutations", SessionById(req.matches[1])->session->MutationLog()}});
               });
             });
    http.Get(R"(/sessions/([^/]+)/visited)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 const auto entry = SessionById(req.matches[1]);
                 if (req.get_param_value("format") == "csv") {
                   res.set_content(entry->session->VisitedCsv(), "text/csv");
                 } else {
                   Reply(res, 200, entry->session->VisitedJson());
                 }
               });
             });
    http.Delete(R"(/sessions/([^/]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  Guard(res, [&] {
                    const auto entry = SessionById(req.matches[1]);
                    {
                      std::lock_guard lock(mu);
                      sessions.erase(req.matches[1]);
                    }
                    entry->StopPlayer();
                    entry->CloseSubscribers();
                    if (req.get_param_value("format") == "csv") {
                      res.set_content(entry->session->VisitedCsv(), "text/csv");
                    } else {
                      Reply(res, 200, entry->session->VisitedJson());
                    }
                  });
                });
  }
};

Server::Server(ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() { Stop(); }

int Server::Start() {
  impl_->Bind();
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return impl_->port;
}

void Server::Listen() {
  impl_->Bind();
  impl_->http.listen_after_bind();
}

void Server::Stop() {
  if (!impl_) return;
  impl_->CloseAll();
  impl_->http.stop();
  if (impl_->thread.joinable() &&
      impl_->thread.get_id() != std::this_thread::get_id()) {
    impl_->thread.join();
  }
}

int Server::port() const { return impl_->port; }

std::string Server::url() const {
  return "http://" + impl_->options.host + ":" + std::to_string(impl_->port);
}

std::string Server::AddDataset(DataFrame frame) {
  return impl_->AddDataset(std::move(frame));
}

}  // namespace slicevis
