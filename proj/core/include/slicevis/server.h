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

// HTTP service holding datasets, models and interactive sessions.
//
//   POST   /datasets                  CSV body, or {"csv":..., "schema":{...}}
//   GET    /datasets/{id}
//   POST   /models                    {"dataset","spec","response","predictors"}
//   GET    /models/{id}
//   POST   /sessions                  {"dataset","models","section","hidden",...}
//   GET    /sessions/{id}             state
//   PATCH  /sessions/{id}             one mutation (see Session::Apply)
//   GET    /sessions/{id}/section     section payload
//   GET    /sessions/{id}/conditions  condition-selector payload
//   POST   /sessions/{id}/tours       start a tour
//   GET    /sessions/{id}/tour
//   POST   /sessions/{id}/play        {"intervalMs":500}
//   POST   /sessions/{id}/pause
//   GET    /sessions/{id}/events      server-sent events, latest payload wins
//   GET    /sessions/{id}/log         mutation log, replayable
//   GET    /sessions/{id}/visited     ?format=csv|json
//   DELETE /sessions/{id}             closes; returns the visited export
//
// Errors are JSON {"error": message, "type": ...} with 400 (bad data), 404,
// 409 (state), 422 (model) or 502 (external model server).

#ifndef SLICEVIS_SERVER_H_
#define SLICEVIS_SERVER_H_

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "slicevis/frame.h"
#include "slicevis/model.h"

namespace slicevis {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::uint64_t seed = 0;
  // Server-sent events keep-alive period.
  int keepalive_ms = 15000;
};

// Shared by the server and the command-line driver so both emit the same
// documents.
nlohmann::json DatasetSummaryJson(const DataFrame& frame,
                                  std::size_t dropped_rows);
nlohmann::json ModelSummaryJson(const ModelHandle& model);

class Server {
 public:
  explicit Server(ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int Start();
  // Binds and serves on the calling thread until Stop().
  void Listen();
  void Stop();
  int port() const;
  std::string url() const;

  // Registers a dataset directly (as POST /datasets would); returns its id.
  std::string AddDataset(DataFrame frame);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace slicevis

#endif  // SLICEVIS_SERVER_H_
