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

// Predict wire protocol for external model servers.
//
// A request is a single JSON object terminated by a newline, sent as the
// body of HTTP POST /predict:
//
//   {"columns":["x1","g"],"kinds":["numeric","categorical"],
//    "rows":[[0.5,"a"],[1.5,"b"]]}
//
// The response is one JSON object (newline terminated):
//
//   {"kind":"numeric","predictions":[1.0,2.0]}
//   {"kind":"class","predictions":["a","b"],"levels":["a","b"]}
//   {"kind":"probMatrix","levels":["a","b"],"predictions":[[0.2,0.8],...]}
//   {"kind":"density","predictions":[0.1,0.3]}
//   {"kind":"clusterId","predictions":[0,2]}
//
// Categorical cells travel as level labels, numbers as JSON numbers.

#ifndef SLICEVIS_PROTOCOL_H_
#define SLICEVIS_PROTOCOL_H_

#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "slicevis/frame.h"
#include "slicevis/model.h"

namespace slicevis {

// Request body for `rows` (columns in schema order), newline terminated.
std::string EncodePredictRequest(const DataFrame& rows,
                                 const InputSchema& schema);

// Parses a request against the schema the serving model expects. Column
// order in the request may differ from the schema. Throws DataError on
// malformed input or unknown levels.
DataFrame DecodePredictRequest(std::string_view body,
                               const InputSchema& schema);

// Response body, newline terminated.
std::string EncodePredictResponse(const Predictions& predictions);

// Parses a response. Throws ProtocolError unless it is a JSON object of the
// `expected` kind with exactly `rows` predictions. Class labels are mapped
// onto `levels` when given.
Predictions DecodePredictResponse(std::string_view body,
                                  PredictionKind expected, std::size_t rows,
                                  const std::vector<std::string>& levels);

// Serves one ModelHandle on POST /predict (plus GET /health and GET /schema).
// Used as the bundled reference external model server.
class ReferenceModelServer {
 public:
  explicit ReferenceModelServer(ModelHandle model);
  ~ReferenceModelServer();
  ReferenceModelServer(const ReferenceModelServer&) = delete;
  ReferenceModelServer& operator=(const ReferenceModelServer&) = delete;

  // Binds (port 0 picks a free port), returns the bound port, and serves on a
  // background thread until Stop().
  int Start(const std::string& host = "127.0.0.1", int port = 0);
  // Binds and serves on the calling thread.
  void Listen(const std::string& host, int port);
  void Stop();
  int port() const { return port_; }
  std::string url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace slicevis

#endif  // SLICEVIS_PROTOCOL_H_
