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

#include "slicevis/protocol.h"

#include <algorithm>
#include <cmath>
#include <semaphore>

#include "httplib.h"
#include "slicevis/error.h"

namespace slicevis {
namespace {

using nlohmann::json;

json ParseLine(std::string_view body) {
  const auto newline = body.find('\n');
  const std::string_view line =
      newline == std::string_view::npos ? body : body.substr(0, newline);
  return json::parse(line.begin(), line.end());
}

// "http://host:port/prefix" -> ("http://host:port", "/prefix/predict").
std::pair<std::string, std::string> SplitEndpoint(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  if (slash == std::string::npos) return {url, "/predict"};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix + "/predict"};
}

class ExternalModel : public Model {
 public:
  ExternalModel(std::string endpoint, InputSchema schema, PredictionKind kind,
                std::vector<std::string> levels, int timeout_ms,
                int max_in_flight)
      : schema_(std::move(schema)),
        kind_(kind),
        levels_(std::move(levels)),
        timeout_ms_(timeout_ms),
        in_flight_(std::max(1, max_in_flight)) {
    std::tie(base_, path_) = SplitEndpoint(endpoint);
  }

  Predictions Predict(const DataFrame& rows) const override {
    const std::string body = EncodePredictRequest(rows, schema_);
    in_flight_.acquire();
    httplib::Result result = [&] {
      httplib::Client client(base_);
      const auto seconds = timeout_ms_ / 1000;
      const auto micros = (timeout_ms_ % 1000) * 1000;
      client.set_connection_timeout(seconds, micros);
      client.set_read_timeout(seconds, micros);
      client.set_write_timeout(seconds, micros);
      return client.Post(path_, body, "application/json");
    }();
    in_flight_.release();
    if (!result) {
      throw ProtocolError("model server " + base_ + " unreachable: " +
                          httplib::to_string(result.error()));
    }
    if (result->status != 200) {
      throw ProtocolError("model server " + base_ + " answered HTTP " +
                          std::to_string(result->status) + ": " + result->body);
    }
    return DecodePredictResponse(result->body, kind_, rows.num_rows(),
                                 levels_);
  }

 private:
  InputSchema schema_;
  PredictionKind kind_;
  std::vector<std::string> levels_;
  int timeout_ms_;
  std::string base_;
  std::string path_;
  mutable std::counting_semaphore<1024> in_flight_;
};

}  // namespace

std::string EncodePredictRequest(const DataFrame& rows,
                                 const InputSchema& schema) {
  json columns = json::array();
  json kinds = json::array();
  std::vector<const Column*> cols;
  for (const auto& field : schema) {
    columns.push_back(field.name);
    kinds.push_back(KindName(field.kind));
    cols.push_back(&rows.column(field.name));
  }
  json data = json::array();
  for (std::size_t r = 0; r < rows.num_rows(); ++r) {
    json row = json::array();
    for (const Column* col : cols) {
      if (col->is_numeric()) {
        row.push_back(col->values[r]);
      } else {
        row.push_back(col->label(r));
      }
    }
    data.push_back(std::move(row));
  }
  json request = {{"columns", std::move(columns)},
                  {"kinds", std::move(kinds)},
                  {"rows", std::move(data)}};
  return request.dump() + "\n";
}

DataFrame DecodePredictRequest(std::string_view body,
                               const InputSchema& schema) {
  json request;
  try {
    request = ParseLine(body);
  } catch (const json::exception& e) {
    throw DataError(std::string("request is not JSON: ") + e.what());
  }
  if (!request.is_object() || !request.contains("columns") ||
      !request.contains("rows") || !request["columns"].is_array() ||
      !request["rows"].is_array()) {
    throw DataError("request needs \"columns\" and \"rows\" arrays");
  }
  const json& names = request["columns"];
  std::vector<Column> columns;
  std::vector<std::size_t> position;
  for (const auto& field : schema) {
    std::size_t found = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i].is_string() && names[i].get<std::string>() == field.name) {
        found = i;
        break;
      }
    }
    if (found == names.size()) {
      throw DataError("request is missing column '" + field.name + "'");
    }
    if (request.contains("kinds")) {
      const json& kinds = request["kinds"];
      if (!kinds.is_array() || kinds.size() != names.size() ||
          !kinds[found].is_string() ||
          ParseColumnKind(kinds[found].get<std::string>()) != field.kind) {
        throw DataError("column '" + field.name + "' has the wrong kind");
      }
    }
    position.push_back(found);
    columns.push_back({field.name, field.kind, {}, field.levels});
  }
  for (const json& row : request["rows"]) {
    if (!row.is_array() || row.size() != names.size()) {
      throw DataError("request row has the wrong number of cells");
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const json& cell = row[position[c]];
      Column& col = columns[c];
      if (col.is_numeric()) {
        if (!cell.is_number()) {
          throw DataError("column '" + col.name + "' expects numbers");
        }
        col.values.push_back(cell.get<double>());
      } else {
        if (!cell.is_string()) {
          throw DataError("column '" + col.name + "' expects level labels");
        }
        const auto code = col.LevelCode(cell.get<std::string>());
        if (!code) {
          throw DataError("unknown level '" + cell.get<std::string>() +
                          "' for column '" + col.name + "'");
        }
        col.values.push_back(*code);
      }
    }
  }
  return DataFrame(std::move(columns));
}

std::string EncodePredictResponse(const Predictions& p) {
  json response;
  response["kind"] = PredictionKindName(p.kind);
  json predictions = json::array();
  switch (p.kind) {
    case PredictionKind::kNumeric:
    case PredictionKind::kDensity:
      for (const double v : p.values) predictions.push_back(v);
      break;
    case PredictionKind::kClass:
      for (const int l : p.labels) predictions.push_back(p.levels.at(l));
      response["levels"] = p.levels;
      break;
    case PredictionKind::kProbMatrix:
      for (std::size_t i = 0; i < p.size(); ++i) {
        const auto row = p.ProbabilityRow(i);
        predictions.push_back(std::vector<double>(row.begin(), row.end()));
      }
      response["levels"] = p.levels;
      break;
    case PredictionKind::kClusterId:
      for (const int l : p.labels) predictions.push_back(l);
      break;
  }
  response["predictions"] = std::move(predictions);
  return response.dump() + "\n";
}

Predictions DecodePredictResponse(std::string_view body,
                                  PredictionKind expected, std::size_t rows,
                                  const std::vector<std::string>& levels) {
  json response;
  try {
    response = ParseLine(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (!response.is_object() || !response.contains("kind") ||
      !response["kind"].is_string() || !response.contains("predictions") ||
      !response["predictions"].is_array()) {
    throw ProtocolError(
        "malformed response: needs \"kind\" and \"predictions\"");
  }
  PredictionKind kind;
  try {
    kind = ParsePredictionKind(response["kind"].get<std::string>());
  } catch (const ModelError&) {
    throw ProtocolError("malformed response: unknown kind '" +
                        response["kind"].get<std::string>() + "'");
  }
  if (kind != expected) {
    throw ProtocolError("response kind " + std::string(PredictionKindName(kind)) +
                        " does not match expected " +
                        std::string(PredictionKindName(expected)));
  }
  const json& preds = response["predictions"];
  if (preds.size() != rows) {
    throw ProtocolError("response has " + std::to_string(preds.size()) +
                        " predictions for " + std::to_string(rows) + " rows");
  }

  std::vector<std::string> response_levels;
  if (response.contains("levels")) {
    if (!response["levels"].is_array()) {
      throw ProtocolError("malformed response: \"levels\" is not an array");
    }
    for (const auto& l : response["levels"]) {
      if (!l.is_string()) throw ProtocolError("malformed response: bad level");
      response_levels.push_back(l.get<std::string>());
    }
  }

  Predictions out;
  out.kind = kind;
  switch (kind) {
    case PredictionKind::kNumeric:
    case PredictionKind::kDensity:
      for (const auto& v : preds) {
        if (!v.is_number()) {
          throw ProtocolError("malformed response: prediction is not a number");
        }
        out.values.push_back(v.get<double>());
      }
      break;
    case PredictionKind::kClass: {
      out.levels = levels.empty() ? response_levels : levels;
      for (const auto& v : preds) {
        if (!v.is_string()) {
          throw ProtocolError("malformed response: class label is not a string");
        }
        const auto it =
            std::find(out.levels.begin(), out.levels.end(), v.get<std::string>());
        if (it == out.levels.end()) {
          throw ProtocolError("response names unknown class '" +
                              v.get<std::string>() + "'");
        }
        out.labels.push_back(static_cast<int>(it - out.levels.begin()));
      }
      break;
    }
    case PredictionKind::kProbMatrix: {
      if (response_levels.empty()) {
        throw ProtocolError("malformed response: probMatrix needs \"levels\"");
      }
      if (!levels.empty() && levels != response_levels) {
        throw ProtocolError("response levels do not match the model's levels");
      }
      out.levels = response_levels;
      const std::size_t L = out.levels.size();
      for (const auto& row : preds) {
        if (!row.is_array() || row.size() != L) {
          throw ProtocolError("malformed response: probability row has " +
                              std::string(row.is_array()
                                              ? std::to_string(row.size())
                                              : "no") +
                              " entries, expected " + std::to_string(L));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          if (!row[j].is_number()) {
            throw ProtocolError("malformed response: probability is not a number");
          }
          const double p = row[j].get<double>();
          if (!(p >= 0.0)) {
            throw ProtocolError("malformed response: negative probability");
          }
          sum += p;
          out.probabilities.push_back(p);
        }
        if (std::abs(sum - 1.0) > 1e-9) {
          throw ProtocolError("malformed response: probabilities sum to " +
                              FormatNumber(sum));
        }
        const double* first = out.probabilities.data() + out.probabilities.size() - L;
        out.labels.push_back(
            static_cast<int>(std::max_element(first, first + L) - first));
      }
      break;
    }
    case PredictionKind::kClusterId:
      for (const auto& v : preds) {
        if (!v.is_number_integer()) {
          throw ProtocolError("malformed response: cluster id is not an integer");
        }
        out.labels.push_back(v.get<int>());
      }
      out.levels = levels.empty() ? response_levels : levels;
      break;
  }
  return out;
}

ModelHandle ConnectExternal(const ModelSpec& spec, InputSchema schema,
                            std::vector<std::string> response_levels,
                            std::string id) {
  if (spec.type != ModelSpec::Type::kExternal || spec.endpoint.empty()) {
    throw ModelError("external model needs an endpoint");
  }
  ModelHandle handle;
  handle.id = std::move(id);
  handle.kind = spec.output_set ? spec.output : PredictionKind::kNumeric;
  handle.schema = std::move(schema);
  handle.source = spec.endpoint;
  handle.impl = std::make_shared<ExternalModel>(
      spec.endpoint, handle.schema, handle.kind, std::move(response_levels),
      spec.timeout_ms, spec.max_in_flight);
  return handle;
}

struct ReferenceModelServer::Impl {
  ModelHandle model;
  httplib::Server server;
};

ReferenceModelServer::ReferenceModelServer(ModelHandle model)
    : impl_(std::make_unique<Impl>()) {
  impl_->model = std::move(model);
  Impl* impl = impl_.get();
  impl->server.Post("/predict", [impl](const httplib::Request& req,
                                       httplib::Response& res) {
    try {
      const DataFrame rows = DecodePredictRequest(req.body, impl->model.schema);
      res.set_content(EncodePredictResponse(impl->model.Predict(rows)),
                      "application/json");
    } catch (const DataError& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump() + "\n",
                      "application/json");
    } catch (const Error& e) {
      res.status = 422;
      res.set_content(json{{"error", e.what()}}.dump() + "\n",
                      "application/json");
    }
  });
  impl->server.Get("/health", [](const httplib::Request&,
                                 httplib::Response& res) {
    res.set_content("{\"status\":\"ok\"}\n", "application/json");
  });
  impl->server.Get("/schema", [impl](const httplib::Request&,
                                     httplib::Response& res) {
    json columns = json::array();
    for (const auto& f : impl->model.schema) {
      json c = {{"name", f.name}, {"kind", KindName(f.kind)}};
      if (f.kind == ColumnKind::kCategorical) c["levels"] = f.levels;
      columns.push_back(std::move(c));
    }
    res.set_content(json{{"id", impl->model.id},
                         {"kind", PredictionKindName(impl->model.kind)},
                         {"columns", std::move(columns)}}
                            .dump() +
                        "\n",
                    "application/json");
  });
}

ReferenceModelServer::~ReferenceModelServer() { Stop(); }

int ReferenceModelServer::Start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) {
    throw ProtocolError("cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void ReferenceModelServer::Listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!impl_->server.listen(host, port)) {
    throw ProtocolError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void ReferenceModelServer::Stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string ReferenceModelServer::url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace slicevis
