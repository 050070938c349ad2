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

#include "slicevis_tools/cli.h"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "slicevis/error.h"
#include "slicevis/frame.h"
#include "slicevis/metric.h"
#include "slicevis/model.h"
#include "slicevis/protocol.h"
#include "slicevis/server.h"
#include "slicevis/session.h"
#include "slicevis/tour.h"
#include "slicevis_tools/simulate.h"

namespace slicevis::tools {
namespace {

using nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct DataArgs {
  std::string data;
  std::string schema;

  void Add(CLI::App* cmd) {
    cmd->add_option("--data", data, "CSV file with a header row")->required();
    cmd->add_option("--schema", schema,
                    "file of name=kind lines overriding inferred column kinds");
  }
  IngestResult Load() const {
    SchemaOverride overrides;
    if (!schema.empty()) overrides = ParseSchemaOverride(ReadFile(schema));
    return IngestCsvFile(data, overrides);
  }
};

struct ModelArgs {
  std::vector<std::string> specs;
  std::string response;
  std::vector<std::string> predictors;

  void Add(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--model", specs,
                                "model spec, e.g. linear, knn:k=5, "
                                "external:url=http://host:port (repeatable)");
    if (required) opt->required();
    cmd->add_option("--response", response, "response variable");
    cmd->add_option("--predictors", predictors, "model inputs (default: all)")
        ->delimiter(',');
  }
  std::optional<std::string> Response() const {
    if (response.empty()) return std::nullopt;
    return response;
  }
  std::vector<ModelHandle> Fit(const DataFrame& frame) const {
    std::vector<std::string> inputs = predictors;
    if (inputs.empty()) {
      for (const auto& name : frame.ColumnNames()) {
        if (name != response) inputs.push_back(name);
      }
    }
    std::vector<ModelHandle> models;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const ModelSpec spec = ModelSpec::Parse(specs[i]);
      const std::string id = "m" + std::to_string(i + 1);
      if (spec.type == ModelSpec::Type::kExternal) {
        std::vector<std::string> levels;
        if (Response() && !frame.column(response).is_numeric()) {
          levels = frame.column(response).levels;
        }
        models.push_back(
            ConnectExternal(spec, SchemaOf(frame, inputs), levels, id));
      } else {
        models.push_back(FitBuiltin(spec, frame, Response(), inputs, id));
      }
    }
    return models;
  }
};

double ParseSigma(const std::string& text) {
  if (text == "inf" || text == "max") return kShowAll;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("sigma must be a number or 'inf'");
}

class Output {
 public:
  Output(std::ostream& out, const std::string& path) : out_(out), path_(path) {}

  void Write(const std::string& text) const {
    if (path_.empty()) {
      out_ << text;
      return;
    }
    std::ofstream file(path_, std::ios::binary);
    if (!file) throw DataError("cannot write '" + path_ + "'");
    file << text;
  }
  void Write(const json& j, bool pretty) const {
    Write((pretty ? j.dump(2) : j.dump()) + "\n");
  }

 private:
  std::ostream& out_;
  const std::string& path_;
};

std::string FormatCell(double visible, double similarity) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.1f (%.1f)", visible, similarity);
  return buffer;
}

std::string PadRight(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"slicevis: conditional visualization of fitted models"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file supplying option defaults");
  std::string out_path;
  bool pretty = false;
  app.add_option("--out", out_path, "write the result here instead of stdout");
  app.add_flag("--pretty", pretty, "indent JSON output");
  std::function<void()> action;
  const Output output(out, out_path);

  // ingest
  DataArgs ingest_data;
  auto* ingest = app.add_subcommand("ingest", "validate a CSV file and summarize it");
  ingest_data.Add(ingest);
  ingest->callback([&] {
    action = [&] {
      const IngestResult r = ingest_data.Load();
      output.Write(DatasetSummaryJson(r.frame, r.dropped_rows), pretty);
    };
  });

  // fit
  DataArgs fit_data;
  ModelArgs fit_models;
  auto* fit = app.add_subcommand("fit", "fit built-in models and describe them");
  fit_data.Add(fit);
  fit_models.Add(fit, true);
  fit->callback([&] {
    action = [&] {
      const IngestResult r = fit_data.Load();
      json models = json::array();
      for (const auto& m : fit_models.Fit(r.frame)) {
        json summary = ModelSummaryJson(m);
        summary["response"] =
            fit_models.Response() ? json(fit_models.response) : json();
        models.push_back(std::move(summary));
      }
      output.Write(json{{"schema", "v1"}, {"models", std::move(models)}}, pretty);
    };
  });

  // tour
  DataArgs tour_data;
  ModelArgs tour_models;
  std::vector<std::string> tour_kinds{"random", "kmeans", "kmed"};
  std::size_t tour_length = 30;
  std::uint64_t tour_seed = 0;
  std::size_t tour_seeds = 1;
  std::vector<std::string> tour_hidden;
  std::string tour_var;
  int tour_steps = 1;
  std::string tour_sigma = "1";
  std::string tour_distance = "maxnorm";
  std::string tour_label;
  std::string tour_json;
  std::size_t tour_cap = 4000;
  auto* tour = app.add_subcommand(
      "tour", "build tours and print their slice occupancy");
  tour_data.Add(tour);
  tour_models.Add(tour, false);
  tour->add_option("--kind", tour_kinds, "tour kinds, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  tour->add_option("--length", tour_length, "tour length")->capture_default_str();
  tour->add_option("--seed", tour_seed, "first seed")->capture_default_str();
  tour->add_option("--seeds", tour_seeds, "number of seeds to average over")
      ->capture_default_str();
  tour->add_option("--hidden", tour_hidden, "frozen predictors")->delimiter(',');
  tour->add_option("--var", tour_var, "variable for alongVar tours");
  tour->add_option("--steps", tour_steps, "interpolation steps per segment")
      ->capture_default_str();
  tour->add_option("--sigma", tour_sigma, "slice size, or inf")->capture_default_str();
  tour->add_option("--distance", tour_distance, "maxnorm, euclidean or gower")
      ->capture_default_str();
  tour->add_option("--label", tour_label, "row label of the occupancy table");
  tour->add_option("--json", tour_json, "also write the tours as JSON here");
  tour->add_option("--cap", tour_cap, "kmed distance-matrix rows")
      ->capture_default_str();
  tour->callback([&] {
    action = [&] {
      if (tour_seeds == 0) throw DataError("--seeds must be at least 1");
      const IngestResult r = tour_data.Load();
      const DataFrame& frame = r.frame;
      const auto models = tour_models.Fit(frame);
      Roles roles;
      roles.hidden = tour_hidden;
      roles.response = tour_models.Response();
      for (const auto& name : frame.ColumnNames()) {
        if (name != tour_models.response &&
            std::find(tour_hidden.begin(), tour_hidden.end(), name) ==
                tour_hidden.end()) {
          roles.conditioning.push_back(name);
        }
      }
      const std::size_t medoid = Medoid(frame, roles.Predictors(), {4000, tour_seed});
      const SectionPoint base = PointFromRow(frame, roles, medoid);
      SimilarityConfig config;
      config.sigma = ParseSigma(tour_sigma);
      config.distance = ParseDistanceKind(tour_distance);

      json tours = json::array();
      json summary = json::object();
      std::vector<std::string> cells;
      std::vector<std::string> visited;
      for (const auto& kind_name : tour_kinds) {
        TourRequest request;
        request.kind = ParseTourKind(kind_name);
        request.length = tour_length;
        request.cap = tour_cap;
        request.steps_per_segment = tour_steps;
        if (!tour_var.empty()) request.var = tour_var;
        double visible = 0.0, similarity = 0.0, fraction = 0.0;
        for (std::size_t s = 0; s < tour_seeds; ++s) {
          request.seed = tour_seed + s;
          Tour t = BuildTour(frame, roles, base, models, request);
          t.diagnostics = ComputeOccupancy(frame, roles, t.points, config);
          visible += t.diagnostics->mean_visible;
          similarity += t.diagnostics->mean_total_similarity;
          fraction += t.diagnostics->fraction_visited;
          tours.push_back(TourToJson(t, frame));
        }
        const double k = static_cast<double>(tour_seeds);
        summary[kind_name] = {{"meanVisible", visible / k},
                              {"meanTotalSimilarity", similarity / k},
                              {"fractionVisited", fraction / k},
                              {"seeds", tour_seeds}};
        cells.push_back(FormatCell(visible / k, similarity / k));
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * fraction / k);
        visited.push_back(pct);
      }
      const std::string label = tour_label.empty() ? "data" : tour_label;
      const std::size_t first = std::max<std::size_t>(label.size() + 2, 10);
      std::ostringstream table;
      table << PadRight("", first);
      for (const auto& k : tour_kinds) table << PadRight(k, 14);
      table << "\n" << PadRight(label, first);
      for (const auto& c : cells) table << PadRight(c, 14);
      table << "\n" << PadRight("visited", first);
      for (const auto& v : visited) table << PadRight(v, 14);
      table << "\n";
      out << table.str();
      if (!tour_json.empty() || !out_path.empty()) {
        const json doc = {{"schema", "v1"},
                          {"tours", std::move(tours)},
                          {"occupancy", std::move(summary)},
                          {"similarity",
                           {{"distance", DistanceName(config.distance)},
                            {"sigma", config.show_all() ? json("inf")
                                                        : json(config.sigma)},
                            {"fadeBins", config.fade_bins}}}};
        const std::string& path = tour_json.empty() ? out_path : tour_json;
        Output(out, path).Write(doc, pretty);
      }
    };
  });

  // section
  DataArgs section_data;
  ModelArgs section_models;
  std::vector<std::string> section_vars;
  std::vector<std::string> section_hidden;
  std::string section_point;
  std::string section_sigma = "1";
  std::string section_distance = "maxnorm";
  int section_fade = 10;
  std::vector<int> section_resolution;
  int section_bars = 10;
  std::string section_color;
  std::uint64_t section_seed = 0;
  std::string section_mutations;
  bool section_conditions = false;
  std::string section_visited;
  auto* section = app.add_subcommand(
      "section", "emit a section payload (optionally after replaying mutations)");
  section_data.Add(section);
  section_models.Add(section, false);
  section->add_option("--section", section_vars, "one or two section variables")
      ->delimiter(',')
      ->required();
  section->add_option("--hidden", section_hidden, "frozen predictors")
      ->delimiter(',');
  section->add_option("--point", section_point,
                      "section point JSON, or @file (default: medoid)");
  section->add_option("--sigma", section_sigma, "slice size, or inf")
      ->capture_default_str();
  section->add_option("--distance", section_distance,
                      "maxnorm, euclidean or gower")
      ->capture_default_str();
  section->add_option("--fade-bins", section_fade, "fade levels")
      ->capture_default_str();
  section->add_option("--resolution", section_resolution, "grid points per axis")
      ->delimiter(',');
  section->add_option("--bar-bins", section_bars, "bins of bar-array plots")
      ->capture_default_str();
  section->add_option("--color", section_color, "colour variable");
  section->add_option("--seed", section_seed, "session seed")->capture_default_str();
  section->add_option("--mutations", section_mutations,
                      "JSON file: a list of mutations, or a log {\"mutations\":[...]}");
  section->add_flag("--conditions", section_conditions,
                    "emit the condition-selector payload instead");
  section->add_option("--visited", section_visited,
                      "write the visited-points CSV here");
  section->callback([&] {
    action = [&] {
      IngestResult r = section_data.Load();
      auto frame = std::make_shared<const DataFrame>(std::move(r.frame));
      auto models = section_models.Fit(*frame);
      Roles roles = Roles::Complete(*frame, section_vars, section_hidden,
                                    section_models.Response());
      roles.Validate(*frame);
      SessionOptions options;
      options.seed = section_seed;
      options.similarity.sigma = ParseSigma(section_sigma);
      options.similarity.distance = ParseDistanceKind(section_distance);
      options.similarity.fade_bins = section_fade;
      options.section.resolution = section_resolution;
      options.section.bar_bins = section_bars;
      if (!section_color.empty()) options.color_var = section_color;
      if (!section_point.empty()) {
        const std::string text = section_point.front() == '@'
                                     ? ReadFile(section_point.substr(1))
                                     : section_point;
        options.initial_point = PointFromJson(json::parse(text), *frame, roles);
      }
      Session session("cli", frame, std::move(models), std::move(roles),
                      std::move(options));
      if (!section_mutations.empty()) {
        json log = json::parse(ReadFile(section_mutations));
        if (log.is_object() && log.contains("mutations")) log = log["mutations"];
        if (!log.is_array()) throw DataError("mutations must be a JSON list");
        for (const auto& m : log) session.Apply(m);
      }
      if (!section_visited.empty()) {
        Output(out, section_visited).Write(session.VisitedCsv());
      }
      output.Write(section_conditions ? session.ConditionsJson()
                                      : session.SectionJson(),
                   pretty);
    };
  });

  // serve
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::uint64_t serve_seed = 0;
  std::vector<std::string> serve_data;
  auto* serve = app.add_subcommand("serve", "run the HTTP session server");
  serve->add_option("--host", serve_host)->capture_default_str();
  serve->add_option("--port", serve_port)->capture_default_str();
  serve->add_option("--seed", serve_seed)->capture_default_str();
  serve->add_option("--data", serve_data, "CSV files to preload (repeatable)");
  serve->callback([&] {
    action = [&] {
      Server server({serve_host, serve_port, serve_seed});
      for (const auto& path : serve_data) {
        const std::string id = server.AddDataset(IngestCsvFile(path).frame);
        err << "dataset " << id << " <- " << path << "\n";
      }
      err << "listening on http://" << serve_host << ":" << serve_port << "\n";
      server.Listen();
    };
  });

  // serve-model
  DataArgs model_data;
  ModelArgs model_args;
  std::string model_host = "127.0.0.1";
  int model_port = 8090;
  auto* serve_model = app.add_subcommand(
      "serve-model", "serve one fitted model over the predict protocol");
  model_data.Add(serve_model);
  model_args.Add(serve_model, true);
  serve_model->add_option("--host", model_host)->capture_default_str();
  serve_model->add_option("--port", model_port)->capture_default_str();
  serve_model->callback([&] {
    action = [&] {
      const IngestResult r = model_data.Load();
      auto models = model_args.Fit(r.frame);
      if (models.size() != 1) throw DataError("serve-model takes one --model");
      ReferenceModelServer server(models.front());
      err << "serving " << models.front().source << " on http://" << model_host
          << ":" << model_port << "/predict\n";
      server.Listen(model_host, model_port);
    };
  });

  // simulate
  std::string sim_kind = "normal";
  SimOptions sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  simulate->add_option("--kind", sim_kind, "normal, uniform or mixture")
      ->capture_default_str();
  simulate->add_option("--n", sim.n, "rows")->capture_default_str();
  simulate->add_option("--p", sim.p, "columns")->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--components", sim.components, "mixture components")
      ->capture_default_str();
  simulate->add_option("--separation", sim.separation,
                       "mixture centre spread in component sds")
      ->capture_default_str();
  simulate->callback([&] {
    action = [&] {
      sim.kind = ParseSimKind(sim_kind);
      output.Write(WriteCsv(Simulate(sim)));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    if (dynamic_cast<const CLI::RequiredError*>(&e) != nullptr ||
        e.get_name() == "ExtrasError") {
      err << app.help();
    }
    return kExitUsage;
  }
  try {
    if (action) action();
    return kExitOk;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitModel;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const json::exception& e) {
    err << "error: invalid JSON: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace slicevis::tools
