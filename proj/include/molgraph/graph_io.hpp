// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molgraph/graph.hpp"

namespace molgraph {

namespace io_detail {

using ordered_json = nlohmann::ordered_json;

inline std::int32_t as_int(const nlohmann::json& j, const char* what, std::size_t line) {
  if (!j.is_number_integer()) throw ParseError(std::string(what) + " must be an integer", line);
  auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) throw ParseError(std::string(what) + " out of range", line);
  return static_cast<std::int32_t>(v);
}

/// Parses one JSONL record. `allow_wildcards` admits -1 in feature rows
/// (pattern libraries use it as "any category").
inline Graph parse_record(const std::string& text, std::size_t line, bool allow_wildcards,
                          std::int32_t expected_arity) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!j.is_object()) throw ParseError("record must be a JSON object", line);
  for (const char* key : {"n", "edges", "x"})
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", line);
  const std::int32_t n = as_int(j["n"], "n", line);
  if (n < 1) throw ParseError("n must be at least 1", line);

  const auto& je = j["edges"];
  if (!je.is_array()) throw ParseError("edges must be an array", line);
  std::vector<Edge> edges;
  edges.reserve(je.size());
  for (const auto& e : je) {
    if (!e.is_array() || e.size() != 2) throw ParseError("each edge must be a pair", line);
    edges.emplace_back(as_int(e[0], "edge endpoint", line), as_int(e[1], "edge endpoint", line));
  }

  const auto& jx = j["x"];
  if (!jx.is_array() || jx.size() != static_cast<std::size_t>(n))
    throw ParseError("x must hold one feature row per node", line);
  std::int32_t arity = -1;
  std::vector<std::int32_t> feats;
  for (const auto& row : jx) {
    if (!row.is_array()) throw ParseError("feature rows must be arrays", line);
    if (arity < 0) arity = static_cast<std::int32_t>(row.size());
    if (static_cast<std::int32_t>(row.size()) != arity)
      throw ParseError("inconsistent feature arity within record", line);
    for (const auto& v : row) {
      auto c = as_int(v, "feature value", line);
      if (c < (allow_wildcards ? -1 : 0)) throw ParseError("negative feature value", line);
      feats.push_back(c);
    }
  }
  if (expected_arity >= 0 && arity != expected_arity)
    throw ParseError("inconsistent feature arity: record has " + std::to_string(arity) +
                         ", earlier records have " + std::to_string(expected_arity),
                     line);

  std::optional<double> y;
  if (j.contains("y") && !j["y"].is_null()) {
    if (!j["y"].is_number()) throw ParseError("y must be a number", line);
    y = j["y"].get<double>();
  }
  std::optional<std::string> group;
  if (j.contains("group") && !j["group"].is_null()) {
    if (!j["group"].is_string()) throw ParseError("group must be a string", line);
    group = j["group"].get<std::string>();
  }
  std::string id;
  if (j.contains("id")) {
    if (!j["id"].is_string()) throw ParseError("id must be a string", line);
    id = j["id"].get<std::string>();
  }
  try {
    return Graph(n, std::move(edges), std::move(feats), arity, y, std::move(group), std::move(id));
  } catch (const GraphError& e) {
    throw ParseError(e.what(), line);
  }
}

inline std::vector<Graph> read_jsonl(const std::filesystem::path& path, bool allow_wildcards) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::vector<Graph> graphs;
  std::string text;
  std::size_t line = 0;
  std::int32_t arity = -1;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    graphs.push_back(parse_record(text, line, allow_wildcards, arity));
    arity = graphs.back().arity();
  }
  return graphs;
}

inline ordered_json record_json(const Graph& g, Task task) {
  ordered_json j;
  j["id"] = g.id();
  j["n"] = g.node_count();
  ordered_json edges = ordered_json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  ordered_json x = ordered_json::array();
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto row = g.feature_row(v);
    x.push_back(std::vector<std::int32_t>(row.begin(), row.end()));
  }
  j["x"] = std::move(x);
  if (g.label()) {
    if (task == Task::kBinaryClassification)
      j["y"] = static_cast<std::int64_t>(*g.label());
    else
      j["y"] = *g.label();
  }
  if (g.group()) j["group"] = *g.group();
  return j;
}

}  // namespace io_detail

/// `<stem>.schema.json` next to `dataset.jsonl`.
inline std::filesystem::path schema_path_for(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p.replace_extension(".schema.json");
  return p;
}

inline nlohmann::ordered_json schema_json(const FeatureSchema& schema, Task task) {
  nlohmann::ordered_json j;
  j["task"] = to_string(task);
  auto cols = nlohmann::ordered_json::array();
  for (const auto& c : schema.columns) cols.push_back({{"name", c.name}, {"categories", c.categories}});
  j["columns"] = std::move(cols);
  return j;
}

inline FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema s;
  if (!j.contains("columns") || !j["columns"].is_array()) throw ParseError("schema lacks 'columns'", 0);
  for (const auto& c : j["columns"])
    s.columns.push_back({c.at("name").get<std::string>(), c.at("categories").get<std::int32_t>()});
  s.validate();
  return s;
}

/// Reads a JSONL dataset. The schema sidecar is used when present;
/// otherwise it is inferred from the observed values.
inline Dataset load_dataset(const std::filesystem::path& path, Task task) {
  Dataset d;
  d.task = task;
  d.graphs = io_detail::read_jsonl(path, false);
  auto sp = schema_path_for(path);
  if (std::filesystem::exists(sp)) {
    std::ifstream in(sp);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("schema " + sp.string() + ": " + e.what(), 0);
    }
    d.schema = schema_from_json(j);
  } else {
    d.schema = FeatureSchema::infer(d.graphs);
  }
  try {
    d.validate();
  } catch (const GraphError& e) {
    throw ParseError(e.what(), 0);
  }
  return d;
}

inline std::string dataset_to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& g : d.graphs) {
    out += io_detail::record_json(g, d.task).dump();
    out += '\n';
  }
  return out;
}

/// Writes `path` and its schema sidecar.
inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << dataset_to_jsonl(d);
  }
  std::ofstream out(schema_path_for(path), std::ios::binary);
  out << schema_json(d.schema, d.task).dump(2) << '\n';
}

/// Pattern library: same record schema, line order fixes the key index.
/// Feature value -1 matches any category.
inline std::vector<Graph> load_patterns(const std::filesystem::path& path) {
  return io_detail::read_jsonl(path, true);
}

inline void save_patterns(const std::vector<Graph>& patterns, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& g : patterns) out << io_detail::record_json(g, Task::kRegression).dump() << '\n';
}

}  // namespace molgraph
