// Copyright 2026 The edgediff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line-delimited JSON graph records:
//   {"n": int, "u": int, "v": int, "x": [[u] * n], "e": [[[v] * n] * n]}
// Doubles are written with 17 significant digits so records round-trip
// bit-exactly.

#ifndef EDGEDIFF_GRAPH_IO_HPP_
#define EDGEDIFF_GRAPH_IO_HPP_

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "edgediff/graph.hpp"
#include "json.hpp"

namespace edgediff {

namespace detail {

inline void append_double(std::string& out, double value) {
  if (value == 0.0 && std::signbit(value)) {
    out += "-0.0";  // "-0" would parse back as integer zero
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  out += buf;
}

}  // namespace detail

inline std::string serialize(const Graph& g) {
  std::string out;
  out.reserve(32 + 24 * (g.n() * g.u() + g.n() * g.n() * g.v()));
  out += "{\"n\":" + std::to_string(g.n()) + ",\"u\":" + std::to_string(g.u()) + ",\"v\":" + std::to_string(g.v()) +
         ",\"x\":[";
  for (std::size_t i = 0; i < g.n(); ++i) {
    if (i) out += ',';
    out += '[';
    for (std::size_t c = 0; c < g.u(); ++c) {
      if (c) out += ',';
      detail::append_double(out, g.x()(i, c));
    }
    out += ']';
  }
  out += "],\"e\":[";
  for (std::size_t i = 0; i < g.n(); ++i) {
    if (i) out += ',';
    out += '[';
    for (std::size_t j = 0; j < g.n(); ++j) {
      if (j) out += ',';
      out += '[';
      for (std::size_t k = 0; k < g.v(); ++k) {
        if (k) out += ',';
        detail::append_double(out, g.edge(i, j, k));
      }
      out += ']';
    }
    out += ']';
  }
  out += "]}";
  return out;
}

/// Parses one record. `context` prefixes error messages (e.g. "train.jsonl:12").
inline Graph deserialize(std::string_view record, const std::string& context = "record") {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(record);
  } catch (const json::parse_error& err) {
    throw ParseError(context + ": malformed JSON: " + err.what());
  }
  auto field = [&](const char* name) -> const json& {
    if (!doc.is_object() || !doc.contains(name)) throw ParseError(context + ": missing field '" + name + "'");
    return doc.at(name);
  };
  auto count = [&](const char* name) -> std::size_t {
    const json& f = field(name);
    if (!f.is_number_integer() || f.get<long long>() < 0) {
      throw ParseError(context + ": field '" + name + "' must be a non-negative integer");
    }
    return f.get<std::size_t>();
  };
  const std::size_t n = count("n");
  const std::size_t u = count("u");
  const std::size_t v = count("v");
  if (n == 0) throw ParseError(context + ": field 'n' must be positive");
  auto number = [&](const json& j, const std::string& where) -> double {
    if (!j.is_number()) throw ParseError(context + ": " + where + " is not a number");
    return j.get<double>();
  };

  const json& xs = field("x");
  if (!xs.is_array() || xs.size() != n) {
    throw ParseError(context + ": field 'x' has " + std::to_string(xs.is_array() ? xs.size() : 0) +
                     " rows, expected n = " + std::to_string(n));
  }
  Matrix x(n, u);
  for (std::size_t i = 0; i < n; ++i) {
    const json& row = xs[i];
    if (!row.is_array() || row.size() != u) {
      throw ParseError(context + ": x[" + std::to_string(i) + "] must have u = " + std::to_string(u) + " entries");
    }
    for (std::size_t c = 0; c < u; ++c) x(i, c) = number(row[c], "x[" + std::to_string(i) + "][" + std::to_string(c) + "]");
  }

  const json& es = field("e");
  if (!es.is_array() || es.size() != n) throw ParseError(context + ": field 'e' must have n = " + std::to_string(n) + " rows");
  Matrix e(n * n, v);
  for (std::size_t i = 0; i < n; ++i) {
    const json& row = es[i];
    if (!row.is_array() || row.size() != n) {
      throw ParseError(context + ": e[" + std::to_string(i) + "] must have n = " + std::to_string(n) + " entries");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const json& cell = row[j];
      if (!cell.is_array() || cell.size() != v) {
        throw ParseError(context + ": e[" + std::to_string(i) + "][" + std::to_string(j) +
                         "] must have v = " + std::to_string(v) + " entries");
      }
      for (std::size_t k = 0; k < v; ++k) {
        e(i * n + j, k) = number(cell[k], "e[" + std::to_string(i) + "][" + std::to_string(j) + "][" +
                                               std::to_string(k) + "]");
      }
    }
  }
  if (!x.allFinite() || !e.allFinite()) throw ParseError(context + ": non-finite attribute");
  return Graph(std::move(x), std::move(e));
}

inline void write_jsonl(std::ostream& out, std::span<const Graph> graphs) {
  for (const Graph& g : graphs) out << serialize(g) << '\n';
}

inline Dataset read_jsonl(std::istream& in, const std::string& name = "input") {
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(deserialize(line, name + ":" + std::to_string(line_no)));
  }
  return out;
}

inline Dataset read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_jsonl(in, path.filename().string());
}

inline void write_jsonl_file(const std::filesystem::path& path, std::span<const Graph> graphs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_jsonl(out, graphs);
  if (!out) throw IoError("write failed for " + path.string());
}

/// A dataset directory: train.jsonl, test.jsonl, meta.json.
struct DatasetDir {
  Dataset train;
  Dataset test;
  nlohmann::json meta;
};

inline void write_dataset_dir(const std::filesystem::path& dir, const DatasetDir& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  write_jsonl_file(dir / "train.jsonl", data.train);
  write_jsonl_file(dir / "test.jsonl", data.test);
  std::ofstream meta(dir / "meta.json", std::ios::binary);
  if (!meta) throw IoError("cannot write " + (dir / "meta.json").string());
  meta << data.meta.dump(2) << '\n';
}

inline DatasetDir read_dataset_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  DatasetDir data;
  data.train = read_jsonl_file(dir / "train.jsonl");
  data.test = read_jsonl_file(dir / "test.jsonl");
  std::ifstream meta(dir / "meta.json");
  if (meta) {
    try {
      data.meta = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::parse_error& err) {
      throw ParseError("meta.json: " + std::string(err.what()));
    }
  }
  return data;
}

}  // namespace edgediff

#endif  // EDGEDIFF_GRAPH_IO_HPP_
