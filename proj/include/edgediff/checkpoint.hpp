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

// Checkpoint = JSON manifest + sidecar binary of little-endian float64.
//
//   {"format": "edgediff-checkpoint", "version": 1, "binary": "<file>.bin",
//    "groups": {"raw": [{"name", "shape": [r, c], "dtype": "f64",
//                        "offset": <bytes>, "count": r*c}, ...],
//               "ema": [...], ...},
//    "meta": {...}}
//
// Tensors are stored row-major; offsets are absolute within the binary.

#ifndef EDGEDIFF_CHECKPOINT_HPP_
#define EDGEDIFF_CHECKPOINT_HPP_

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "edgediff/score_net.hpp"
#include "json.hpp"

namespace edgediff {

struct Checkpoint {
  /// Tensor groups in file order, e.g. {"raw", ...}, {"ema", ...}.
  std::vector<std::pair<std::string, ParamStore>> groups;
  nlohmann::json meta = nlohmann::json::object();

  const ParamStore* group(const std::string& name) const {
    for (const auto& [n, store] : groups)
      if (n == name) return &store;
    return nullptr;
  }
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return out;
  }
  return bits;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& manifest_path) {
  std::filesystem::path bin_path = manifest_path;
  bin_path.replace_extension(".bin");
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot write " + bin_path.string());

  nlohmann::json manifest;
  manifest["format"] = "edgediff-checkpoint";
  manifest["version"] = 1;
  manifest["binary"] = bin_path.filename().string();
  manifest["meta"] = ckpt.meta;
  nlohmann::json groups = nlohmann::json::object();
  std::vector<std::string> order;
  std::uint64_t offset = 0;
  for (const auto& [group_name, store] : ckpt.groups) {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < store.size(); ++i) {
      const Matrix& m = store.value(i);
      entries.push_back({{"name", store.name(i)},
                         {"shape", {m.rows(), m.cols()}},
                         {"dtype", "f64"},
                         {"offset", offset},
                         {"count", m.size()}});
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        std::uint64_t bits = 0;
        const double value = m.data()[k];
        std::memcpy(&bits, &value, sizeof bits);
        bits = detail::to_little_endian(bits);
        bin.write(reinterpret_cast<const char*>(&bits), sizeof bits);
      }
      offset += static_cast<std::uint64_t>(m.size()) * 8;
    }
    groups[group_name] = std::move(entries);
    order.push_back(group_name);
  }
  manifest["groups"] = std::move(groups);
  manifest["group_order"] = order;
  if (!bin) throw IoError("write failed for " + bin_path.string());

  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

/// Loads every group listed in the manifest. A manifest without an "ema"
/// group loads with a warning on `warnings`.
inline Checkpoint load_checkpoint(const std::filesystem::path& manifest_path, std::ostream* warnings = &std::cerr) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open checkpoint " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ParseError(manifest_path.string() + ": malformed manifest: " + err.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != "edgediff-checkpoint") {
    throw ParseError(manifest_path.string() + ": not an edgediff checkpoint manifest");
  }
  if (!manifest.contains("binary") || !manifest["binary"].is_string() || !manifest.contains("groups") ||
      !manifest["groups"].is_object()) {
    throw ParseError(manifest_path.string() + ": manifest lacks 'binary' or 'groups'");
  }
  const std::filesystem::path bin_path = manifest_path.parent_path() / manifest["binary"].get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint binary " + bin_path.string());
  bin.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(bin.tellg());

  Checkpoint ckpt;
  ckpt.meta = manifest.value("meta", nlohmann::json::object());
  std::vector<std::string> order;
  if (manifest.contains("group_order") && manifest["group_order"].is_array()) {
    order = manifest["group_order"].get<std::vector<std::string>>();
  } else {
    for (const auto& [name, _] : manifest["groups"].items()) order.push_back(name);
  }
  for (const std::string& group_name : order) {
    if (!manifest["groups"].contains(group_name)) throw ParseError("manifest: group order names missing group '" + group_name + "'");
    const nlohmann::json& entries = manifest["groups"][group_name];
    if (!entries.is_array()) throw ParseError("manifest: group '" + group_name + "' is not a list");
    ParamStore store;
    for (const nlohmann::json& entry : entries) {
      const std::string name = entry.value("name", std::string("<unnamed>"));
      const std::string where = "tensor '" + group_name + "/" + name + "'";
      try {
        if (entry.value("dtype", "") != "f64") throw ParseError(where + ": unsupported dtype");
        const auto shape = entry.at("shape").get<std::vector<long long>>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw ParseError(where + ": shape must be [rows, cols]");
        const auto count = static_cast<std::uint64_t>(shape[0] * shape[1]);
        if (entry.contains("count") && entry["count"].get<std::uint64_t>() != count) {
          throw ParseError(where + ": count disagrees with shape");
        }
        if (offset + count * 8 > file_size) {
          throw ParseError(where + ": binary truncated (needs bytes up to " + std::to_string(offset + count * 8) +
                           ", file has " + std::to_string(file_size) + ")");
        }
        Matrix m(shape[0], shape[1]);
        bin.seekg(static_cast<std::streamoff>(offset));
        for (std::uint64_t k = 0; k < count; ++k) {
          std::uint64_t bits = 0;
          bin.read(reinterpret_cast<char*>(&bits), sizeof bits);
          bits = detail::to_little_endian(bits);
          std::memcpy(m.data() + k, &bits, sizeof bits);
        }
        if (!bin) throw ParseError(where + ": read failed");
        store.add(name, std::move(m));
      } catch (const nlohmann::json::exception& err) {
        throw ParseError(where + ": corrupt manifest entry: " + err.what());
      }
    }
    ckpt.groups.emplace_back(group_name, std::move(store));
  }
  if (!ckpt.group("raw")) throw ParseError(manifest_path.string() + ": checkpoint has no 'raw' group");
  if (!ckpt.group("ema") && warnings) {
    *warnings << "warning: " << manifest_path.string() << " has no 'ema' group; using raw parameters only\n";
  }
  return ckpt;
}

}  // namespace edgediff

#endif  // EDGEDIFF_CHECKPOINT_HPP_
