// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ronorm
{

using json = nlohmann::json;

/// Single-file container: one line of JSON header, then little-endian float64
/// blobs in the order listed under header["blobs"] (name, count).
struct BlobFile
{
  json header = json::object();
  std::vector<std::pair<std::string, std::vector<double>>> blobs;

  const std::vector<double> &blob(const std::string &name) const;
  void add(std::string name, std::span<const double> values);
};

void write_blob_file(const BlobFile &file, const std::filesystem::path &path);
BlobFile read_blob_file(const std::filesystem::path &path);

/// Raw little-endian float64 array, no header.
void write_f64(const std::filesystem::path &path, std::span<const double> values);
std::vector<double> read_f64(const std::filesystem::path &path, std::size_t expected_count);

json read_json(const std::filesystem::path &path);
void write_json(const json &j, const std::filesystem::path &path);

/// FNV-1a hash of the canonical (key-sorted, compact) dump.
std::string json_hash(const json &j);

}  // namespace ronorm
