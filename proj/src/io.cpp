// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/io.hpp"

#include <bit>
#include <fstream>

#include "ronorm/error.hpp"
#include "ronorm/hash.hpp"

namespace ronorm
{

static_assert(std::endian::native == std::endian::little,
              "blob files are written in host byte order, which must be little-endian");

const std::vector<double> &BlobFile::blob(const std::string &name) const
{
  for (const auto &[n, v] : blobs)
  {
    if (n == name)
    {
      return v;
    }
  }
  throw DataError("blob '" + name + "' not present in container");
}

void BlobFile::add(std::string name, std::span<const double> values)
{
  blobs.emplace_back(std::move(name), std::vector<double>(values.begin(), values.end()));
}

void write_blob_file(const BlobFile &file, const std::filesystem::path &path)
{
  json header = file.header;
  header["blobs"] = json::array();
  for (const auto &[name, values] : file.blobs)
  {
    header["blobs"].push_back({{"name", name}, {"count", values.size()}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  out << header.dump() << '\n';
  for (const auto &[name, values] : file.blobs)
  {
    out.write(reinterpret_cast<const char *>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!out)
  {
    throw DataError("write failed for " + path.string());
  }
}

BlobFile read_blob_file(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw DataError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line))
  {
    throw DataError("empty container " + path.string());
  }
  BlobFile file;
  try
  {
    file.header = json::parse(line);
  }
  catch (const json::exception &e)
  {
    throw DataError("bad container header in " + path.string() + ": " + e.what());
  }
  if (!file.header.contains("blobs") || !file.header["blobs"].is_array())
  {
    throw DataError("container header lacks a blob table: " + path.string());
  }
  for (const auto &b : file.header["blobs"])
  {
    const auto count = b.at("count").get<std::size_t>();
    std::vector<double> values(count);
    in.read(reinterpret_cast<char *>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
    {
      throw DataError("truncated blob '" + b.at("name").get<std::string>() + "' in " +
                      path.string());
    }
    file.blobs.emplace_back(b.at("name").get<std::string>(), std::move(values));
  }
  return file;
}

void write_f64(const std::filesystem::path &path, std::span<const double> values)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char *>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out)
  {
    throw DataError("write failed for " + path.string());
  }
}

std::vector<double> read_f64(const std::filesystem::path &path, std::size_t expected_count)
{
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in)
  {
    throw DataError("cannot open " + path.string());
  }
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected_count * sizeof(double))
  {
    throw DataError(path.string() + ": expected " + std::to_string(expected_count) +
                    " float64 values, file holds " + std::to_string(bytes) + " bytes");
  }
  in.seekg(0);
  std::vector<double> values(expected_count);
  in.read(reinterpret_cast<char *>(values.data()), static_cast<std::streamsize>(bytes));
  return values;
}

json read_json(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw DataError("cannot open " + path.string());
  }
  try
  {
    return json::parse(in);
  }
  catch (const json::exception &e)
  {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const json &j, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw DataError("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

std::string json_hash(const json &j)
{
  Fnv1a h;
  h.update(j.dump());
  return to_hex(h.digest());
}

}  // namespace ronorm
