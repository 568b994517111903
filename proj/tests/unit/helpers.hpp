// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Core>

#include "ronorm/mesh.hpp"
#include "ronorm/reduction.hpp"

namespace ronorm::testing
{

inline std::filesystem::path data_dir()
{
  return RONORM_DATA_DIR;
}

inline std::filesystem::path temp_dir(const std::string &name)
{
  auto p = std::filesystem::temp_directory_path() / ("ronorm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline TriMesh mesh_from_text(const std::string &text)
{
  std::istringstream in(text);
  return parse_mesh(in);
}

/// Structured nx x ny grid on [0, lx] x [0, ly], each cell split into two triangles.
inline TriMesh grid_mesh(int nx, int ny, double lx, double ly)
{
  TriMesh m;
  for (int j = 0; j < ny; ++j)
  {
    for (int i = 0; i < nx; ++i)
    {
      m.vertices.emplace_back(lx * i / (nx - 1), ly * j / (ny - 1), 0.0);
    }
  }
  for (int j = 0; j + 1 < ny; ++j)
  {
    for (int i = 0; i + 1 < nx; ++i)
    {
      const int a = j * nx + i;
      m.triangles.push_back({a, a + 1, a + nx + 1});
      m.triangles.push_back({a, a + nx + 1, a + nx});
    }
  }
  m.validate();
  return m;
}

inline SnapshotTensor random_tensor(int n, int nx, int nt, int c, std::uint64_t seed)
{
  SnapshotTensor t(n, nx, nt, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (auto &v : t.data())
  {
    v = normal(rng);
  }
  return t;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64 &rng)
{
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
  {
    for (Eigen::Index i = 0; i < rows; ++i)
    {
      m(i, j) = normal(rng);
    }
  }
  return m;
}

}  // namespace ronorm::testing
