// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ronorm/error.hpp"

namespace ronorm
{

enum class MeshErrorKind
{
  Parse,
  IndexOutOfRange,
  DegenerateTriangle,
  Disconnected,
};

class MeshError : public DataError
{
public:
  MeshError(MeshErrorKind kind, const std::string &what) : DataError(what), kind_(kind) {}
  MeshErrorKind kind() const noexcept { return kind_; }

private:
  MeshErrorKind kind_;
};

/// Triangulated 2D domain or surface in 3D. 2D vertices are stored with z = 0.
struct TriMesh
{
  int dim = 2;
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  double total_area() const;

  /// Throws MeshError when any invariant (index range, non-degenerate area,
  /// single connected component covering every vertex) fails.
  void validate() const;
};

/// Symmetric sparse matrix stored as its upper triangle (row <= col), one entry
/// per position, sorted by (row, col).
struct SparseSymMatrix
{
  struct Entry
  {
    int row;
    int col;
    double value;
  };

  int n = 0;
  std::vector<Entry> upper;

  /// Full (both triangles) compressed matrix.
  Eigen::SparseMatrix<double> to_sparse() const;
  Eigen::MatrixXd to_dense() const;
  Eigen::VectorXd multiply(const Eigen::VectorXd &x) const;
};

struct MeshOperators
{
  SparseSymMatrix stiffness;
  Eigen::VectorXd lumped_mass;
};

TriMesh parse_mesh(std::istream &in);
TriMesh load_mesh(const std::filesystem::path &path);
void save_mesh(const TriMesh &mesh, const std::filesystem::path &path);

/// Cotangent stiffness (zero-Neumann) and barycentric lumped mass.
MeshOperators assemble_operators(const TriMesh &mesh);

/// Splits every triangle into four through its edge midpoints.
TriMesh refine_midpoint(const TriMesh &mesh);

/// Stable 64-bit content hash of the mesh (recorded in basis and dataset headers).
std::uint64_t mesh_checksum(const TriMesh &mesh);

}  // namespace ronorm
