// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "ronorm/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Geometry>
#include <Eigen/SparseCore>

#include "ronorm/hash.hpp"

namespace ronorm
{

namespace
{

constexpr double kMinTriangleArea = 1e-12;

// Reads whitespace separated tokens, skipping '#' comments to end of line.
class TokenReader
{
public:
  explicit TokenReader(std::istream &in) : in_(in) {}

  bool next(std::string &tok)
  {
    while (true)
    {
      if (line_stream_ >> tok)
      {
        return true;
      }
      std::string line;
      if (!std::getline(in_, line))
      {
        return false;
      }
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos)
      {
        line.resize(hash);
      }
      line_stream_ = std::istringstream(line);
    }
  }

  int line() const { return line_no_; }

private:
  std::istream &in_;
  std::istringstream line_stream_;
  int line_no_ = 0;
};

template <typename T>
T parse_number(TokenReader &reader, const char *what)
{
  std::string tok;
  if (!reader.next(tok))
  {
    throw MeshError(MeshErrorKind::Parse, std::string("unexpected end of mesh file while reading ") +
                                              what);
  }
  std::istringstream ss(tok);
  T value{};
  ss >> value;
  if (ss.fail() || !ss.eof())
  {
    throw MeshError(MeshErrorKind::Parse, "malformed " + std::string(what) + " '" + tok +
                                              "' on line " + std::to_string(reader.line()));
  }
  return value;
}

int find_root(std::vector<int> &parent, int i)
{
  while (parent[i] != i)
  {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

double TriMesh::triangle_area(int t) const
{
  const auto &tri = triangles[t];
  const Eigen::Vector3d e1 = vertices[tri[1]] - vertices[tri[0]];
  const Eigen::Vector3d e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

double TriMesh::total_area() const
{
  double area = 0.0;
  for (int t = 0; t < num_triangles(); ++t)
  {
    area += triangle_area(t);
  }
  return area;
}

void TriMesh::validate() const
{
  const int n = num_vertices();
  if (n == 0 || triangles.empty())
  {
    throw MeshError(MeshErrorKind::Parse, "mesh has no vertices or no triangles");
  }
  for (int t = 0; t < num_triangles(); ++t)
  {
    for (int idx : triangles[t])
    {
      if (idx < 0 || idx >= n)
      {
        throw MeshError(MeshErrorKind::IndexOutOfRange,
                        "triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(idx) + " of a " + std::to_string(n) +
                            "-vertex mesh");
      }
    }
  }
  for (int t = 0; t < num_triangles(); ++t)
  {
    if (!(triangle_area(t) >= kMinTriangleArea))
    {
      throw MeshError(MeshErrorKind::DegenerateTriangle,
                      "triangle " + std::to_string(t) + " is degenerate");
    }
  }
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<char> used(n, 0);
  for (const auto &tri : triangles)
  {
    for (int k = 0; k < 3; ++k)
    {
      used[tri[k]] = 1;
      const int a = find_root(parent, tri[k]);
      const int b = find_root(parent, tri[(k + 1) % 3]);
      parent[a] = b;
    }
  }
  const int root = find_root(parent, triangles.front()[0]);
  for (int i = 0; i < n; ++i)
  {
    if (!used[i] || find_root(parent, i) != root)
    {
      throw MeshError(MeshErrorKind::Disconnected,
                      "mesh is not a single connected component (vertex " + std::to_string(i) +
                          ")");
    }
  }
}

Eigen::SparseMatrix<double> SparseSymMatrix::to_sparse() const
{
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * upper.size());
  for (const auto &e : upper)
  {
    trips.emplace_back(e.row, e.col, e.value);
    if (e.row != e.col)
    {
      trips.emplace_back(e.col, e.row, e.value);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

Eigen::MatrixXd SparseSymMatrix::to_dense() const
{
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const auto &e : upper)
  {
    A(e.row, e.col) = e.value;
    A(e.col, e.row) = e.value;
  }
  return A;
}

Eigen::VectorXd SparseSymMatrix::multiply(const Eigen::VectorXd &x) const
{
  if (x.size() != n)
  {
    throw DimensionError("sparse multiply: vector length mismatch");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (const auto &e : upper)
  {
    y(e.row) += e.value * x(e.col);
    if (e.row != e.col)
    {
      y(e.col) += e.value * x(e.row);
    }
  }
  return y;
}

TriMesh parse_mesh(std::istream &in)
{
  TokenReader reader(in);
  const long nv = parse_number<long>(reader, "vertex count");
  const long nt = parse_number<long>(reader, "triangle count");
  const int dim = parse_number<int>(reader, "dimension");
  if (nv <= 0 || nt <= 0 || (dim != 2 && dim != 3))
  {
    throw MeshError(MeshErrorKind::Parse, "bad mesh header (need positive counts and dim 2 or 3)");
  }
  TriMesh mesh;
  mesh.dim = dim;
  mesh.vertices.resize(nv);
  for (long i = 0; i < nv; ++i)
  {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    for (int d = 0; d < dim; ++d)
    {
      p(d) = parse_number<double>(reader, "vertex coordinate");
    }
    mesh.vertices[i] = p;
  }
  mesh.triangles.resize(nt);
  for (long t = 0; t < nt; ++t)
  {
    for (int k = 0; k < 3; ++k)
    {
      mesh.triangles[t][k] = static_cast<int>(parse_number<long>(reader, "triangle index"));
    }
  }
  std::string extra;
  if (reader.next(extra))
  {
    throw MeshError(MeshErrorKind::Parse, "trailing data after last triangle: '" + extra + "'");
  }
  mesh.validate();
  return mesh;
}

TriMesh load_mesh(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw DataError("cannot open mesh file " + path.string());
  }
  return parse_mesh(in);
}

void save_mesh(const TriMesh &mesh, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw DataError("cannot write mesh file " + path.string());
  }
  out.precision(17);
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.dim << '\n';
  for (const auto &v : mesh.vertices)
  {
    for (int d = 0; d < mesh.dim; ++d)
    {
      out << (d ? " " : "") << v(d);
    }
    out << '\n';
  }
  for (const auto &t : mesh.triangles)
  {
    out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

MeshOperators assemble_operators(const TriMesh &mesh)
{
  mesh.validate();
  const int n = mesh.num_vertices();

  // Off-diagonal weights accumulated in triangle order; std::map keeps the
  // summation order and the output ordering deterministic.
  std::map<std::pair<int, int>, double> offdiag;
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);

  for (int t = 0; t < mesh.num_triangles(); ++t)
  {
    const auto &tri = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    for (int k = 0; k < 3; ++k)
    {
      mass(tri[k]) += area / 3.0;
    }
    for (int k = 0; k < 3; ++k)
    {
      // Angle at vertex tri[k] is opposite the edge (tri[k+1], tri[k+2]).
      const int i = tri[(k + 1) % 3];
      const int j = tri[(k + 2) % 3];
      const Eigen::Vector3d e1 = mesh.vertices[i] - mesh.vertices[tri[k]];
      const Eigen::Vector3d e2 = mesh.vertices[j] - mesh.vertices[tri[k]];
      const double cot = e1.dot(e2) / e1.cross(e2).norm();
      offdiag[{std::min(i, j), std::max(i, j)}] += -0.5 * cot;
    }
  }

  MeshOperators ops;
  ops.lumped_mass = mass;
  ops.stiffness.n = n;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (const auto &[key, w] : offdiag)
  {
    diag(key.first) -= w;
    diag(key.second) -= w;
  }
  // Merge diagonal entries into the (row, col)-sorted upper triangle.
  auto it = offdiag.begin();
  for (int r = 0; r < n; ++r)
  {
    ops.stiffness.upper.push_back({r, r, diag(r)});
    for (; it != offdiag.end() && it->first.first == r; ++it)
    {
      ops.stiffness.upper.push_back({r, it->first.second, it->second});
    }
  }
  return ops;
}

TriMesh refine_midpoint(const TriMesh &mesh)
{
  TriMesh fine;
  fine.dim = mesh.dim;
  fine.vertices = mesh.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    if (auto found = midpoint.find(key); found != midpoint.end())
    {
      return found->second;
    }
    const int idx = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    midpoint.emplace(key, idx);
    return idx;
  };
  for (const auto &t : mesh.triangles)
  {
    const int m01 = mid(t[0], t[1]);
    const int m12 = mid(t[1], t[2]);
    const int m20 = mid(t[2], t[0]);
    fine.triangles.push_back({t[0], m01, m20});
    fine.triangles.push_back({t[1], m12, m01});
    fine.triangles.push_back({t[2], m20, m12});
    fine.triangles.push_back({m01, m12, m20});
  }
  return fine;
}

std::uint64_t mesh_checksum(const TriMesh &mesh)
{
  Fnv1a h;
  h.update_value(static_cast<std::int64_t>(mesh.dim));
  for (const auto &v : mesh.vertices)
  {
    h.update_value(v(0));
    h.update_value(v(1));
    h.update_value(v(2));
  }
  for (const auto &t : mesh.triangles)
  {
    h.update_value(static_cast<std::int64_t>(t[0]));
    h.update_value(static_cast<std::int64_t>(t[1]));
    h.update_value(static_cast<std::int64_t>(t[2]));
  }
  return h.digest();
}

}  // namespace ronorm
