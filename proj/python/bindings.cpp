// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ronorm/experiment.hpp"
#include "ronorm/hash.hpp"

namespace py = pybind11;
using namespace ronorm;

namespace
{

using Array4 = py::array_t<double, py::array::c_style | py::array::forcecast>;

SnapshotTensor to_tensor(const Array4 &a, double dt)
{
  if (a.ndim() != 4)
  {
    throw DimensionError("expected an array of shape (N, n_x, n_t, channels)");
  }
  SnapshotTensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                   static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)), dt);
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

Array4 from_tensor(const SnapshotTensor &t)
{
  Array4 a({t.samples(), t.nx(), t.nt(), t.channels()});
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

py::dict report_dict(const EvalReport &r)
{
  return py::module_::import("json").attr("loads")(to_json(r).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Reduced-order neural operators on triangle meshes";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericsError>(m, "NumericsError", base.ptr());

  py::enum_<Axis>(m, "Axis").value("space", Axis::Space).value("time", Axis::Time);

  py::class_<TriMesh>(m, "TriMesh")
      .def_property_readonly("num_vertices", &TriMesh::num_vertices)
      .def_property_readonly("num_triangles", &TriMesh::num_triangles)
      .def_property_readonly("total_area", &TriMesh::total_area)
      .def_property_readonly("vertices",
                             [](const TriMesh &t)
                             {
                               Eigen::MatrixXd v(t.num_vertices(), 3);
                               for (int i = 0; i < t.num_vertices(); ++i)
                               {
                                 v.row(i) = t.vertices[i].transpose();
                               }
                               return v;
                             })
      .def_property_readonly("triangles",
                             [](const TriMesh &t)
                             {
                               Eigen::MatrixXi f(t.num_triangles(), 3);
                               for (int i = 0; i < t.num_triangles(); ++i)
                               {
                                 f.row(i) << t.triangles[i][0], t.triangles[i][1], t.triangles[i][2];
                               }
                               return f;
                             })
      .def_property_readonly("checksum", [](const TriMesh &t) { return to_hex(mesh_checksum(t)); });
  m.def("load_mesh", &load_mesh, py::arg("path"));
  m.def("refine_midpoint", &refine_midpoint, py::arg("mesh"));

  py::class_<MeshOperators>(m, "MeshOperators")
      .def_readonly("lumped_mass", &MeshOperators::lumped_mass)
      .def("stiffness_dense", [](const MeshOperators &o) { return o.stiffness.to_dense(); })
      .def("stiffness_multiply", [](const MeshOperators &o, const Eigen::VectorXd &x)
           { return o.stiffness.multiply(x); });
  m.def("assemble_operators", &assemble_operators, py::arg("mesh"));

  py::class_<EigenBasis>(m, "EigenBasis")
      .def_readonly("vectors", &EigenBasis::vectors)
      .def_readonly("values", &EigenBasis::values)
      .def_readonly("weights", &EigenBasis::weights)
      .def_property_readonly("kind", [](const EigenBasis &b) { return to_string(b.kind); })
      .def_property_readonly("size", &EigenBasis::size)
      .def_property_readonly("num_points", &EigenBasis::num_points)
      .def("id", &EigenBasis::id)
      .def("truncated", &EigenBasis::truncated, py::arg("k"))
      .def("gram", &EigenBasis::gram);
  m.def("compute_lbo_basis",
        [](const MeshOperators &ops, int k) { return compute_lbo_basis(ops.stiffness, ops.lumped_mass, k); },
        py::arg("ops"), py::arg("k"));
  m.def("fourier_time_basis", &fourier_time_basis, py::arg("n_t"), py::arg("k"), py::arg("period") = 1.0);
  m.def("project", &project, py::arg("f"), py::arg("basis"));
  m.def("reconstruct", &reconstruct, py::arg("coefficients"), py::arg("basis"));
  m.def("save_basis", &save_basis, py::arg("basis"), py::arg("path"));
  m.def("load_basis", &load_basis, py::arg("path"));

  m.def("compute_pod_basis",
        [](const Array4 &a, Axis axis, int k) { return compute_pod_basis(to_tensor(a, 1.0), axis, k); },
        py::arg("snapshots"), py::arg("axis"), py::arg("k"));
  m.def("energy_truncation",
        [](const Eigen::VectorXd &v, double threshold) { return energy_truncation(v, threshold); },
        py::arg("values"), py::arg("threshold"));
  m.def(
      "encode",
      [](const Array4 &a, const EigenBasis &basis, Axis axis)
      {
        const WeightField w = encode_unequal(to_tensor(a, 1.0), basis, axis);
        py::array_t<double> out({w.n_samples, w.n_pts, w.width});
        std::copy(w.data.begin(), w.data.end(), out.mutable_data());
        return out;
      },
      py::arg("snapshots"), py::arg("basis"), py::arg("axis"),
      "Weights of shape (N, n_points, d * channels), channel-major.");
  m.def(
      "decode",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast> &w, const EigenBasis &basis,
         Axis axis)
      {
        if (w.ndim() != 3)
        {
          throw DimensionError("expected weights of shape (N, n_points, d * channels)");
        }
        WeightField f;
        f.n_samples = static_cast<int>(w.shape(0));
        f.n_pts = static_cast<int>(w.shape(1));
        f.width = static_cast<int>(w.shape(2));
        f.reduced_axis = axis;
        f.basis_ref = basis.id();
        f.data.assign(w.data(), w.data() + w.size());
        return from_tensor(decode_unequal(f, basis));
      },
      py::arg("weights"), py::arg("basis"), py::arg("axis"));

  m.def(
      "e_l2", [](const Array4 &p, const Array4 &t) { return e_l2(to_tensor(p, 1.0), to_tensor(t, 1.0)); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "mme", [](const Array4 &p, const Array4 &t) { return mme(to_tensor(p, 1.0), to_tensor(t, 1.0)); },
      py::arg("pred"), py::arg("truth"));

  m.def(
      "sample_grf",
      [](const EigenBasis &basis, double alpha, double tau, std::uint64_t seed, double amplitude,
         bool zero_mean, int n_modes)
      {
        GrfSpec g;
        g.alpha = alpha;
        g.tau = tau;
        g.seed = seed;
        g.amplitude = amplitude;
        g.zero_mean = zero_mean;
        g.n_modes = n_modes;
        return sample_grf(basis, g);
      },
      py::arg("basis"), py::arg("alpha") = 3.0, py::arg("tau") = 3.0, py::arg("seed") = 0,
      py::arg("amplitude") = 1.0, py::arg("zero_mean") = false, py::arg("n_modes") = 0);
  m.def(
      "solve_heat",
      [](const MeshOperators &ops, const Eigen::VectorXd &initial, double dt, int n_t, double diffusivity,
         std::optional<Eigen::MatrixXd> source)
      { return solve_heat(ops, initial, source.value_or(Eigen::MatrixXd()), PdeRun{dt, n_t, diffusivity}); },
      py::arg("ops"), py::arg("initial"), py::arg("dt"), py::arg("n_t"), py::arg("diffusivity") = 1.0,
      py::arg("source") = py::none());
  m.def(
      "solve_wave",
      [](const MeshOperators &ops, int node, const std::vector<double> &signal, double dt, double c2)
      { return solve_wave(ops, node, signal, PdeRun{dt, static_cast<int>(signal.size()), c2}); },
      py::arg("ops"), py::arg("node"), py::arg("signal"), py::arg("dt"), py::arg("c2") = 0.1);

  m.def(
      "gen_data",
      [](const std::filesystem::path &config, const std::filesystem::path &out)
      { cmd_gen_data(load_experiment_config(config), out); },
      py::arg("config"), py::arg("out"));
  m.def(
      "train",
      [](const std::filesystem::path &config, const std::filesystem::path &out, std::optional<std::uint64_t> seed)
      {
        ExperimentConfig c = load_experiment_config(config);
        if (seed)
        {
          apply_seed(c, *seed);
        }
        return report_dict(cmd_train(c, out).aggregate);
      },
      py::arg("config"), py::arg("out"), py::arg("seed") = py::none(),
      "Trains, writes the run artifacts and returns the aggregate report.");
  m.def(
      "evaluate",
      [](const std::filesystem::path &config, const std::filesystem::path &run, const std::filesystem::path &out)
      { return report_dict(cmd_eval(load_experiment_config(config), run, out)); },
      py::arg("config"), py::arg("run"), py::arg("out"));
  m.def(
      "svd_report",
      [](const std::filesystem::path &config, const std::filesystem::path &out)
      {
        const SvdDecayReport r = cmd_svd_report(load_experiment_config(config), out);
        py::dict d;
        d["separate"] = r.separate;
        d["overall"] = r.overall;
        d["k99_separate"] = r.k99_separate;
        d["k99_overall"] = r.k99_overall;
        return d;
      },
      py::arg("config"), py::arg("out"));
}
