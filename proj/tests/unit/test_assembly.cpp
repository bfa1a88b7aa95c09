#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "thbheat/adaptivity/transfer.hpp"
#include "thbheat/assembly/assemble.hpp"
#include "thbheat/io/field_output.hpp"

using namespace thbheat;

namespace {

/// Coefficients reproducing the parametric coordinate u on a single-level space.
StateVector greville_x(const HierarchicalSpace &sp) {
  const auto &kv = sp.mesh().space(0).kv_x().knots();
  const int p = sp.degree();
  StateVector s = StateVector::constant(sp, 0.0);
  for (const auto &f : sp.active_functions()) {
    double g = 0.0;
    for (int k = 1; k <= p; ++k) g += kv[static_cast<std::size_t>(f.a + k)];
    s.coeffs(sp.dof(f)) = g / p;
  }
  return s;
}

HierarchicalSpace random_mesh(int p, int levels, int ops, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto sp = build_initial(TensorSpace::uniform(p, 2, 2), levels);
  for (int t = 0; t < ops; ++t) {
    std::vector<CellIndex> cand;
    for (const auto &c : sp.mesh().active_cells()) {
      if (c.level + 1 < levels) cand.push_back(c);
    }
    std::uniform_int_distribution<std::size_t> pick(0, cand.size() - 1);
    sp.subdivide(cand[pick(rng)]);
  }
  return sp;
}

} // namespace

TEST(Source, GaussianValues) {
  HeatSource src;
  src.P = 9e5;
  src.eta = 0.33;
  src.r_h = 0.1;
  src.path = CircularArc{{5.0, 5.0}, 2.5, 0.0, 0.5, 3.0};
  const auto c = path_position(src.path, 0.0);
  EXPECT_DOUBLE_EQ(source_value(src, 0.0, c), 2.97e5);
  EXPECT_NEAR(source_value(src, 0.0, {c[0] + 0.1, c[1]}), 2.97e5 * std::exp(-1.0), 1e-9);
  EXPECT_NEAR(source_value(src, 0.0, {c[0], c[1] - 0.1}), 2.97e5 * std::exp(-1.0), 1e-9);
  EXPECT_EQ(source_value(src, 7.0, c), 0.0); // path ended at t = 6
}

TEST(Source, CircularArcStaysOnCircle) {
  const CircularArc arc{{5.0, 5.0}, 2.5, std::numbers::pi, 0.628, std::numbers::pi};
  for (int k = 0; k <= 100; ++k) {
    const auto x = arc.position(arc.duration() * k / 100.0);
    EXPECT_NEAR(std::hypot(x[0] - 5.0, x[1] - 5.0), 2.5, 1e-12);
  }
  EXPECT_NEAR(arc.position(0.0)[0], 2.5, 1e-12);
  EXPECT_NEAR(arc.position(arc.duration())[0], 7.5, 1e-12);
}

TEST(Source, AlternatingTracksReverseAndOffset) {
  const AlternatingTracks tr{{1.0, 5.0}, 8.0, 0.05, 3, 8.0};
  const double seg = 1.0;       // 8 mm at 8 mm/s
  const double hop = 0.05 / 8.0; // hatch move
  EXPECT_NEAR(tr.position(0.5 * seg)[0], 5.0, 1e-12);
  EXPECT_NEAR(tr.position(seg)[0], 9.0, 1e-12);
  EXPECT_NEAR(tr.position(seg + hop)[1], 5.05, 1e-12);
  EXPECT_NEAR(tr.position(seg + hop + 0.25 * seg)[0], 7.0, 1e-12); // moving in -x
  EXPECT_NEAR(tr.duration(), 3 * seg + 2 * hop, 1e-12);
  const auto end = tr.position(tr.duration());
  EXPECT_NEAR(end[0], 9.0, 1e-12);
  EXPECT_NEAR(end[1], 5.1, 1e-12);
}

TEST(Assemble, TotalMassAndConstantKernel) {
  const auto sp = random_mesh(3, 5, 20, 3);
  const Geometry geom(10.0);
  const Material mat{0.5, 2.0, 3.0, 0.0};
  HeatSource src;
  const auto sys = assemble(sp, geom, mat, src, 0.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(sp.num_dofs());
  EXPECT_NEAR(one.dot(sys.M * one), 6.0 * 100.0, 1e-12 * 600.0);
  EXPECT_LE((sys.K * one).lpNorm<Eigen::Infinity>(), 1e-12);
  const Eigen::VectorXd f = assemble_load(*sys.cache, [](const Point &) { return 2.5; });
  EXPECT_NEAR(one.dot(f), 250.0, 1e-12 * 250.0);
  // Symmetry.
  EXPECT_LE((SparseMatrix(sys.M.transpose()) - sys.M).norm(), 1e-12 * sys.M.norm());
  EXPECT_LE((SparseMatrix(sys.K.transpose()) - sys.K).norm(), 1e-12 * sys.K.norm());
}

TEST(Assemble, MassMatrixPositiveDefinite) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto sp = random_mesh(2 + static_cast<int>(seed % 2), 5, 25, seed);
    ASSERT_LE(sp.num_dofs(), 2000);
    const auto sys = assemble(sp, Geometry(1.0), Material{}, HeatSource{}, 0.0);
    Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(sys.M)};
    EXPECT_EQ(llt.info(), Eigen::Success);
  }
}

TEST(Assemble, BilinearElementStiffness) {
  const auto sp = build_initial(TensorSpace::uniform(1, 1, 1), 1);
  const auto sys = assemble(sp, Geometry(1.0), Material{1.0, 1.0, 1.0, 0.0}, HeatSource{}, 0.0);
  // dof order (a, b): (0,0), (0,1), (1,0), (1,1)
  Eigen::Matrix4d expect;
  expect << 2.0 / 3, -1.0 / 6, -1.0 / 6, -1.0 / 3, //
      -1.0 / 6, 2.0 / 3, -1.0 / 3, -1.0 / 6,       //
      -1.0 / 6, -1.0 / 3, 2.0 / 3, -1.0 / 6,       //
      -1.0 / 3, -1.0 / 6, -1.0 / 6, 2.0 / 3;
  EXPECT_LE((Eigen::MatrixXd(sys.K) - expect).norm(), 1e-14);
  Eigen::Matrix4d mass;
  mass << 4, 2, 2, 1, 2, 4, 1, 2, 2, 1, 4, 2, 1, 2, 2, 4;
  EXPECT_LE((Eigen::MatrixXd(sys.M) - mass / 36.0).norm(), 1e-14);
}

TEST(Assemble, GenerationIsRecorded) {
  auto sp = build_initial(TensorSpace::uniform(2, 2, 2), 3);
  const auto sys = assemble(sp, Geometry(1.0), Material{}, HeatSource{}, 0.0);
  EXPECT_EQ(sys.generation, sp.generation());
  EXPECT_EQ(sys.cache->generation(), sp.generation());
}

TEST(SampleField, ConstantAndLinearFields) {
  auto sp = build_initial(TensorSpace::uniform(3, 2, 2), 4);
  const Geometry geom(10.0);
  const auto c = sample_field(sp, StateVector::constant(sp, 3.25), geom, 11);
  for (double v : c.values) EXPECT_NEAR(v, 3.25, 1e-13);

  auto lin = greville_x(sp);
  lin.coeffs *= geom.side_length;
  const auto s = sample_field(sp, lin, geom, 11);
  for (int j = 0; j < 11; ++j) {
    for (int i = 0; i < 11; ++i) EXPECT_NEAR(s.values[static_cast<std::size_t>(j * 11 + i)], i * 1.0, 1e-12);
  }
  // Unchanged by refinement transfer.
  auto fine = sp;
  fine.subdivide({0, 0, 1});
  fine.subdivide({1, 1, 2});
  const auto moved = transfer_refine(sp, fine, lin);
  const auto s2 = sample_field(fine, moved, geom, 11);
  for (std::size_t k = 0; k < s.values.size(); ++k) EXPECT_NEAR(s2.values[k], s.values[k], 1e-12);

  EXPECT_THROW(sample_field(fine, lin, geom, 11), StalenessError);
}

TEST(Energy, StiffnessEnergyInvariantUnderTransfer) {
  auto sp = build_initial(TensorSpace::uniform(2, 4, 4), 4);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateVector th = StateVector::constant(sp, 0.0);
  for (auto &v : th.coeffs) v = u(rng);
  const auto k0 = assemble(sp, Geometry(2.0), Material{}, HeatSource{}, 0.0);
  const double e0 = th.coeffs.dot(k0.K * th.coeffs);
  auto fine = sp;
  fine.subdivide({0, 1, 1});
  fine.subdivide({0, 2, 1});
  fine.subdivide({1, 3, 3});
  const auto moved = transfer_refine(sp, fine, th);
  const auto k1 = assemble(fine, Geometry(2.0), Material{}, HeatSource{}, 0.0);
  EXPECT_NEAR(moved.coeffs.dot(k1.K * moved.coeffs), e0, 1e-11 * std::abs(e0));
}

TEST(FieldOutput, VtkAndCsvLayout) {
  SampledField f{3, 2.0, {0, 1, 2, 3, 4, 5, 6, 7, 8}};
  std::ostringstream vtk;
  write_vtk(vtk, f);
  const std::string s = vtk.str();
  EXPECT_NE(s.find("DATASET STRUCTURED_POINTS\n"), std::string::npos);
  EXPECT_NE(s.find("DIMENSIONS 3 3 1\n"), std::string::npos);
  EXPECT_NE(s.find("SPACING 1 1 1\n"), std::string::npos);
  EXPECT_NE(s.find("POINT_DATA 9\nSCALARS temperature double 1\nLOOKUP_TABLE default\n0\n1\n"), std::string::npos);
  std::ostringstream csv;
  write_field_csv(csv, f);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,value");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,0");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0,1");
  for (int k = 0; k < 7; ++k) std::getline(in, line);
  EXPECT_EQ(line, "2,2,8");
}
