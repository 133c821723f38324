// SPDX-License-Identifier: Apache-2.0

#include "gfnrom/gfn.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace gfnrom;

namespace {

MeshPtr line(std::vector<double> xs) { return share(Mesh(std::move(xs), 1)); }

WeightBundle scalar_bundle(MeshPtr mesh, std::vector<double> we, std::vector<double> wd,
                           std::vector<double> bd) {
  const auto n = static_cast<Eigen::Index>(we.size());
  WeightBundle wb;
  wb.w_enc = Eigen::Map<Matrix>(we.data(), 1, n);
  wb.b_enc = Vector::Constant(1, 0.25);
  wb.w_dec = Eigen::Map<Matrix>(wd.data(), n, 1);
  wb.b_dec = Eigen::Map<Vector>(bd.data(), n);
  wb.mesh = std::move(mesh);
  return wb;
}

void expect_bundle(const WeightBundle& wb, std::vector<double> we, std::vector<double> wd,
                   std::vector<double> bd) {
  ASSERT_EQ(wb.nodes(), we.size());
  for (std::size_t i = 0; i < we.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    EXPECT_NEAR(wb.w_enc(0, k), we[i], 1e-15) << "w_enc " << i;
    EXPECT_NEAR(wb.w_dec(k, 0), wd[i], 1e-15) << "w_dec " << i;
    EXPECT_NEAR(wb.b_dec(k), bd[i], 1e-15) << "b_dec " << i;
  }
  EXPECT_EQ(wb.b_enc(0), 0.25);
}

}  // namespace

TEST(Transform, ExpansiveExample) {
  const auto wb = scalar_bundle(line({0, 1}), {1, 2}, {10, 20}, {1, 2});
  const auto target = line({0, 0.4, 1});
  expect_bundle(gfn_transform(wb, target), {0.5, 0.5, 2}, {10, 10, 20}, {1, 1, 2});
  expect_bundle(expand(wb, target), {0.5, 0.5, 2}, {10, 10, 20}, {1, 1, 2});
  expect_bundle(oracle::direct_transform(wb, target), {0.5, 0.5, 2}, {10, 10, 20}, {1, 1, 2});
}

TEST(Transform, AgglomerativeExample) {
  const auto wb = scalar_bundle(line({0, 0.4, 1}), {1, 2, 4}, {10, 20, 40}, {1, 2, 4});
  const auto target = line({0, 1});
  expect_bundle(gfn_transform(wb, target), {3, 4}, {15, 40}, {1.5, 4});
  expect_bundle(agglomerate(wb, target), {3, 4}, {15, 40}, {1.5, 4});
}

TEST(Transform, SingleSourceExpansion) {
  const auto wb = scalar_bundle(line({0}), {7}, {3}, {5});
  expect_bundle(expand(wb, line({-1, 0, 2})), {7.0 / 3, 7.0 / 3, 7.0 / 3}, {3, 3, 3}, {5, 5, 5});
}

TEST(Transform, FourToTwoAgglomeration) {
  const auto wb = scalar_bundle(line({0, 0.1, 0.9, 1}), {1, 2, 3, 4}, {1, 2, 3, 4}, {0, 0, 0, 0});
  const auto out = agglomerate(wb, line({0, 1}));
  EXPECT_EQ(out.w_enc(0, 0), 3.0);
  EXPECT_EQ(out.w_enc(0, 1), 7.0);
}

TEST(Transform, NeitherCaseMatchesDirect) {
  const auto wb = scalar_bundle(line({0, 0.3, 1}), {1, 2, 4}, {10, 20, 40}, {1, 2, 4});
  const auto target = line({0.1, 1, 2});
  const auto a = gfn_transform_decomposed(wb, target);
  const auto b = oracle::direct_transform(wb, target);
  EXPECT_LE(oracle::bundle_diff(a, b), 1e-15);
}

TEST(Transform, IdentityOnSameMesh) {
  std::mt19937_64 rng(1);
  const auto mesh = share(oracle::random_mesh(rng, 30, 2));
  const auto wb = oracle::random_bundle(rng, mesh, 4);
  for (const auto& out : {gfn_transform(wb, mesh), expand(wb, mesh), agglomerate(wb, mesh),
                          gfn_transform_decomposed(wb, mesh)}) {
    EXPECT_EQ(out.w_enc, wb.w_enc);
    EXPECT_EQ(out.w_dec, wb.w_dec);
    EXPECT_EQ(out.b_dec, wb.b_dec);
    EXPECT_EQ(out.b_enc, wb.b_enc);
  }
}

TEST(Transform, Errors) {
  const auto wb = scalar_bundle(line({0, 1}), {1, 2}, {10, 20}, {1, 2});
  EXPECT_THROW(gfn_transform(wb, nullptr), InvalidArgument);
  EXPECT_THROW(gfn_transform(wb, share(Mesh())), InvalidArgument);
  EXPECT_THROW(gfn_transform(wb, share(Mesh::from_points({{0, 0}}))), InvalidArgument);
  try {
    expand(scalar_bundle(line({0, 0.4, 1}), {1, 2, 4}, {1, 2, 4}, {1, 2, 4}), line({0, 1}));
    FAIL() << "expected an error";
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "not expansive");
  }
  try {
    agglomerate(wb, line({0, 0.4, 1}));
    FAIL() << "expected an error";
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "not agglomerative");
  }
  WeightBundle bad = wb;
  bad.b_dec = Vector::Zero(3);
  EXPECT_THROW(gfn_transform(bad, line({0, 0.5})), InvalidArgument);
}

TEST(Transform, DecompositionMatchesDirectOnRandomPairs) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> nd(1, 100);
  for (int rep = 0; rep < 150; ++rep) {
    const std::size_t dim = 1 + rep % 2;
    const bool lattice = rep % 3 == 0;
    const auto o = share(lattice ? oracle::lattice_mesh(rng, nd(rng), dim, 12)
                                 : oracle::random_mesh(rng, nd(rng), dim));
    const auto n = share(lattice ? oracle::lattice_mesh(rng, nd(rng), dim, 12)
                                 : oracle::random_mesh(rng, nd(rng), dim));
    const auto wb = oracle::random_bundle(rng, o, 3);
    ASSERT_LE(oracle::bundle_diff(gfn_transform_decomposed(wb, n), oracle::direct_transform(wb, n)),
              1e-12);
  }
}

TEST(Transform, ForthAndBackRecoversWeights) {
  std::mt19937_64 rng(4);
  int checked = 0;
  for (int rep = 0; rep < 400 && checked < 100; ++rep) {
    const auto o = share(oracle::random_mesh(rng, 5 + rep % 30, 2));
    const auto n = share(oracle::random_mesh(rng, 20 + rep % 80, 2));
    if (!is_expansive(build_neighbor_map(*o, *n))) continue;
    ++checked;
    const auto wb = oracle::random_bundle(rng, o, 3);
    const auto back = gfn_transform(gfn_transform(wb, n), o);
    EXPECT_LE((back.w_enc - wb.w_enc).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((back.w_dec - wb.w_dec).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((back.b_dec - wb.b_dec).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_GE(checked, 20);
}

TEST(Transform, EncoderMassIsConserved) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const auto o = share(oracle::random_mesh(rng, 3 + rep % 50, 2));
    const auto n = share(oracle::random_mesh(rng, 3 + (rep * 7) % 50, 2));
    const auto wb = oracle::random_bundle(rng, o, 2);
    const auto out = gfn_transform(wb, n);
    EXPECT_LE((out.w_enc.rowwise().sum() - wb.w_enc.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Transform, ConstantDecoderStaysConstant) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const auto o = share(oracle::random_mesh(rng, 10 + rep, 2));
    const auto n = share(oracle::random_mesh(rng, 60 - rep, 2));
    auto wb = oracle::random_bundle(rng, o, 3);
    const Eigen::RowVectorXd row = wb.w_dec.row(0);
    wb.w_dec.rowwise() = row;
    wb.b_dec.setConstant(0.7);
    const auto out = gfn_transform(wb, n);
    for (Eigen::Index i = 0; i < out.w_dec.rows(); ++i) {
      EXPECT_LE((out.w_dec.row(i) - row).cwiseAbs().maxCoeff(), 1e-15);
      EXPECT_NEAR(out.b_dec(i), 0.7, 1e-15);
    }
  }
}

TEST(Transform, FastPathsMatchGeneralTransform) {
  std::mt19937_64 rng(13);
  int exp_checked = 0, agg_checked = 0;
  for (int rep = 0; rep < 600 && (exp_checked < 50 || agg_checked < 50); ++rep) {
    const auto a = share(oracle::random_mesh(rng, 4 + rep % 20, 2));
    const auto b = share(oracle::random_mesh(rng, 30 + rep % 60, 2));
    const auto nm = build_neighbor_map(*a, *b);
    if (is_expansive(nm)) {
      const auto wb = oracle::random_bundle(rng, a, 3);
      EXPECT_LE(oracle::bundle_diff(expand(wb, b), oracle::direct_transform(wb, b)), 1e-15);
      ++exp_checked;
    }
    if (is_agglomerative(build_neighbor_map(*b, *a))) {
      const auto wb = oracle::random_bundle(rng, b, 3);
      EXPECT_LE(oracle::bundle_diff(agglomerate(wb, a), oracle::direct_transform(wb, a)), 1e-14);
      ++agg_checked;
    }
  }
  EXPECT_GE(exp_checked, 20);
  EXPECT_GE(agg_checked, 20);
}

TEST(Transform, BothConditionsReduceToNearestCopy) {
  std::mt19937_64 rng(17);
  const auto o = share(oracle::random_mesh(rng, 40, 2));
  // Tiny perturbation keeps a one-to-one correspondence.
  std::vector<double> c(o->coords().begin(), o->coords().end());
  for (double& v : c) v += 1e-9;
  const auto n = share(Mesh(std::move(c), 2));
  ASSERT_TRUE(is_expansive(build_neighbor_map(*o, *n)));
  ASSERT_TRUE(is_agglomerative(build_neighbor_map(*o, *n)));
  const auto wb = oracle::random_bundle(rng, o, 3);
  const auto out = agglomerate(expand(wb, n), n);
  EXPECT_EQ(out.w_enc, wb.w_enc);
  EXPECT_EQ(out.w_dec, wb.w_dec);
  EXPECT_EQ(out.b_dec, wb.b_dec);
}

TEST(TransferPlan, MatchesExplicitTransfer) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 60; ++rep) {
    const auto o = share(oracle::random_mesh(rng, 5 + rep % 40, 2));
    const auto n = share(oracle::random_mesh(rng, 5 + (rep * 3) % 40, 2));
    const auto wb = oracle::random_bundle(rng, o, 3);
    const auto plan = TransferPlan::build(*o, *n);
    const auto out = gfn_transform(wb, n);
    const Matrix u = Matrix::NullaryExpr(static_cast<Eigen::Index>(n->size()), 2, [&] { return g(rng); });
    const Matrix h = Matrix::NullaryExpr(3, 2, [&] { return g(rng); });
    EXPECT_LE(oracle::rel_diff(wb.w_enc * plan.pull(u), out.w_enc * u), 1e-12);
    Matrix y = wb.w_dec * h;
    y.colwise() += wb.b_dec;
    Matrix y_new = out.w_dec * h;
    y_new.colwise() += out.b_dec;
    EXPECT_LE(oracle::rel_diff(plan.push(y), y_new), 1e-12);
  }
}

TEST(TransferPlan, AdjointIdentity) {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 50; ++rep) {
    const auto o = share(oracle::random_mesh(rng, 5 + rep, 2));
    const auto n = share(oracle::random_mesh(rng, 55 - rep, 2));
    const auto x = oracle::random_bundle(rng, o, 3);
    const auto y = oracle::random_bundle(rng, n, 3);
    const auto plan = TransferPlan::build(*o, *n);
    const auto tx = gfn_transform(x, n);
    const auto ay = plan.adjoint(y, o);
    const double lhs = (tx.w_enc.array() * y.w_enc.array()).sum() +
                       (tx.w_dec.array() * y.w_dec.array()).sum() + tx.b_dec.dot(y.b_dec);
    const double rhs = (x.w_enc.array() * ay.w_enc.array()).sum() +
                       (x.w_dec.array() * ay.w_dec.array()).sum() + x.b_dec.dot(ay.b_dec);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Bundle, SaveLoadRoundTrip) {
  std::mt19937_64 rng(31);
  const auto mesh = share(oracle::random_mesh(rng, 25, 2));
  const auto wb = oracle::random_bundle(rng, mesh, 4);
  const auto dir = std::filesystem::temp_directory_path() / "gfnrom_bundle_rt";
  std::filesystem::remove_all(dir);
  save_bundle(dir, wb);
  const auto back = load_bundle(dir);
  EXPECT_EQ(back.w_enc, wb.w_enc);
  EXPECT_EQ(back.b_enc, wb.b_enc);
  EXPECT_EQ(back.w_dec, wb.w_dec);
  EXPECT_EQ(back.b_dec, wb.b_dec);
  EXPECT_TRUE(back.mesh->same_nodes(*mesh));
  // Truncated blob.
  std::filesystem::resize_file(dir / "w_dec.bin", 16);
  EXPECT_THROW(load_bundle(dir), IoError);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_bundle(dir), IoError);
}
