// SPDX-License-Identifier: Apache-2.0

#include "gfnrom/mesh.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace gfnrom;

namespace {

Mesh line(std::vector<double> xs) { return Mesh(std::move(xs), 1); }

std::vector<double> pt(std::initializer_list<double> v) { return v; }

}  // namespace

TEST(Mesh, RejectsDuplicatesExactly) {
  EXPECT_THROW(line({0.0, 0.5, 0.0}), InvalidArgument);
  EXPECT_NO_THROW(line({0.0, 0.5, 1e-300}));
  EXPECT_THROW(Mesh::from_points({{0, 1}, {0}}), InvalidArgument);
  EXPECT_THROW(Mesh(std::vector<double>{1, 2, 3}, 2), InvalidArgument);
}

TEST(Mesh, NearestExamples) {
  const Mesh m = line({0.0, 1.0});
  EXPECT_EQ(nearest_neighbor(m, pt({0.4})), 0u);
  EXPECT_EQ(nearest_neighbor(m, pt({0.5})), 0u);
  const Mesh t = Mesh::from_points({{0, 0}, {1, 0}, {0, 1}});
  EXPECT_EQ(nearest_neighbor(t, pt({0.9, 0.2})), 1u);
}

TEST(Mesh, NearestErrors) {
  const Mesh empty;
  EXPECT_THROW(nearest_neighbor(empty, pt({0.0})), InvalidArgument);
  try {
    nearest_neighbor(empty, pt({0.0}));
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "empty mesh");
  }
  EXPECT_THROW(nearest_neighbor(line({0.0, 1.0}), pt({0.0, 1.0})), InvalidArgument);
}

TEST(Mesh, KdTreeMatchesExhaustiveScan) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (std::size_t dim = 1; dim <= 3; ++dim) {
    for (int rep = 0; rep < 3; ++rep) {
      std::uniform_int_distribution<std::size_t> nd(1, 200);
      const Mesh m = oracle::random_mesh(rng, nd(rng), dim);
      const Mesh lat = oracle::lattice_mesh(rng, 60, dim, 6);
      for (int q = 0; q < 1000; ++q) {
        std::vector<double> p(dim);
        for (double& v : p) v = u(rng);
        ASSERT_EQ(m.nearest(p), oracle::nearest(m, p));
        // Lattice queries hit exact ties.
        std::vector<double> lp(dim);
        for (double& v : lp) v = std::round(u(rng) * 12.0) / 12.0;
        ASSERT_EQ(lat.nearest(lp), oracle::nearest(lat, lp));
      }
    }
  }
}

TEST(NeighborMap, Examples) {
  auto nm = build_neighbor_map(line({0, 1}), line({0, 0.4, 1}));
  EXPECT_EQ(nm.fwd, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(nm.bwd, (std::vector<std::size_t>{0, 0, 1}));
  nm = build_neighbor_map(line({0, 1}), line({0, 1}));
  EXPECT_EQ(nm.fwd, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(nm.bwd, (std::vector<std::size_t>{0, 1}));
  nm = build_neighbor_map(line({0, 0.4, 1}), line({0, 1}));
  EXPECT_EQ(nm.fwd, (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(nm.bwd, (std::vector<std::size_t>{0, 2}));
}

TEST(NeighborMap, Errors) {
  EXPECT_THROW(build_neighbor_map(line({0, 1}), Mesh::from_points({{0, 0}})), InvalidArgument);
  EXPECT_THROW(build_neighbor_map(Mesh(), line({0})), InvalidArgument);
}

TEST(Classify, Examples) {
  auto k = classify_transform(build_neighbor_map(line({0, 1}), line({0, 0.4, 1})));
  EXPECT_TRUE(k.expansive);
  EXPECT_FALSE(k.agglomerative);
  k = classify_transform(build_neighbor_map(line({0, 0.4, 1}), line({0, 1})));
  EXPECT_FALSE(k.expansive);
  EXPECT_TRUE(k.agglomerative);
  k = classify_transform(build_neighbor_map(line({0, 0.4, 1}), line({0, 0.4, 1})));
  EXPECT_TRUE(k.expansive);
  EXPECT_TRUE(k.agglomerative);
  k = classify_transform(build_neighbor_map(line({0, 0.3, 1}), line({0.1, 1, 2})));
  EXPECT_FALSE(k.expansive);
  EXPECT_FALSE(k.agglomerative);
}

TEST(Classify, SubsetsAreExpansiveOrAgglomerative) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const Mesh big = oracle::random_mesh(rng, 80, 2);
    std::vector<double> sub;
    for (std::size_t i = 0; i < big.size(); i += 3)
      sub.insert(sub.end(), big.node(i).begin(), big.node(i).end());
    const Mesh small(std::move(sub), 2);
    EXPECT_TRUE(is_expansive(build_neighbor_map(small, big)));
    EXPECT_TRUE(is_agglomerative(build_neighbor_map(big, small)));
  }
}

TEST(MasterMesh, Examples) {
  EXPECT_TRUE(master_mesh_union(line({0, 1}), line({0, 0.4, 1})).same_nodes(line({0, 1, 0.4})));
  EXPECT_TRUE(master_mesh_union(line({0, 0.4, 1}), line({0, 1})).same_nodes(line({0, 0.4, 1})));
  EXPECT_TRUE(master_mesh_union(line({0, 0.4, 1}), line({0, 0.4, 1})).same_nodes(line({0, 0.4, 1})));
}

TEST(MasterMesh, Properties) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t dim = 1 + rep % 3;
    const Mesh o = rep % 2 ? oracle::random_mesh(rng, 5 + rep % 40, dim)
                           : oracle::lattice_mesh(rng, 5 + rep % 40, dim, 5);
    const Mesh n = rep % 2 ? oracle::random_mesh(rng, 3 + rep % 57, dim)
                           : oracle::lattice_mesh(rng, 3 + rep % 57, dim, 5);
    const auto nm = build_neighbor_map(o, n);
    const Mesh master = master_mesh_union(o, n, nm);
    // Originals first, in order.
    ASSERT_GE(master.size(), o.size());
    for (std::size_t i = 0; i < o.size(); ++i)
      ASSERT_TRUE(std::equal(o.node(i).begin(), o.node(i).end(), master.node(i).begin()));
    if (is_agglomerative(nm)) {
      EXPECT_EQ(master.size(), o.size());
    }
    EXPECT_TRUE(is_expansive(build_neighbor_map(o, master)));
    // Every new-mesh node is hit by a forward arrow from the master mesh.
    const auto to_new = build_neighbor_map(master, n);
    std::vector<char> hit(n.size(), 0);
    for (std::size_t f : to_new.fwd) hit[f] = 1;
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 0), 0);
  }
}

TEST(MasterMesh, ToNewMeshNeedNotBeAgglomerative) {
  // 0.5 is added; it then becomes the nearest master node of 0.3.
  const Mesh o = line({0});
  const Mesh n = line({0.3, 0.5});
  const Mesh master = master_mesh_union(o, n);
  EXPECT_TRUE(master.same_nodes(line({0, 0.5})));
  EXPECT_FALSE(is_agglomerative(build_neighbor_map(master, n)));
}

TEST(Mesh, CsvRoundTrip) {
  std::mt19937_64 rng(9);
  const Mesh m = oracle::random_mesh(rng, 50, 3);
  const auto path = std::filesystem::temp_directory_path() / "gfnrom_mesh_roundtrip.csv";
  m.write_csv(path);
  EXPECT_TRUE(Mesh::read_csv(path).same_nodes(m));
  std::filesystem::remove(path);
  EXPECT_THROW(Mesh::read_csv("/nonexistent/mesh.csv"), IoError);
}
