// SPDX-License-Identifier: Apache-2.0
//
// Synthetic parametric fields on [0,1]^2, jittered-grid meshes, farthest-point
// mesh hierarchies and snapshot datasets on disk.

#pragma once

#include "gfnrom/common.hpp"
#include "gfnrom/mesh.hpp"
#include "gfnrom/neural.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string_view>

namespace gfnrom {

enum class Family { Smooth, BoundaryLayer, Bump, Stress };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::Smooth:
      return "smooth";
    case Family::BoundaryLayer:
      return "boundary_layer";
    case Family::Bump:
      return "bump";
    case Family::Stress:
      return "stress";
  }
  return "smooth";
}

inline Family family_from_name(std::string_view s) {
  if (s == "smooth") return Family::Smooth;
  if (s == "boundary_layer") return Family::BoundaryLayer;
  if (s == "bump") return Family::Bump;
  if (s == "stress") return Family::Stress;
  throw InvalidArgument("unknown family '" + std::string(s) + "'");
}

struct ParamBox {
  std::vector<double> lo, hi;
  std::size_t size() const { return lo.size(); }
};

inline ParamBox param_box(Family f) {
  switch (f) {
    case Family::Smooth:
      return {{0.5, 0.5}, {2.0, 2.0}};
    case Family::BoundaryLayer:
      return {{1.0, 0.01}, {3.0, 0.1}};
    case Family::Bump:
      return {{0.2, 0.2}, {0.8, 0.8}};
    case Family::Stress:
      // amplitude, two wavenumbers, bump height, bump centre, bump width
      return {{0.5, 0.5, 0.5, 0.0, 0.2, 0.2, 0.05}, {1.5, 2.0, 2.0, 1.0, 0.8, 0.8, 0.2}};
  }
  return {};
}

inline constexpr double kBumpWidth = 0.05;

/// Upper bound on |grad u| over [0,1]^2 and the whole parameter box.
inline double lipschitz_bound(Family f) {
  const double pi = std::numbers::pi;
  switch (f) {
    case Family::Smooth:
      return pi * std::hypot(2.0, 2.0);
    case Family::BoundaryLayer:
      // |du/dx| <= 1/mu2, |du/dy| <= 4 mu1
      return std::hypot(1.0 / 0.01, 4.0 * 3.0);
    case Family::Bump:
      return std::exp(-0.5) / kBumpWidth;
    case Family::Stress:
      return 1.5 * pi * std::hypot(2.0, 2.0) + std::exp(-0.5) / 0.05;
  }
  return 0.0;
}

inline void check_in_box(Family f, std::span<const double> mu) {
  const ParamBox box = param_box(f);
  require(mu.size() == box.size(), std::string(family_name(f)) + " expects " +
                                       std::to_string(box.size()) + " parameters, got " +
                                       std::to_string(mu.size()));
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!(mu[i] >= box.lo[i] && mu[i] <= box.hi[i]))
      throw InvalidArgument("parameter " + std::to_string(i + 1) + " = " + io::exact(mu[i]) +
                            " outside [" + io::exact(box.lo[i]) + ", " + io::exact(box.hi[i]) +
                            "]");
}

inline double field_value(Family f, std::span<const double> mu, double x, double y) {
  const double pi = std::numbers::pi;
  switch (f) {
    case Family::Smooth:
      return std::sin(pi * mu[0] * x) * std::sin(pi * mu[1] * y);
    case Family::BoundaryLayer: {
      const double s = std::max(0.0, 4.0 * y * (1.0 - y));
      return 1.0 - std::exp(-x / mu[1]) * std::pow(s, mu[0]);
    }
    case Family::Bump: {
      const double r2 = (x - mu[0]) * (x - mu[0]) + (y - mu[1]) * (y - mu[1]);
      return std::exp(-r2 / (2.0 * kBumpWidth * kBumpWidth));
    }
    case Family::Stress: {
      const double r2 = (x - mu[4]) * (x - mu[4]) + (y - mu[5]) * (y - mu[5]);
      return mu[0] * std::sin(pi * mu[1] * x) * std::cos(pi * mu[2] * y) +
             mu[3] * std::exp(-r2 / (2.0 * mu[6] * mu[6]));
    }
  }
  return 0.0;
}

/// Closed-form field at every node of a 2-D mesh.
inline Vector analytic_field(Family f, std::span<const double> mu, const Mesh& mesh) {
  check_in_box(f, mu);
  require(mesh.dim() == 2, "analytic families live on 2-D meshes");
  Vector u(static_cast<Eigen::Index>(mesh.size()));
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto p = mesh.node(i);
    u(static_cast<Eigen::Index>(i)) = field_value(f, mu, p[0], p[1]);
  }
  return u;
}

inline Vector analytic_field(Family f, const Vector& mu, const Mesh& mesh) {
  return analytic_field(f, std::span<const double>(mu.data(), static_cast<std::size_t>(mu.size())),
                        mesh);
}

/// n x n grid on [0,1]^2 with every node moved by up to a quarter spacing,
/// clamped to the square. Row-major node order.
inline Mesh jittered_grid_mesh(std::size_t n_per_side, std::uint64_t seed, double jitter = 0.25) {
  require(n_per_side >= 2, "grid needs at least 2 nodes per side");
  require(jitter >= 0.0 && jitter < 0.5, "jitter must lie in [0, 0.5)");
  const double h = 1.0 / static_cast<double>(n_per_side - 1);
  Rng rng(seed);
  std::uniform_real_distribution<double> d(-jitter * h, jitter * h);
  std::vector<double> coords;
  coords.reserve(n_per_side * n_per_side * 2);
  for (std::size_t j = 0; j < n_per_side; ++j) {
    for (std::size_t i = 0; i < n_per_side; ++i) {
      const double dx = d(rng);
      const double dy = d(rng);
      coords.push_back(std::clamp(static_cast<double>(i) * h + dx, 0.0, 1.0));
      coords.push_back(std::clamp(static_cast<double>(j) * h + dy, 0.0, 1.0));
    }
  }
  return Mesh(std::move(coords), 2);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

/// Node indices in farthest-point order: the node nearest the centroid first,
/// then repeatedly the node farthest from those chosen. Ties go to the lowest index.
inline std::vector<std::size_t> farthest_point_order(const Mesh& mesh, std::size_t count) {
  require(!mesh.empty(), "empty mesh");
  count = std::min(count, mesh.size());
  std::vector<double> centroid(mesh.dim(), 0.0);
  for (std::size_t i = 0; i < mesh.size(); ++i)
    for (std::size_t a = 0; a < mesh.dim(); ++a) centroid[a] += mesh.node(i)[a];
  for (double& c : centroid) c /= static_cast<double>(mesh.size());

  std::size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double d = squared_distance(mesh.node(i), centroid);
    if (d < best) {
      best = d;
      first = i;
    }
  }
  std::vector<std::size_t> order{first};
  std::vector<double> dist(mesh.size(), std::numeric_limits<double>::infinity());
  std::vector<char> taken(mesh.size(), 0);
  taken[first] = 1;
  std::size_t last = first;
  while (order.size() < count) {
    std::size_t pick = mesh.size();
    double far = -1.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      if (taken[i]) continue;
      dist[i] = std::min(dist[i], squared_distance(mesh.node(i), mesh.node(last)));
      if (dist[i] > far) {
        far = dist[i];
        pick = i;
      }
    }
    taken[pick] = 1;
    order.push_back(pick);
    last = pick;
  }
  return order;
}

inline std::size_t subsample_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

inline Mesh mesh_subset(const Mesh& mesh, std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  std::vector<double> coords;
  coords.reserve(idx.size() * mesh.dim());
  for (std::size_t i : idx) coords.insert(coords.end(), mesh.node(i).begin(), mesh.node(i).end());
  return Mesh(std::move(coords), mesh.dim());
}

/// Farthest-point subsample keeping ceil(fraction * N) nodes in their original order.
inline Mesh subsample_mesh(const Mesh& mesh, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidArgument("fraction must lie in (0, 1], got " + io::exact(fraction));
  if (fraction == 1.0) return mesh;
  return mesh_subset(mesh, farthest_point_order(mesh, subsample_count(mesh.size(), fraction)));
}

struct Hierarchy {
  MeshPtr large, medium, small, tiny;

  std::vector<std::pair<std::string, MeshPtr>> levels() const {
    return {{"large", large}, {"medium", medium}, {"small", small}, {"tiny", tiny}};
  }
};

inline const std::vector<double>& default_fractions() {
  static const std::vector<double> f{1.0, 0.31, 0.105, 0.04};
  return f;
}

/// Four nested meshes built from prefixes of one farthest-point order.
inline Hierarchy make_hierarchy(const Mesh& mesh,
                                const std::vector<double>& fractions = default_fractions()) {
  require(fractions.size() == 4, "a hierarchy has four levels");
  require(mesh.size() >= 50, "hierarchy needs at least 50 nodes, got " +
                                 std::to_string(mesh.size()));
  for (std::size_t k = 0; k < 4; ++k) {
    if (!(fractions[k] > 0.0 && fractions[k] <= 1.0))
      throw InvalidArgument("fraction must lie in (0, 1], got " + io::exact(fractions[k]));
    if (k > 0) require(fractions[k] <= fractions[k - 1], "fractions must be nonincreasing");
  }
  std::vector<std::size_t> counts;
  for (double f : fractions) counts.push_back(subsample_count(mesh.size(), f));
  if (counts[3] < 2)
    throw InvalidArgument("tiny level would have " + std::to_string(counts[3]) + " node(s)");
  const auto order = farthest_point_order(mesh, counts[1]);
  auto level = [&](std::size_t k) {
    if (counts[k] >= mesh.size()) return share(mesh);
    return share(mesh_subset(mesh, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(counts[k])}));
  };
  return {level(0), level(1), level(2), level(3)};
}

/// Equispaced values per parameter; the first parameter varies slowest.
inline Matrix parameter_grid(const ParamBox& box, const std::vector<std::size_t>& counts) {
  require(counts.size() == box.size(), "grid needs one count per parameter");
  std::size_t total = 1;
  for (std::size_t c : counts) {
    require(c >= 1, "grid counts must be positive");
    total *= c;
  }
  Matrix mus(static_cast<Eigen::Index>(box.size()), static_cast<Eigen::Index>(total));
  for (std::size_t s = 0; s < total; ++s) {
    std::size_t rest = s;
    for (std::size_t k = box.size(); k-- > 0;) {
      const std::size_t i = rest % counts[k];
      rest /= counts[k];
      const double t = counts[k] == 1 ? 0.5
                                      : static_cast<double>(i) / static_cast<double>(counts[k] - 1);
      mus(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s)) =
          box.lo[k] + t * (box.hi[k] - box.lo[k]);
    }
  }
  return mus;
}

/// Split stratified by the first parameter: round(fraction * S) training
/// samples, each stratum contributing floor(fraction * size) plus leftovers
/// handed out in seeded order. Returns sorted training indices.
inline std::vector<std::size_t> stratified_split(const Matrix& mus, double fraction,
                                                 std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, "train_fraction must lie in (0, 1)");
  const auto s = static_cast<std::size_t>(mus.cols());
  require(s >= 2, "need at least two samples to split");
  std::map<double, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < s; ++i) strata[mus(0, static_cast<Eigen::Index>(i))].push_back(i);
  Rng rng(seed);
  const auto target = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(s))), 1, s - 1);
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> take;
  std::size_t taken = 0;
  for (auto& [key, members] : strata) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
    groups.push_back(members);
    take.push_back(k);
    taken += k;
  }
  std::vector<std::size_t> gorder(groups.size());
  std::iota(gorder.begin(), gorder.end(), std::size_t{0});
  std::shuffle(gorder.begin(), gorder.end(), rng);
  while (taken < target) {
    bool moved = false;
    for (std::size_t g : gorder) {
      if (taken == target) break;
      if (take[g] < groups[g].size()) {
        ++take[g];
        ++taken;
        moved = true;
      }
    }
    if (!moved) break;
  }
  std::vector<std::size_t> train;
  for (std::size_t g = 0; g < groups.size(); ++g)
    train.insert(train.end(), groups[g].begin(), groups[g].begin() + static_cast<std::ptrdiff_t>(take[g]));
  std::sort(train.begin(), train.end());
  return train;
}

/// Which mesh each training sample is seen on: one mesh, or two meshes
/// alternating over the training samples in index order.
struct Assignment {
  std::vector<std::string> meshes;  ///< one or two mesh ids

  static Assignment single(std::string id) { return {{std::move(id)}}; }
  static Assignment mixed(std::string a, std::string b) { return {{std::move(a), std::move(b)}}; }

  static Assignment parse(const std::string& spec) {
    Assignment a;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, '+'))
      if (!part.empty()) a.meshes.push_back(part);
    require(a.meshes.size() == 1 || a.meshes.size() == 2,
            "assignment must name one mesh or two joined by '+', got '" + spec + "'");
    return a;
  }

  std::string str() const {
    return meshes.size() == 1 ? meshes[0] : meshes[0] + "+" + meshes[1];
  }

  std::vector<std::string> apply(std::size_t n_train) const {
    std::vector<std::string> out(n_train);
    for (std::size_t i = 0; i < n_train; ++i) out[i] = meshes[i % meshes.size()];
    return out;
  }
};

/// Snapshots of every sample on every mesh, plus the split and the training
/// mesh assignment.
struct Dataset {
  Family family = Family::Smooth;
  std::vector<std::size_t> grid;
  std::vector<std::string> mesh_ids;
  std::map<std::string, MeshPtr> meshes;
  Matrix mus;                                ///< n_mu x S
  std::map<std::string, Matrix> snapshots;   ///< id -> N_id x S
  std::uint64_t split_seed = 0;
  double train_fraction = 0.3;
  std::vector<std::size_t> train;            ///< sorted sample indices
  std::vector<std::size_t> test;             ///< the rest, sorted
  std::vector<std::string> train_mesh;       ///< mesh id per training sample
  std::string assignment;

  std::size_t n_mu() const { return static_cast<std::size_t>(mus.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(mus.cols()); }

  const MeshPtr& mesh(const std::string& id) const {
    auto it = meshes.find(id);
    if (it == meshes.end()) throw InvalidArgument("dataset has no mesh '" + id + "'");
    return it->second;
  }

  Vector field(const std::string& id, std::size_t sample) const {
    mesh(id);
    return snapshots.at(id).col(static_cast<Eigen::Index>(sample));
  }
};

inline Dataset generate_dataset(Family family, const std::vector<std::size_t>& grid,
                                const std::vector<std::pair<std::string, MeshPtr>>& meshes,
                                const Assignment& assignment, std::uint64_t split_seed,
                                double train_fraction) {
  require(!meshes.empty(), "dataset needs at least one mesh");
  Dataset ds;
  ds.family = family;
  ds.grid = grid;
  ds.mus = parameter_grid(param_box(family), grid);
  for (const auto& [id, m] : meshes) {
    require(!ds.meshes.count(id), "duplicate mesh id '" + id + "'");
    ds.mesh_ids.push_back(id);
    ds.meshes[id] = m;
    Matrix snaps(static_cast<Eigen::Index>(m->size()), ds.mus.cols());
    for (Eigen::Index s = 0; s < ds.mus.cols(); ++s)
      snaps.col(s) = analytic_field(family, Vector(ds.mus.col(s)), *m);
    ds.snapshots[id] = std::move(snaps);
  }
  for (const auto& id : assignment.meshes) ds.mesh(id);
  ds.split_seed = split_seed;
  ds.train_fraction = train_fraction;
  ds.train = stratified_split(ds.mus, train_fraction, split_seed);
  for (std::size_t i = 0, k = 0; i < ds.size(); ++i) {
    if (k < ds.train.size() && ds.train[k] == i)
      ++k;
    else
      ds.test.push_back(i);
  }
  ds.assignment = assignment.str();
  ds.train_mesh = assignment.apply(ds.train.size());
  return ds;
}

inline std::string join_ids(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::vector<std::vector<double>> matrix_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
  return rows;
}

inline Matrix rows_matrix(const std::vector<std::vector<double>>& rows, std::size_t cols,
                          const std::string& what) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw IoError(what + ": row " + std::to_string(i + 1) + " has " +
                    std::to_string(rows[i].size()) + " values, expected " + std::to_string(cols));
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  nlohmann::json mesh_files = nlohmann::json::object();
  for (const auto& id : ds.mesh_ids) {
    const std::string mf = "mesh_" + id + ".csv";
    ds.meshes.at(id)->write_csv(dir / mf);
    io::write_csv(dir / ("snapshots_" + id + ".csv"), matrix_rows(ds.snapshots.at(id).transpose()));
    mesh_files[id] = {{"mesh", mf}, {"snapshots", "snapshots_" + id + ".csv"},
                      {"nodes", ds.meshes.at(id)->size()}};
  }
  io::write_csv(dir / "params.csv", matrix_rows(ds.mus.transpose()));
  nlohmann::json j = {{"family", family_name(ds.family)},
                      {"n_mu", ds.n_mu()},
                      {"grid", ds.grid},
                      {"samples", ds.size()},
                      {"mesh_ids", ds.mesh_ids},
                      {"meshes", mesh_files},
                      {"split_seed", ds.split_seed},
                      {"train_fraction", ds.train_fraction},
                      {"train", ds.train},
                      {"test", ds.test},
                      {"assignment", ds.assignment},
                      {"train_mesh", ds.train_mesh}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  try {
    nlohmann::json j;
    in >> j;
    Dataset ds;
    ds.family = family_from_name(j.at("family").get<std::string>());
    ds.grid = j.at("grid").get<std::vector<std::size_t>>();
    ds.mesh_ids = j.at("mesh_ids").get<std::vector<std::string>>();
    const auto n_mu = j.at("n_mu").get<std::size_t>();
    const auto s = j.at("samples").get<std::size_t>();
    ds.mus = rows_matrix(io::read_csv(dir / "params.csv"), n_mu, "params.csv").transpose();
    if (static_cast<std::size_t>(ds.mus.cols()) != s)
      throw IoError("params.csv has " + std::to_string(ds.mus.cols()) + " rows, expected " +
                    std::to_string(s));
    for (const auto& id : ds.mesh_ids) {
      const auto& e = j.at("meshes").at(id);
      auto mesh = share(Mesh::read_csv(dir / e.at("mesh").get<std::string>()));
      const std::string sf = e.at("snapshots").get<std::string>();
      Matrix snaps = rows_matrix(io::read_csv(dir / sf), mesh->size(), sf).transpose();
      if (static_cast<std::size_t>(snaps.cols()) != s)
        throw IoError(sf + " has " + std::to_string(snaps.cols()) + " rows, expected " +
                      std::to_string(s));
      ds.meshes[id] = std::move(mesh);
      ds.snapshots[id] = std::move(snaps);
    }
    ds.split_seed = j.at("split_seed").get<std::uint64_t>();
    ds.train_fraction = j.at("train_fraction").get<double>();
    ds.train = j.at("train").get<std::vector<std::size_t>>();
    ds.test = j.at("test").get<std::vector<std::size_t>>();
    ds.assignment = j.at("assignment").get<std::string>();
    ds.train_mesh = j.at("train_mesh").get<std::vector<std::string>>();
    if (ds.train_mesh.size() != ds.train.size())
      throw IoError("manifest assigns " + std::to_string(ds.train_mesh.size()) +
                    " meshes to " + std::to_string(ds.train.size()) + " training samples");
    for (std::size_t i : ds.train) require(i < s, "training index out of range");
    for (std::size_t i : ds.test) require(i < s, "test index out of range");
    for (const auto& id : ds.train_mesh) ds.mesh(id);
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad dataset manifest in " + dir.string() + ": " + e.what());
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError("bad dataset in " + dir.string() + ": " + e.what());
  }
}

}  // namespace gfnrom
