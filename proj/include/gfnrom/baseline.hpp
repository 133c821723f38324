// SPDX-License-Identifier: Apache-2.0
//
// POD by the method of snapshots and its projection error.

#pragma once

#include "gfnrom/common.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <iostream>
#include <numeric>

namespace gfnrom {

struct SymmetricEigen {
  Vector values;   ///< descending
  Matrix vectors;  ///< columns match `values`
};

/// Cyclic Jacobi eigensolver for a small symmetric matrix.
inline SymmetricEigen jacobi_eigen(Matrix a, double tol = 1e-15, std::size_t max_sweeps = 100) {
  require(a.rows() == a.cols(), "matrix must be square");
  const Eigen::Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= tol * tol * std::max(1e-300, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

struct PodBasis {
  Matrix modes;            ///< N_h x r, orthonormal columns, r <= requested rank
  Vector singular_values;  ///< requested rank, descending, zero past the numerical rank

  std::size_t rank() const { return static_cast<std::size_t>(modes.cols()); }
};

/// Leading left singular vectors of `snapshots` (one snapshot per column)
/// from the eigendecomposition of the Gram matrix. Modes whose squared
/// singular value falls below 1e-12 of the largest are dropped.
inline PodBasis pod_basis(const Matrix& snapshots, std::size_t rank) {
  const auto nh = static_cast<std::size_t>(snapshots.rows());
  const auto t = static_cast<std::size_t>(snapshots.cols());
  require(rank >= 1, "rank must be at least 1");
  if (rank > std::min(nh, t))
    throw InvalidArgument("rank too large: " + std::to_string(rank) + " > min(" +
                          std::to_string(nh) + ", " + std::to_string(t) + ")");
  const Matrix gram = snapshots.transpose() * snapshots;
  const SymmetricEigen eig = jacobi_eigen(gram);
  const double top = std::max(eig.values(0), 0.0);

  PodBasis b;
  b.singular_values = Vector::Zero(static_cast<Eigen::Index>(rank));
  std::vector<Vector> kept;
  for (std::size_t k = 0; k < rank; ++k) {
    const double lambda = eig.values(static_cast<Eigen::Index>(k));
    if (!(lambda > 0.0) || lambda < 1e-12 * top) break;
    const double sigma = std::sqrt(lambda);
    Vector psi = snapshots * eig.vectors.col(static_cast<Eigen::Index>(k)) / sigma;
    // Two Gram-Schmidt passes against earlier modes remove round-off drift.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : kept) psi -= q.dot(psi) * q;
    const double nrm = psi.norm();
    if (!(nrm > 0.5)) break;
    kept.push_back(psi / nrm);
    b.singular_values(static_cast<Eigen::Index>(k)) = sigma;
  }
  b.modes.resize(static_cast<Eigen::Index>(nh), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) b.modes.col(static_cast<Eigen::Index>(k)) = kept[k];
  return b;
}

/// Mean over test samples of 100 ||V V^T u - u|| / ||u||; zero-norm
/// samples are skipped with a warning.
inline double pod_projection_error(const PodBasis& basis, const Matrix& test,
                                   std::vector<double>* per_sample = nullptr) {
  require(test.rows() == basis.modes.rows(), "test snapshots do not match the basis length");
  require(test.cols() > 0, "empty test set");
  double sum = 0.0;
  std::size_t used = 0;
  if (per_sample) per_sample->clear();
  for (Eigen::Index c = 0; c < test.cols(); ++c) {
    const Vector u = test.col(c);
    const double nu = u.norm();
    if (nu == 0.0) {
      std::cerr << "warning: sample " << c << " has a zero field and is excluded\n";
      if (per_sample) per_sample->push_back(std::nan(""));
      continue;
    }
    const Vector r = basis.modes * (basis.modes.transpose() * u) - u;
    const double e = 100.0 * r.norm() / nu;
    if (per_sample) per_sample->push_back(e);
    sum += e;
    ++used;
  }
  require(used > 0, "every test sample has a zero field");
  return sum / static_cast<double>(used);
}

inline void save_pod(const std::filesystem::path& dir, const PodBasis& b) {
  std::filesystem::create_directories(dir);
  io::write_blob(dir / "pod_modes.bin", b.modes);
  io::write_vector_blob(dir / "pod_singular_values.bin", b.singular_values);
  const nlohmann::json j = {{"rows", b.modes.rows()},
                            {"modes", b.modes.cols()},
                            {"rank", b.singular_values.size()},
                            {"w_modes", "pod_modes.bin"},
                            {"singular_values", "pod_singular_values.bin"}};
  std::ofstream out(dir / "pod.json");
  if (!out) throw IoError("cannot write " + (dir / "pod.json").string());
  out << j.dump(2) << '\n';
}

inline PodBasis load_pod(const std::filesystem::path& dir) {
  std::ifstream in(dir / "pod.json");
  if (!in) throw IoError("cannot open " + (dir / "pod.json").string());
  try {
    nlohmann::json j;
    in >> j;
    return {io::read_blob(dir / j.at("w_modes").get<std::string>(), j.at("rows").get<Eigen::Index>(),
                          j.at("modes").get<Eigen::Index>()),
            io::read_vector_blob(dir / j.at("singular_values").get<std::string>(),
                                 j.at("rank").get<Eigen::Index>())};
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad POD manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace gfnrom
