// SPDX-License-Identifier: Apache-2.0
//
// Node-only meshes, a k-d tree for nearest-neighbour queries, and the
// nearest-neighbour relations between two meshes that drive weight transfer.

#pragma once

#include "gfnrom/common.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <utility>

namespace gfnrom {

/// Static k-d tree over a flat row-major coordinate array.
///
/// Queries return the exact nearest node under the Euclidean metric. Ties are
/// resolved towards the lowest node index, so results match an exhaustive scan
/// bit for bit.
class KdTree {
 public:
  KdTree() = default;

  KdTree(std::span<const double> coords, std::size_t dim) : dim_(dim) {
    const std::size_t n = dim == 0 ? 0 : coords.size() / dim;
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    if (n > 0) {
      nodes_.reserve(2 * n / kLeafSize + 2);
      build(coords, 0, n);
    }
  }

  /// Index of the node nearest to `q`. The tree must be non-empty.
  std::size_t nearest(std::span<const double> coords, std::span<const double> q) const {
    Best best;
    search(coords, 0, q, best);
    return best.index;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin = 0, end = 0;
    std::size_t axis = 0;
    double split = 0.0;
    std::int64_t left = -1, right = -1;
  };

  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t index = std::numeric_limits<std::size_t>::max();
  };

  std::int64_t build(std::span<const double> coords, std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int64_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;

    // Split on the axis of largest spread.
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double c = coords[perm_[i] * dim_ + a];
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        axis = a;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                     perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                     perm_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return coords[a * dim_ + axis] < coords[b * dim_ + axis];
                     });
    const double split = coords[perm_[mid] * dim_ + axis];
    const auto left = build(coords, begin, mid);
    const auto right = build(coords, mid, end);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void search(std::span<const double> coords, std::int64_t id, std::span<const double> q,
              Best& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t p = perm_[i];
        double d2 = 0.0;
        for (std::size_t a = 0; a < dim_; ++a) {
          const double diff = q[a] - coords[p * dim_ + a];
          d2 += diff * diff;
        }
        if (d2 < best.d2 || (d2 == best.d2 && p < best.index)) {
          best.d2 = d2;
          best.index = p;
        }
      }
      return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = q[node.axis] - node.split;
    const auto near = diff < 0.0 ? node.left : node.right;
    const auto far = diff < 0.0 ? node.right : node.left;
    search(coords, near, q, best);
    // <= keeps equidistant nodes with a lower index reachable.
    if (diff * diff <= best.d2) search(coords, far, q, best);
  }

  std::size_t dim_ = 0;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
};

/// An ordered, duplicate-free set of nodes in d dimensions.
///
/// Node order is fixed at construction and defines node indices. Meshes are
/// immutable, so a mesh may be shared freely across threads.
class Mesh {
 public:
  Mesh() = default;

  /// Builds a mesh from a flat row-major coordinate array.
  Mesh(std::vector<double> coords, std::size_t dim) : dim_(dim), coords_(std::move(coords)) {
    require(dim_ >= 1, "mesh dimension must be at least 1");
    require(coords_.size() % dim_ == 0, "coordinate count is not a multiple of the dimension");
    check_duplicates();
    tree_ = KdTree(coords_, dim_);
  }

  static Mesh from_points(const std::vector<std::vector<double>>& points) {
    require(!points.empty(), "empty mesh");
    const std::size_t dim = points.front().size();
    std::vector<double> flat;
    flat.reserve(points.size() * dim);
    for (const auto& p : points) {
      require(p.size() == dim, "nodes have inconsistent dimension");
      flat.insert(flat.end(), p.begin(), p.end());
    }
    return Mesh(std::move(flat), dim);
  }

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }

  std::span<const double> node(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * dim_, dim_);
  }
  std::span<const double> coords() const { return coords_; }

  std::size_t nearest(std::span<const double> query) const {
    if (empty()) throw InvalidArgument("empty mesh");
    require(query.size() == dim_, "query dimension " + std::to_string(query.size()) +
                                      " does not match mesh dimension " +
                                      std::to_string(dim_));
    return tree_.nearest(coords_, query);
  }

  /// Exact coordinate equality with another mesh, node by node.
  bool same_nodes(const Mesh& other) const {
    return dim_ == other.dim_ && coords_ == other.coords_;
  }

  static Mesh read_csv(const std::filesystem::path& path) {
    const auto rows = io::read_csv(path);
    if (rows.empty()) throw IoError("mesh file " + path.string() + " has no nodes");
    try {
      return from_points(rows);
    } catch (const InvalidArgument& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }

  void write_csv(const std::filesystem::path& path) const {
    std::vector<std::vector<double>> rows(size());
    for (std::size_t i = 0; i < size(); ++i) rows[i].assign(node(i).begin(), node(i).end());
    io::write_csv(path, rows);
  }

 private:
  void check_duplicates() const {
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(node(a).begin(), node(a).end(), node(b).begin(),
                                          node(b).end());
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (std::equal(node(order[i - 1]).begin(), node(order[i - 1]).end(),
                     node(order[i]).begin()))
        throw InvalidArgument("duplicate node at indices " + std::to_string(order[i - 1]) +
                              " and " + std::to_string(order[i]));
    }
  }

  std::size_t dim_ = 0;
  std::vector<double> coords_;
  KdTree tree_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

inline MeshPtr share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

/// Nearest-neighbour relations between an origin mesh and a new mesh.
///
/// `fwd[i]` is the node of the new mesh nearest to origin node i, and `bwd[j]`
/// is the origin node nearest to new node j.
struct NeighborMap {
  std::vector<std::size_t> fwd;
  std::vector<std::size_t> bwd;
};

inline std::size_t nearest_neighbor(const Mesh& mesh, std::span<const double> query) {
  return mesh.nearest(query);
}

/// Nearest nodes of `new_mesh` for every node of `origin`.
inline std::vector<std::size_t> nearest_all(const Mesh& origin, const Mesh& new_mesh) {
  std::vector<std::size_t> out(origin.size());
  for (std::size_t i = 0; i < origin.size(); ++i) out[i] = new_mesh.nearest(origin.node(i));
  return out;
}

inline NeighborMap build_neighbor_map(const Mesh& origin, const Mesh& new_mesh) {
  if (origin.empty() || new_mesh.empty()) throw InvalidArgument("empty mesh");
  require(origin.dim() == new_mesh.dim(), "meshes have different dimensions (" +
                                              std::to_string(origin.dim()) + " vs " +
                                              std::to_string(new_mesh.dim()) + ")");
  return {nearest_all(origin, new_mesh), nearest_all(new_mesh, origin)};
}

struct TransformKind {
  bool expansive = false;
  bool agglomerative = false;
};

inline bool is_expansive(const NeighborMap& nm) {
  for (std::size_t i = 0; i < nm.fwd.size(); ++i)
    if (nm.bwd[nm.fwd[i]] != i) return false;
  return true;
}

inline bool is_agglomerative(const NeighborMap& nm) {
  for (std::size_t j = 0; j < nm.bwd.size(); ++j)
    if (nm.fwd[nm.bwd[j]] != j) return false;
  return true;
}

inline TransformKind classify_transform(const NeighborMap& nm) {
  return {is_expansive(nm), is_agglomerative(nm)};
}

/// Indices of new-mesh nodes that point into the origin mesh without being
/// pointed back to. These are the nodes a master mesh must add.
inline std::vector<std::size_t> undersampled_nodes(const NeighborMap& nm) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < nm.bwd.size(); ++j)
    if (nm.fwd[nm.bwd[j]] != j) out.push_back(j);
  return out;
}

/// The origin mesh followed by every undersampled node of the new mesh.
///
/// Transfer from `origin` to the result is always expansive, and transfer from
/// the result to `new_mesh` is always agglomerative.
inline Mesh master_mesh_union(const Mesh& origin, const Mesh& new_mesh, const NeighborMap& nm) {
  std::vector<double> coords(origin.coords().begin(), origin.coords().end());
  const auto extra = undersampled_nodes(nm);
  coords.reserve(coords.size() + extra.size() * origin.dim());
  for (std::size_t j : extra) {
    const auto p = new_mesh.node(j);
    // Exact-duplicate guard; an undersampled node can only coincide with an
    // origin node if the relations were built from different meshes.
    const std::size_t k = nm.bwd[j];
    if (std::equal(p.begin(), p.end(), origin.node(k).begin())) continue;
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return Mesh(std::move(coords), origin.dim());
}

inline Mesh master_mesh_union(const Mesh& origin, const Mesh& new_mesh) {
  return master_mesh_union(origin, new_mesh, build_neighbor_map(origin, new_mesh));
}

/// True when every node of `sub` appears (exactly) in `super`.
inline bool is_coordinate_subset(const Mesh& sub, const Mesh& super) {
  if (sub.dim() != super.dim()) return false;
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const auto p = sub.node(i);
    const auto q = super.node(super.nearest(p));
    if (!std::equal(p.begin(), p.end(), q.begin())) return false;
  }
  return true;
}

}  // namespace gfnrom
