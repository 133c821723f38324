// SPDX-License-Identifier: Apache-2.0
//
// Graph feedforward network (GFN) weight transfer between meshes.
//
// The mesh-facing parameters of an autoencoder (encoder input columns, decoder
// output rows and decoder bias) are owned by mesh nodes. Moving them to a new
// mesh uses only nearest-neighbour relations: encoder columns are split evenly
// among the new nodes an origin node relates to, decoder rows are averaged
// over the origin nodes a new node relates to.

#pragma once

#include "gfnrom/common.hpp"
#include "gfnrom/mesh.hpp"

#include <nlohmann/json.hpp>

namespace gfnrom {

/// Mesh-facing parameters of the first encoder and last decoder layer.
struct WeightBundle {
  Matrix w_enc;  ///< width x nodes
  Vector b_enc;  ///< width; belongs to the latent side, never transferred
  Matrix w_dec;  ///< nodes x width
  Vector b_dec;  ///< nodes
  MeshPtr mesh;

  std::size_t width() const { return static_cast<std::size_t>(w_enc.rows()); }
  std::size_t nodes() const { return static_cast<std::size_t>(w_enc.cols()); }

  void validate() const {
    require(mesh != nullptr, "weight bundle has no mesh");
    const auto n = static_cast<Eigen::Index>(mesh->size());
    const auto l = w_enc.rows();
    require(w_enc.cols() == n, "encoder weight has " + std::to_string(w_enc.cols()) +
                                   " columns for a mesh of " + std::to_string(n) + " nodes");
    require(w_dec.rows() == n && w_dec.cols() == l, "decoder weight shape mismatch");
    require(b_dec.size() == n, "decoder bias length mismatch");
    require(b_enc.size() == l, "encoder bias length mismatch");
  }
};

/// Whether a fast-path transfer verifies its mesh condition before running.
enum class Precondition { Verify, Trust };

/// Transfer for an expansive pair, touching only backward arrows.
inline WeightBundle expand(const WeightBundle& wb, MeshPtr target,
                           Precondition check = Precondition::Verify) {
  wb.validate();
  if (!target || target->empty()) throw InvalidArgument("empty mesh");
  const Mesh& origin = *wb.mesh;
  require(origin.dim() == target->dim(), "meshes have different dimensions");
  if (check == Precondition::Verify && !is_expansive(build_neighbor_map(origin, *target)))
    throw InvalidArgument("not expansive");

  const std::size_t n_new = target->size();
  const auto back = nearest_all(*target, origin);
  std::vector<double> counts(origin.size(), 0.0);
  for (std::size_t j : back) counts[j] += 1.0;

  WeightBundle out;
  out.mesh = std::move(target);
  out.b_enc = wb.b_enc;
  out.w_enc.resize(wb.w_enc.rows(), static_cast<Eigen::Index>(n_new));
  out.w_dec.resize(static_cast<Eigen::Index>(n_new), wb.w_dec.cols());
  out.b_dec.resize(static_cast<Eigen::Index>(n_new));
  for (std::size_t i = 0; i < n_new; ++i) {
    const auto src = static_cast<Eigen::Index>(back[i]);
    const auto dst = static_cast<Eigen::Index>(i);
    out.w_enc.col(dst) = wb.w_enc.col(src) / counts[back[i]];
    out.w_dec.row(dst) = wb.w_dec.row(src);
    out.b_dec(dst) = wb.b_dec(src);
  }
  return out;
}

/// Transfer for an agglomerative pair, touching only forward arrows.
/// Decoder rows use a running mean in ascending origin-node order.
inline WeightBundle agglomerate(const WeightBundle& wb, MeshPtr target,
                                Precondition check = Precondition::Verify) {
  wb.validate();
  if (!target || target->empty()) throw InvalidArgument("empty mesh");
  const Mesh& origin = *wb.mesh;
  require(origin.dim() == target->dim(), "meshes have different dimensions");
  if (check == Precondition::Verify && !is_agglomerative(build_neighbor_map(origin, *target)))
    throw InvalidArgument("not agglomerative");

  const std::size_t n_new = target->size();
  const auto fwd = nearest_all(origin, *target);
  std::vector<double> counts(n_new, 0.0);

  WeightBundle out;
  out.mesh = std::move(target);
  out.b_enc = wb.b_enc;
  out.w_enc = Matrix::Zero(wb.w_enc.rows(), static_cast<Eigen::Index>(n_new));
  out.w_dec = Matrix::Zero(static_cast<Eigen::Index>(n_new), wb.w_dec.cols());
  out.b_dec = Vector::Zero(static_cast<Eigen::Index>(n_new));
  for (std::size_t i = 0; i < origin.size(); ++i) {
    const std::size_t j = fwd[i];
    const auto src = static_cast<Eigen::Index>(i);
    const auto dst = static_cast<Eigen::Index>(j);
    counts[j] += 1.0;
    const double c = counts[j];
    out.w_enc.col(dst) += wb.w_enc.col(src);
    out.w_dec.row(dst) = ((c - 1.0) * out.w_dec.row(dst) + wb.w_dec.row(src)) / c;
    out.b_dec(dst) = ((c - 1.0) * out.b_dec(dst) + wb.b_dec(src)) / c;
  }
  for (std::size_t j = 0; j < n_new; ++j)
    if (counts[j] == 0.0)
      throw Error("agglomerate: target node " + std::to_string(j) + " has no source node");
  return out;
}

/// General transfer computed as an expansion onto the master mesh followed by
/// an agglomeration onto the target.
inline WeightBundle gfn_transform_decomposed(const WeightBundle& wb, MeshPtr target) {
  wb.validate();
  if (!target || target->empty()) throw InvalidArgument("empty mesh");
  const auto nm = build_neighbor_map(*wb.mesh, *target);
  auto master = share(master_mesh_union(*wb.mesh, *target, nm));
  return agglomerate(expand(wb, std::move(master), Precondition::Trust), std::move(target),
                     Precondition::Trust);
}

/// Transfers `wb` onto `target`. Production path for every mesh pair.
inline WeightBundle gfn_transform(const WeightBundle& wb, MeshPtr target) {
  return gfn_transform_decomposed(wb, std::move(target));
}

/// The transfer between one mesh pair as a sparse linear map.
///
/// Each master-mesh node links one origin node to one target node. Encoder
/// columns travel along links with weight 1/(links leaving the origin node);
/// decoder rows are averaged over links arriving at the target node. Training
/// applies the map to fields instead of weights: the encoder sees
/// `W_enc * pull(u)` and the decoder output is `push(W_dec h + b_dec)`.
class TransferPlan {
 public:
  TransferPlan() = default;

  static TransferPlan build(const Mesh& origin, const Mesh& target) {
    const auto nm = build_neighbor_map(origin, target);
    TransferPlan plan;
    plan.n_origin_ = origin.size();
    plan.n_target_ = target.size();
    for (std::size_t k = 0; k < origin.size(); ++k) plan.links_.push_back({k, nm.fwd[k]});
    for (std::size_t j : undersampled_nodes(nm)) plan.links_.push_back({nm.bwd[j], j});
    plan.out_degree_.assign(plan.n_origin_, 0.0);
    plan.in_degree_.assign(plan.n_target_, 0.0);
    for (const auto& l : plan.links_) {
      plan.out_degree_[l.origin] += 1.0;
      plan.in_degree_[l.target] += 1.0;
    }
    plan.identity_ = plan.n_origin_ == plan.n_target_ && plan.links_.size() == plan.n_origin_;
    for (std::size_t k = 0; plan.identity_ && k < plan.n_origin_; ++k)
      plan.identity_ = nm.fwd[k] == k;
    return plan;
  }

  std::size_t origin_size() const { return n_origin_; }
  std::size_t target_size() const { return n_target_; }
  bool is_identity() const { return identity_; }

  /// Adjoint of the encoder-column transfer applied to target-mesh fields
  /// (one field per column).
  Matrix pull(const Matrix& u_target) const {
    require(static_cast<std::size_t>(u_target.rows()) == n_target_, "field length mismatch");
    if (identity_) return u_target;
    Matrix v = Matrix::Zero(static_cast<Eigen::Index>(n_origin_), u_target.cols());
    for (const auto& l : links_)
      v.row(static_cast<Eigen::Index>(l.origin)) +=
          u_target.row(static_cast<Eigen::Index>(l.target)) / out_degree_[l.origin];
    return v;
  }

  /// Averages origin-node rows of `y` onto the target mesh.
  Matrix push(const Matrix& y_origin) const {
    require(static_cast<std::size_t>(y_origin.rows()) == n_origin_, "row count mismatch");
    if (identity_) return y_origin;
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n_target_), y_origin.cols());
    for (const auto& l : links_)
      out.row(static_cast<Eigen::Index>(l.target)) +=
          y_origin.row(static_cast<Eigen::Index>(l.origin)) / in_degree_[l.target];
    return out;
  }

  /// Adjoint of push.
  Matrix push_adjoint(const Matrix& g_target) const {
    require(static_cast<std::size_t>(g_target.rows()) == n_target_, "row count mismatch");
    if (identity_) return g_target;
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n_origin_), g_target.cols());
    for (const auto& l : links_)
      out.row(static_cast<Eigen::Index>(l.origin)) +=
          g_target.row(static_cast<Eigen::Index>(l.target)) / in_degree_[l.target];
    return out;
  }

  /// Adjoint of the bundle transfer with respect to (w_enc, w_dec, b_dec).
  /// `y` lives on the target mesh; the result lives on `origin_mesh`.
  WeightBundle adjoint(const WeightBundle& y, MeshPtr origin_mesh) const {
    WeightBundle out;
    out.mesh = std::move(origin_mesh);
    out.b_enc = y.b_enc;
    out.w_enc = Matrix::Zero(y.w_enc.rows(), static_cast<Eigen::Index>(n_origin_));
    for (const auto& l : links_)
      out.w_enc.col(static_cast<Eigen::Index>(l.origin)) +=
          y.w_enc.col(static_cast<Eigen::Index>(l.target)) / out_degree_[l.origin];
    out.w_dec = push_adjoint(y.w_dec);
    out.b_dec = push_adjoint(Matrix(y.b_dec)).col(0);
    return out;
  }

 private:
  struct Link {
    std::size_t origin;
    std::size_t target;
  };

  std::size_t n_origin_ = 0, n_target_ = 0;
  std::vector<Link> links_;
  std::vector<double> out_degree_, in_degree_;
  bool identity_ = false;
};

// Bundle files: bundle.json plus row-major little-endian float64 blobs.
inline void save_bundle(const std::filesystem::path& dir, const WeightBundle& wb,
                        const std::string& mesh_file = "mesh.csv") {
  wb.validate();
  std::filesystem::create_directories(dir);
  wb.mesh->write_csv(dir / mesh_file);
  io::write_blob(dir / "w_enc.bin", wb.w_enc);
  io::write_vector_blob(dir / "b_enc.bin", wb.b_enc);
  io::write_blob(dir / "w_dec.bin", wb.w_dec);
  io::write_vector_blob(dir / "b_dec.bin", wb.b_dec);
  nlohmann::json manifest = {{"L", wb.width()},
                             {"N", wb.nodes()},
                             {"dim", wb.mesh->dim()},
                             {"mesh", mesh_file},
                             {"w_enc", "w_enc.bin"},
                             {"b_enc", "b_enc.bin"},
                             {"w_dec", "w_dec.bin"},
                             {"b_dec", "b_dec.bin"}};
  std::ofstream(dir / "bundle.json") << manifest.dump(2) << '\n';
}

inline WeightBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "bundle.json");
  if (!in) throw IoError("cannot open " + (dir / "bundle.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
    const auto l = manifest.at("L").get<Eigen::Index>();
    const auto n = manifest.at("N").get<Eigen::Index>();
    WeightBundle wb;
    wb.mesh = share(Mesh::read_csv(dir / manifest.at("mesh").get<std::string>()));
    wb.w_enc = io::read_blob(dir / manifest.at("w_enc").get<std::string>(), l, n);
    wb.b_enc = io::read_vector_blob(dir / manifest.at("b_enc").get<std::string>(), l);
    wb.w_dec = io::read_blob(dir / manifest.at("w_dec").get<std::string>(), n, l);
    wb.b_dec = io::read_vector_blob(dir / manifest.at("b_dec").get<std::string>(), n);
    wb.validate();
    return wb;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad bundle manifest in " + dir.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw IoError("inconsistent bundle in " + dir.string() + ": " + e.what());
  }
}

}  // namespace gfnrom
