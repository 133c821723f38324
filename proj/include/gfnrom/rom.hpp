// SPDX-License-Identifier: Apache-2.0
//
// GFN-ROM: a mesh-transferable autoencoder plus a parameter-to-latent mapper,
// its losses, training loop and cross-resolution inference.

#pragma once

#include "gfnrom/common.hpp"
#include "gfnrom/gfn.hpp"
#include "gfnrom/mesh.hpp"
#include "gfnrom/neural.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

namespace gfnrom {

struct Architecture {
  std::size_t gfn_width = 200;  ///< width of the GFN layer; 0 puts the latent on the GFN layer
  std::size_t latent = 0;       ///< 0 means floor(1.5 * n_mu)
  std::vector<std::size_t> mapper_hidden = {50, 50, 50, 50};

  std::size_t latent_for(std::size_t n_mu) const {
    return latent > 0 ? latent : static_cast<std::size_t>(std::floor(1.5 * static_cast<double>(n_mu)));
  }
};

struct RomModel {
  WeightBundle bundle;
  DenseNet enc_hidden;  ///< GFN width -> latent, tanh on every layer
  DenseNet dec_hidden;  ///< latent -> GFN width, tanh on every layer
  DenseNet mapper;      ///< n_mu -> latent, last layer affine
  double omega = 10.0;
  std::size_t latent_dim = 0;
  std::size_t n_mu = 0;

  static RomModel create(MeshPtr mesh, std::size_t n_mu, const Architecture& arch, double omega,
                         std::uint64_t seed) {
    require(mesh && !mesh->empty(), "empty mesh");
    require(n_mu >= 1, "parameter dimension must be at least 1");
    require(omega > 0.0, "omega must be positive");
    const std::size_t latent = arch.latent_for(n_mu);
    require(latent >= 1, "latent dimension must be at least 1");
    Rng rng(seed);
    RomModel m;
    m.omega = omega;
    m.latent_dim = latent;
    m.n_mu = n_mu;
    const std::size_t width = arch.gfn_width > 0 ? arch.gfn_width : latent;
    const auto n = static_cast<Eigen::Index>(mesh->size());
    const auto w = static_cast<Eigen::Index>(width);
    m.bundle.w_enc = glorot_uniform(w, n, rng);
    m.bundle.b_enc = Vector::Zero(w);
    if (arch.gfn_width > 0) {
      m.enc_hidden = DenseNet({width, latent}, true, rng);
      m.dec_hidden = DenseNet({latent, width}, true, rng);
    }
    m.bundle.w_dec = glorot_uniform(n, w, rng);
    m.bundle.b_dec = Vector::Zero(n);
    m.bundle.mesh = std::move(mesh);
    std::vector<std::size_t> sizes{n_mu};
    sizes.insert(sizes.end(), arch.mapper_hidden.begin(), arch.mapper_hidden.end());
    sizes.push_back(latent);
    m.mapper = DenseNet(sizes, false, rng);
    m.validate();
    return m;
  }

  std::size_t width() const { return bundle.width(); }

  void validate() const {
    bundle.validate();
    require(omega > 0.0, "omega must be positive");
    const auto w = static_cast<Eigen::Index>(width());
    const auto l = static_cast<Eigen::Index>(latent_dim);
    if (enc_hidden.empty()) {
      require(w == l, "GFN width must equal the latent dimension without hidden layers");
    } else {
      require(enc_hidden.input_size() == w && enc_hidden.output_size() == l,
              "encoder hidden layers do not match the GFN width and latent dimension");
    }
    if (dec_hidden.empty()) {
      require(w == l, "GFN width must equal the latent dimension without hidden layers");
    } else {
      require(dec_hidden.input_size() == l && dec_hidden.output_size() == w,
              "decoder hidden layers do not match the latent dimension and GFN width");
    }
    require(mapper.input_size() == static_cast<Eigen::Index>(n_mu) && mapper.output_size() == l,
            "mapper does not map parameters to the latent space");
  }

  /// Encoder hidden-layer count P and total hidden-layer count Q.
  std::size_t encoder_hidden_layers() const { return enc_hidden.depth(); }
  std::size_t hidden_layers() const { return enc_hidden.depth() + dec_hidden.depth(); }

  bool finite() const {
    return bundle.w_enc.allFinite() && bundle.b_enc.allFinite() && bundle.w_dec.allFinite() &&
           bundle.b_dec.allFinite() && enc_hidden.finite() && dec_hidden.finite() &&
           mapper.finite();
  }
};

inline Matrix tanh_of(const Matrix& a) {
  return a.unaryExpr([](double v) { return std::tanh(v); });
}

/// z = hidden(tanh(W_enc u + b_enc)); `wb` must already live on the mesh of `u`.
inline Vector encode(const WeightBundle& wb, const DenseNet& hidden, const Vector& u) {
  require(u.size() == static_cast<Eigen::Index>(wb.nodes()),
          "field has " + std::to_string(u.size()) + " values for a mesh of " +
              std::to_string(wb.nodes()) + " nodes");
  Vector h = tanh_of(wb.w_enc * u + wb.b_enc);
  return hidden.empty() ? h : hidden.forward(h);
}

/// u = W_dec hidden(z) + b_dec; the last layer is affine.
inline Vector decode(const WeightBundle& wb, const DenseNet& hidden, const Vector& z) {
  const Vector g = hidden.empty() ? z : hidden.forward(z);
  require(g.size() == static_cast<Eigen::Index>(wb.width()), "latent length mismatch");
  return wb.w_dec * g + wb.b_dec;
}

inline Vector map_params(const DenseNet& mapper, const Vector& mu) {
  return mapper.empty() ? mu : mapper.forward(mu);
}

struct Sample {
  Vector mu;
  MeshPtr mesh;
  Vector u;
};

inline WeightBundle bundle_on(const RomModel& m, const MeshPtr& mesh) {
  if (mesh == m.bundle.mesh || mesh->same_nodes(*m.bundle.mesh)) {
    WeightBundle wb = m.bundle;
    wb.mesh = mesh;
    return wb;
  }
  return gfn_transform(m.bundle, mesh);
}

// Single-sample losses through the explicitly transferred bundle.
inline double loss_recon(const RomModel& m, const Sample& s) {
  const WeightBundle wb = bundle_on(m, s.mesh);
  const Vector r = decode(wb, m.dec_hidden, encode(wb, m.enc_hidden, s.u)) - s.u;
  return r.squaredNorm() / static_cast<double>(s.u.size());
}

inline double loss_map(const RomModel& m, const Sample& s) {
  const WeightBundle wb = bundle_on(m, s.mesh);
  const Vector d = encode(wb, m.enc_hidden, s.u) - map_params(m.mapper, s.mu);
  return d.squaredNorm() / static_cast<double>(m.latent_dim);
}

/// (1/T) sum_t (N_t / sum_s N_s) (recon_t + omega map_t)
inline double total_loss(const RomModel& m, const std::vector<Sample>& batch) {
  require(!batch.empty(), "empty batch");
  double n_sum = 0.0;
  for (const auto& s : batch) n_sum += static_cast<double>(s.u.size());
  const double t = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& s : batch)
    total += (static_cast<double>(s.u.size()) / n_sum) *
             (loss_recon(m, s) + m.omega * loss_map(m, s)) / t;
  return total;
}

/// Gradient buffers laid out like a RomModel.
struct RomGrad {
  Matrix w_enc;
  Vector b_enc;
  Matrix w_dec;
  Vector b_dec;
  DenseGrad enc, dec, mapper;

  static RomGrad zeros_like(const RomModel& m) {
    RomGrad g;
    g.w_enc = Matrix::Zero(m.bundle.w_enc.rows(), m.bundle.w_enc.cols());
    g.b_enc = Vector::Zero(m.bundle.b_enc.size());
    g.w_dec = Matrix::Zero(m.bundle.w_dec.rows(), m.bundle.w_dec.cols());
    g.b_dec = Vector::Zero(m.bundle.b_dec.size());
    g.enc = m.enc_hidden.zero_grad();
    g.dec = m.dec_hidden.zero_grad();
    g.mapper = m.mapper.zero_grad();
    return g;
  }
};

// Parameter and gradient blocks share this order.
inline std::vector<ParamBlock> blocks(RomModel& m) {
  std::vector<ParamBlock> out{block_of(m.bundle.w_enc, true), block_of(m.bundle.b_enc, false),
                              block_of(m.bundle.w_dec, true), block_of(m.bundle.b_dec, false)};
  append_blocks(out, m.enc_hidden);
  append_blocks(out, m.dec_hidden);
  append_blocks(out, m.mapper);
  return out;
}

inline std::vector<ParamBlock> blocks(RomGrad& g) {
  std::vector<ParamBlock> out{block_of(g.w_enc, true), block_of(g.b_enc, false),
                              block_of(g.w_dec, true), block_of(g.b_dec, false)};
  append_blocks(out, g.enc);
  append_blocks(out, g.dec);
  append_blocks(out, g.mapper);
  return out;
}

/// Transfer plans from the model mesh to each sample mesh, keyed by mesh
/// identity. Rebuilt whenever the origin mesh changes.
class PlanCache {
 public:
  const TransferPlan& get(const MeshPtr& origin, const MeshPtr& target) {
    if (origin != origin_) {
      plans_.clear();
      origin_ = origin;
    }
    auto it = plans_.find(target.get());
    if (it == plans_.end()) {
      Entry e{target, TransferPlan::build(*origin, *target)};
      it = plans_.emplace(target.get(), std::move(e)).first;
    }
    return it->second.plan;
  }

 private:
  struct Entry {
    MeshPtr target;  // keeps the key alive
    TransferPlan plan;
  };
  MeshPtr origin_;
  std::map<const Mesh*, Entry> plans_;
};

struct LossBreakdown {
  double total = 0.0;  ///< the literal objective
  double recon = 0.0;  ///< mesh-weighted mean reconstruction loss
  double map = 0.0;    ///< mesh-weighted mean mapper loss
};

/// Loss of `samples[idx]` with per-sample weights `weight[i]` on
/// (recon + omega map); accumulates the gradient into `grad` when given.
inline LossBreakdown weighted_loss(const RomModel& m, const std::vector<Sample>& samples,
                                   const std::vector<std::size_t>& idx,
                                   const std::vector<double>& weight, PlanCache& cache,
                                   RomGrad* grad) {
  require(idx.size() == weight.size(), "weight count mismatch");
  double n_sum = 0.0;
  for (std::size_t i : idx) n_sum += static_cast<double>(samples[i].u.size());

  // Group by mesh, keeping the first-seen order of meshes.
  std::vector<const Mesh*> order;
  std::map<const Mesh*, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Mesh* key = samples[idx[k]].mesh.get();
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(k);
  }

  const auto lat = static_cast<double>(m.latent_dim);
  LossBreakdown out;
  for (const Mesh* key : order) {
    const auto& members = groups[key];
    const auto b = static_cast<Eigen::Index>(members.size());
    const Sample& first = samples[idx[members.front()]];
    const auto n_t = first.u.size();
    const TransferPlan& plan = cache.get(m.bundle.mesh, first.mesh);

    Matrix u(n_t, b), mu(static_cast<Eigen::Index>(m.n_mu), b);
    Vector w(b);
    for (Eigen::Index c = 0; c < b; ++c) {
      const Sample& s = samples[idx[members[static_cast<std::size_t>(c)]]];
      require(s.u.size() == n_t, "field length does not match its mesh");
      require(s.mu.size() == static_cast<Eigen::Index>(m.n_mu), "parameter length mismatch");
      u.col(c) = s.u;
      mu.col(c) = s.mu;
      w(c) = weight[members[static_cast<std::size_t>(c)]];
    }

    // Forward.
    const Matrix v = plan.pull(u);
    Matrix a = m.bundle.w_enc * v;
    a.colwise() += m.bundle.b_enc;
    const Matrix h = tanh_of(a);
    DenseTape enc_tape, dec_tape, map_tape;
    const Matrix z = m.enc_hidden.empty() ? h : m.enc_hidden.forward(h, enc_tape);
    const Matrix g = m.dec_hidden.empty() ? z : m.dec_hidden.forward(z, dec_tape);
    Matrix y = m.bundle.w_dec * g;
    y.colwise() += m.bundle.b_dec;
    const Matrix r = plan.push(y) - u;
    const Matrix pm = m.mapper.empty() ? mu : m.mapper.forward(mu, map_tape);
    const Matrix d = z - pm;

    const Eigen::RowVectorXd recon = r.colwise().squaredNorm() / static_cast<double>(n_t);
    const Eigen::RowVectorXd mapl = d.colwise().squaredNorm() / lat;
    for (Eigen::Index c = 0; c < b; ++c) {
      const double share = static_cast<double>(n_t) / n_sum;
      out.total += w(c) * (recon(c) + m.omega * mapl(c));
      out.recon += share * recon(c);
      out.map += share * mapl(c);
    }
    if (!grad) continue;

    // Backward.
    const Matrix dr = r * (2.0 / static_cast<double>(n_t)) * w.asDiagonal();
    const Matrix dd = d * (2.0 * m.omega / lat) * w.asDiagonal();
    const Matrix dy = plan.push_adjoint(dr);
    grad->w_dec.noalias() += dy * g.transpose();
    grad->b_dec += dy.rowwise().sum();
    Matrix dg = m.bundle.w_dec.transpose() * dy;
    Matrix dz = m.dec_hidden.empty() ? dg : m.dec_hidden.backward(dec_tape, dg, grad->dec);
    dz += dd;
    if (!m.mapper.empty()) m.mapper.backward(map_tape, -dd, grad->mapper);
    Matrix dh = m.enc_hidden.empty() ? dz : m.enc_hidden.backward(enc_tape, dz, grad->enc);
    dh.array() *= (1.0 - h.array().square());
    grad->w_enc.noalias() += dh * v.transpose();
    grad->b_enc += dh.rowwise().sum();
  }
  if (!std::isfinite(out.total)) throw Error("non-finite loss");
  return out;
}

/// Literal objective over `samples` and, when `grad` is given, its gradient.
inline LossBreakdown loss_and_gradient(const RomModel& m, const std::vector<Sample>& samples,
                                       PlanCache& cache, RomGrad* grad) {
  require(!samples.empty(), "empty batch");
  double n_sum = 0.0;
  for (const auto& s : samples) n_sum += static_cast<double>(s.u.size());
  const double t = static_cast<double>(samples.size());
  std::vector<std::size_t> idx(samples.size());
  std::vector<double> w(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    idx[i] = i;
    w[i] = static_cast<double>(samples[i].u.size()) / n_sum / t;
  }
  return weighted_loss(m, samples, idx, w, cache, grad);
}

enum class TrainMode { Fixed, Adaptive, PrecomputedAdaptive };

inline std::string_view mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::Fixed:
      return "fixed";
    case TrainMode::Adaptive:
      return "adaptive";
    case TrainMode::PrecomputedAdaptive:
      return "precomputed";
  }
  return "fixed";
}

inline TrainMode mode_from_name(std::string_view s) {
  if (s == "fixed") return TrainMode::Fixed;
  if (s == "adaptive") return TrainMode::Adaptive;
  if (s == "precomputed" || s == "precomputed_adaptive") return TrainMode::PrecomputedAdaptive;
  throw InvalidArgument("unknown training mode '" + std::string(s) + "'");
}

struct TrainConfig {
  std::size_t epochs = 5000;
  double lr = 1e-3;
  double l2 = 1e-5;
  double omega = 10.0;
  TrainMode mode = TrainMode::PrecomputedAdaptive;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 42;
  double train_fraction = 0.30;

  void validate() const {
    require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");
    require(lr > 0.0, "learning rate must be positive");
    require(l2 >= 0.0, "L2 penalty must be non-negative");
    require(omega > 0.0, "omega must be positive");
    if (mode == TrainMode::Adaptive && optimizer != OptimizerKind::Sgd)
      throw InvalidArgument("adaptive training needs plain SGD; use mode 'precomputed' for " +
                            std::string(optimizer_name(optimizer)));
  }

  nlohmann::json to_json() const {
    return {{"epochs", epochs},
            {"lr", lr},
            {"l2", l2},
            {"omega", omega},
            {"mode", mode_name(mode)},
            {"optimizer", optimizer_name(optimizer)},
            {"seed", seed},
            {"train_fraction", train_fraction}};
  }

  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig()); }

  static TrainConfig from_json(const nlohmann::json& j, TrainConfig c) {
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.l2 = j.value("l2", c.l2);
    c.omega = j.value("omega", c.omega);
    if (j.contains("mode")) c.mode = mode_from_name(j.at("mode").get<std::string>());
    if (j.contains("optimizer"))
      c.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    return c;
  }
};

struct HistoryRow {
  std::size_t epoch;
  double total, recon, map;
};

struct TrainResult {
  std::vector<HistoryRow> history;  ///< row e holds the loss after e epochs
  bool aborted = false;             ///< stopped on a non-finite loss
  std::string message;
  std::vector<MeshPtr> master_meshes;  ///< adaptive modes: the master mesh after each growth
};

inline void write_history_csv(const std::filesystem::path& path,
                              const std::vector<HistoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,total,recon,map\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << io::exact(r.total) << ',' << io::exact(r.recon) << ','
        << io::exact(r.map) << '\n';
}

/// Replaces the model mesh by the master union with `mesh`, expanding the bundle.
/// Returns true when the mesh grew.
inline bool grow_master(RomModel& m, const MeshPtr& mesh) {
  const auto nm = build_neighbor_map(*m.bundle.mesh, *mesh);
  if (is_agglomerative(nm)) return false;
  auto master = share(master_mesh_union(*m.bundle.mesh, *mesh, nm));
  if (master->size() == m.bundle.mesh->size()) return false;
  m.bundle = expand(m.bundle, std::move(master), Precondition::Trust);
  return true;
}

using EpochCallback = std::function<void(const HistoryRow&)>;

inline TrainResult train(RomModel& m, const std::vector<Sample>& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  require(!data.empty(), "no training samples");
  m.omega = cfg.omega;
  m.validate();
  TrainResult result;
  PlanCache cache;

  auto record = [&](std::size_t epoch) {
    const auto l = loss_and_gradient(m, data, cache, nullptr);
    result.history.push_back({epoch, l.total, l.recon, l.map});
    if (on_epoch) on_epoch(result.history.back());
  };

  if (cfg.mode == TrainMode::PrecomputedAdaptive) {
    for (const auto& s : data)
      if (grow_master(m, s.mesh)) result.master_meshes.push_back(m.bundle.mesh);
  }

  try {
    record(0);
    Optimizer opt(cfg.optimizer, cfg.lr, cfg.l2);
    if (cfg.mode != TrainMode::Adaptive) {
      for (std::size_t e = 1; e <= cfg.epochs; ++e) {
        RomGrad g = RomGrad::zeros_like(m);
        loss_and_gradient(m, data, cache, &g);
        auto p = blocks(m);
        auto gb = blocks(g);
        opt.step(p, gb);
        if (!m.finite()) throw Error("non-finite loss");
        record(e);
      }
    } else {
      double n_sum = 0.0;
      for (const auto& s : data) n_sum += static_cast<double>(s.u.size());
      Rng rng(cfg.seed);
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t e = 1; e <= cfg.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
          if (grow_master(m, data[i].mesh)) result.master_meshes.push_back(m.bundle.mesh);
          RomGrad g = RomGrad::zeros_like(m);
          // T times the sample's share of the objective, so one epoch of
          // per-sample steps sums to T times the full-batch gradient.
          const double w = static_cast<double>(data[i].u.size()) / n_sum;
          weighted_loss(m, data, {i}, {w}, cache, &g);
          auto p = blocks(m);
          auto gb = blocks(g);
          opt.step(p, gb);
          if (!m.finite()) throw Error("non-finite loss");
        }
        record(e);
      }
    }
  } catch (const Error& e) {
    if (std::string(e.what()) != "non-finite loss") throw;
    result.aborted = true;
    result.message = e.what();
  }
  return result;
}

/// dec^{M_o -> target}(map(mu)) for every column of `mus`.
inline Matrix predict_batch(const RomModel& m, const Matrix& mus, const MeshPtr& target) {
  require(target && !target->empty(), "empty mesh");
  require(mus.rows() == static_cast<Eigen::Index>(m.n_mu), "parameter length mismatch");
  const WeightBundle wb = bundle_on(m, target);
  DenseTape tape;
  const Matrix z = m.mapper.empty() ? mus : m.mapper.forward(mus, tape);
  const Matrix g = m.dec_hidden.empty() ? z : m.dec_hidden.forward(z, tape);
  Matrix u = wb.w_dec * g;
  u.colwise() += wb.b_dec;
  return u;
}

inline Vector predict(const RomModel& m, const Vector& mu, const MeshPtr& target) {
  return predict_batch(m, Matrix(mu), target).col(0);
}

/// Mean over samples of 100 ||u_hat - u|| / ||u||. Zero-norm samples are
/// skipped with a warning on stderr.
inline double mean_relative_error(const std::vector<Vector>& predicted,
                                  const std::vector<Vector>& truth,
                                  std::vector<double>* per_sample = nullptr) {
  require(!truth.empty(), "empty test set");
  require(predicted.size() == truth.size(), "prediction count mismatch");
  double sum = 0.0;
  std::size_t used = 0;
  if (per_sample) per_sample->clear();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(predicted[i].size() == truth[i].size(), "prediction length mismatch");
    const double nu = truth[i].norm();
    if (nu == 0.0) {
      std::cerr << "warning: sample " << i << " has a zero field and is excluded\n";
      if (per_sample) per_sample->push_back(std::nan(""));
      continue;
    }
    const double e = 100.0 * (predicted[i] - truth[i]).norm() / nu;
    if (per_sample) per_sample->push_back(e);
    sum += e;
    ++used;
  }
  require(used > 0, "every test sample has a zero field");
  return sum / static_cast<double>(used);
}

/// Mean relative error of the model on `mus` (one parameter per column)
/// against `truth` (one field per column) on `eval_mesh`.
inline double mean_relative_error(const RomModel& m, const Matrix& mus, const Matrix& truth,
                                  const MeshPtr& eval_mesh,
                                  std::vector<double>* per_sample = nullptr) {
  require(mus.cols() == truth.cols(), "parameter/field count mismatch");
  const Matrix pred = predict_batch(m, mus, eval_mesh);
  std::vector<Vector> p, t;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    p.emplace_back(pred.col(c));
    t.emplace_back(truth.col(c));
  }
  return mean_relative_error(p, t, per_sample);
}

// Checkpoint: bundle files, hidden/mapper blobs and checkpoint.json.
inline void save_model(const std::filesystem::path& dir, const RomModel& m,
                       const TrainConfig& cfg) {
  save_bundle(dir, m.bundle);
  nlohmann::json j = {{"omega", m.omega},
                      {"latent_dim", m.latent_dim},
                      {"n_mu", m.n_mu},
                      {"enc_hidden", save_dense(dir, "enc", m.enc_hidden)},
                      {"dec_hidden", save_dense(dir, "dec", m.dec_hidden)},
                      {"mapper", save_dense(dir, "map", m.mapper)},
                      {"train", cfg.to_json()}};
  std::ofstream out(dir / "checkpoint.json");
  if (!out) throw IoError("cannot write " + (dir / "checkpoint.json").string());
  out << j.dump(2) << '\n';
}

inline RomModel load_model(const std::filesystem::path& dir, TrainConfig* cfg = nullptr) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) throw IoError("cannot open " + (dir / "checkpoint.json").string());
  try {
    nlohmann::json j;
    in >> j;
    RomModel m;
    m.bundle = load_bundle(dir);
    m.omega = j.at("omega").get<double>();
    m.latent_dim = j.at("latent_dim").get<std::size_t>();
    m.n_mu = j.at("n_mu").get<std::size_t>();
    m.enc_hidden = load_dense(dir, j.at("enc_hidden"));
    m.dec_hidden = load_dense(dir, j.at("dec_hidden"));
    m.mapper = load_dense(dir, j.at("mapper"));
    m.validate();
    if (cfg) *cfg = TrainConfig::from_json(j.at("train"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint in " + dir.string() + ": " + e.what());
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError("bad checkpoint in " + dir.string() + ": " + e.what());
  }
}

}  // namespace gfnrom
