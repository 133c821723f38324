// SPDX-License-Identifier: Apache-2.0
//
// Empirical checks of the cross-resolution error bounds for a trained model:
// ROM prediction, mapper and autoencoder bounds on a new mesh in terms of
// their errors on the model mesh and the nearest-neighbour field gap delta.

#pragma once

#include "gfnrom/common.hpp"
#include "gfnrom/gfn.hpp"
#include "gfnrom/mesh.hpp"
#include "gfnrom/rom.hpp"

#include <nlohmann/json.hpp>

namespace gfnrom {

/// Max absolute row sum.
inline double inf_norm(const Matrix& w) {
  return w.rows() == 0 ? 0.0 : w.cwiseAbs().rowwise().sum().maxCoeff();
}

/// max |u_o(x_k) - u_n(x_j)| over node pairs related by either arrow.
inline double compute_delta(const Vector& u_o, const Vector& u_n, const NeighborMap& nm) {
  require(static_cast<std::size_t>(u_o.size()) == nm.fwd.size(), "origin field length mismatch");
  require(static_cast<std::size_t>(u_n.size()) == nm.bwd.size(), "new field length mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < nm.fwd.size(); ++k)
    d = std::max(d, std::abs(u_o(static_cast<Eigen::Index>(k)) -
                             u_n(static_cast<Eigen::Index>(nm.fwd[k]))));
  for (std::size_t j = 0; j < nm.bwd.size(); ++j)
    d = std::max(d, std::abs(u_o(static_cast<Eigen::Index>(nm.bwd[j])) -
                             u_n(static_cast<Eigen::Index>(j))));
  return d;
}

/// One sample seen on both meshes.
struct BoundSample {
  Vector mu;
  Vector u_o;  ///< field on the model mesh
  Vector u_n;  ///< field on the new mesh
};

/// Weight factors entering the right-hand sides.
struct BoundNorms {
  double lipschitz = 1.0;    ///< C
  double w_enc = 0.0;        ///< ||W_enc||
  double w_dec = 0.0;        ///< ||W_dec||
  double enc_product = 1.0;  ///< prod over encoder hidden layers
  double all_product = 1.0;  ///< prod over every hidden layer
  std::size_t p = 0;         ///< encoder hidden layers
  std::size_t q = 0;         ///< all hidden layers

  double mapper_factor() const {
    return std::pow(lipschitz, static_cast<double>(p + 1)) * w_enc * enc_product;
  }
  double autoencoder_factor() const {
    return std::pow(lipschitz, static_cast<double>(q + 1)) * w_dec * w_enc * all_product;
  }
};

inline BoundNorms bound_norms(const RomModel& m) {
  BoundNorms n;
  n.lipschitz = std::max(lipschitz_constant(m.enc_hidden.activation()),
                         lipschitz_constant(m.dec_hidden.activation()));
  n.w_enc = inf_norm(m.bundle.w_enc);
  n.w_dec = inf_norm(m.bundle.w_dec);
  for (const auto& l : m.enc_hidden.layers()) n.enc_product *= inf_norm(l.w);
  n.all_product = n.enc_product;
  for (const auto& l : m.dec_hidden.layers()) n.all_product *= inf_norm(l.w);
  n.p = m.enc_hidden.depth();
  n.q = m.enc_hidden.depth() + m.dec_hidden.depth();
  return n;
}

/// Errors of the model on its own mesh, maximised over the given samples.
struct OriginErrors {
  double tau = 0.0;    ///< ROM prediction error
  double alpha = 0.0;  ///< mapper error in latent space
  double beta = 0.0;   ///< autoencoder reconstruction error
};

inline OriginErrors origin_errors(const RomModel& m, const std::vector<BoundSample>& samples) {
  OriginErrors e;
  const WeightBundle& wb = m.bundle;
  for (const auto& s : samples) {
    const Vector mz = map_params(m.mapper, s.mu);
    const Vector ez = encode(wb, m.enc_hidden, s.u_o);
    e.tau = std::max(e.tau, (s.u_o - decode(wb, m.dec_hidden, mz)).cwiseAbs().maxCoeff());
    e.alpha = std::max(e.alpha, (mz - ez).cwiseAbs().maxCoeff());
    e.beta = std::max(e.beta, (s.u_o - decode(wb, m.dec_hidden, ez)).cwiseAbs().maxCoeff());
  }
  return e;
}

/// Outcome of one bound on one sample. Each entry of `lhs` must not exceed `rhs`.
struct BoundCheck {
  Vector lhs;
  double rhs = 0.0;
  double max_lhs = 0.0;
  double min_slack = 0.0;  ///< rhs - max_lhs
  double max_slack = 0.0;  ///< rhs - min_lhs
  std::size_t violations = 0;
  bool pass = true;
};

/// Round-off allowance when comparing a computed error with its bound.
inline double bound_tolerance(double rhs) { return 1e-12 * std::max(1.0, std::abs(rhs)); }

inline BoundCheck make_check(Vector lhs, double rhs) {
  BoundCheck c;
  c.rhs = rhs;
  c.max_lhs = lhs.size() ? lhs.maxCoeff() : 0.0;
  c.min_slack = rhs - c.max_lhs;
  c.max_slack = rhs - (lhs.size() ? lhs.minCoeff() : 0.0);
  const double tol = bound_tolerance(rhs);
  for (Eigen::Index i = 0; i < lhs.size(); ++i)
    if (!(lhs(i) <= rhs + tol)) ++c.violations;
  c.pass = c.violations == 0;
  c.lhs = std::move(lhs);
  return c;
}

/// |u_n - dec^{o->n}(map(mu))| <= tau + delta at every node of the new mesh.
inline BoundCheck verify_rom_bound(const RomModel& m, const WeightBundle& on_new,
                                   const BoundSample& s, double tau, double delta) {
  const Vector pred = decode(on_new, m.dec_hidden, map_params(m.mapper, s.mu));
  return make_check((s.u_n - pred).cwiseAbs(), tau + delta);
}

/// |map(mu) - enc^{o->n}(u_n)| <= alpha + delta C^{P+1} ||W_enc|| prod ||W^(p)||
/// at every latent index.
inline BoundCheck verify_mapper_bound(const RomModel& m, const WeightBundle& on_new,
                                      const BoundSample& s, double alpha, double delta,
                                      const BoundNorms& n) {
  const Vector d = map_params(m.mapper, s.mu) - encode(on_new, m.enc_hidden, s.u_n);
  return make_check(d.cwiseAbs(), alpha + delta * n.mapper_factor());
}

/// |u_n - dec(enc(u_n))| <= beta + delta + delta C^{Q+1} ||W_dec|| ||W_enc|| prod ||W^(p)||
/// at every node of the new mesh.
inline BoundCheck verify_autoencoder_bound(const RomModel& m, const WeightBundle& on_new,
                                           const BoundSample& s, double beta, double delta,
                                           const BoundNorms& n) {
  const Vector r = s.u_n - decode(on_new, m.dec_hidden, encode(on_new, m.enc_hidden, s.u_n));
  return make_check(r.cwiseAbs(), beta + delta + delta * n.autoencoder_factor());
}

struct BoundSummary {
  std::string name;
  std::size_t samples = 0;
  std::size_t checked = 0;  ///< node or latent entries
  std::size_t violations = 0;
  double max_lhs = 0.0;
  double min_rhs = std::numeric_limits<double>::infinity();
  double min_slack = std::numeric_limits<double>::infinity();
  double max_slack = -std::numeric_limits<double>::infinity();
  bool pass = true;

  void add(const BoundCheck& c) {
    ++samples;
    checked += static_cast<std::size_t>(c.lhs.size());
    violations += c.violations;
    max_lhs = std::max(max_lhs, c.max_lhs);
    min_rhs = std::min(min_rhs, c.rhs);
    min_slack = std::min(min_slack, c.min_slack);
    max_slack = std::max(max_slack, c.max_slack);
    pass = pass && c.pass;
  }
};

struct BoundReport {
  double delta = 0.0;  ///< max over samples
  OriginErrors origin;
  BoundNorms norms;
  std::vector<double> sample_delta;
  BoundSummary rom{"rom"}, mapper{"mapper"}, autoencoder{"autoencoder"};
  std::vector<BoundCheck> rom_checks, mapper_checks, autoencoder_checks;

  bool pass() const { return rom.pass && mapper.pass && autoencoder.pass; }
};

/// Checks all three bounds for every sample. The model mesh is the origin;
/// `new_mesh` is where the model is evaluated. delta is taken per sample.
inline BoundReport verify_bounds(const RomModel& m, const MeshPtr& new_mesh,
                                 const std::vector<BoundSample>& samples) {
  require(!samples.empty(), "no samples to check");
  require(new_mesh && !new_mesh->empty(), "empty mesh");
  for (const auto& s : samples) {
    require(s.u_o.size() == static_cast<Eigen::Index>(m.bundle.nodes()),
            "origin field does not match the model mesh");
    require(s.u_n.size() == static_cast<Eigen::Index>(new_mesh->size()),
            "new field does not match the new mesh");
  }
  BoundReport r;
  r.origin = origin_errors(m, samples);
  r.norms = bound_norms(m);
  const NeighborMap nm = build_neighbor_map(*m.bundle.mesh, *new_mesh);
  const WeightBundle on_new = bundle_on(m, new_mesh);
  for (const auto& s : samples) {
    const double d = compute_delta(s.u_o, s.u_n, nm);
    r.sample_delta.push_back(d);
    r.delta = std::max(r.delta, d);
    r.rom_checks.push_back(verify_rom_bound(m, on_new, s, r.origin.tau, d));
    r.mapper_checks.push_back(verify_mapper_bound(m, on_new, s, r.origin.alpha, d, r.norms));
    r.autoencoder_checks.push_back(
        verify_autoencoder_bound(m, on_new, s, r.origin.beta, d, r.norms));
    r.rom.add(r.rom_checks.back());
    r.mapper.add(r.mapper_checks.back());
    r.autoencoder.add(r.autoencoder_checks.back());
  }
  return r;
}

inline nlohmann::json summary_json(const BoundSummary& s) {
  return {{"samples", s.samples},     {"checked", s.checked},     {"violations", s.violations},
          {"max_lhs", s.max_lhs},     {"min_rhs", s.min_rhs},     {"min_slack", s.min_slack},
          {"max_slack", s.max_slack}, {"pass", s.pass}};
}

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json per_sample = nlohmann::json::array();
  for (std::size_t i = 0; i < r.sample_delta.size(); ++i)
    per_sample.push_back({{"delta", r.sample_delta[i]},
                          {"rom", {{"max_lhs", r.rom_checks[i].max_lhs}, {"rhs", r.rom_checks[i].rhs}}},
                          {"mapper",
                           {{"max_lhs", r.mapper_checks[i].max_lhs}, {"rhs", r.mapper_checks[i].rhs}}},
                          {"autoencoder",
                           {{"max_lhs", r.autoencoder_checks[i].max_lhs},
                            {"rhs", r.autoencoder_checks[i].rhs}}}});
  return {{"delta", r.delta},
          {"tau", r.origin.tau},
          {"alpha", r.origin.alpha},
          {"beta", r.origin.beta},
          {"C", r.norms.lipschitz},
          {"P", r.norms.p},
          {"Q", r.norms.q},
          {"weight_norms",
           {{"w_enc", r.norms.w_enc},
            {"w_dec", r.norms.w_dec},
            {"encoder_hidden_product", r.norms.enc_product},
            {"hidden_product", r.norms.all_product}}},
          {"bounds",
           {{"rom", summary_json(r.rom)},
            {"mapper", summary_json(r.mapper)},
            {"autoencoder", summary_json(r.autoencoder)}}},
          {"pass", r.pass()},
          {"samples", per_sample}};
}

inline void write_bound_summary_csv(const std::filesystem::path& path, const BoundReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "bound,samples,max_lhs,min_rhs,max_slack,pass\n";
  for (const BoundSummary* s : {&r.rom, &r.mapper, &r.autoencoder})
    out << s->name << ',' << s->samples << ',' << io::exact(s->max_lhs) << ','
        << io::exact(s->min_rhs) << ',' << io::exact(s->max_slack) << ','
        << (s->pass ? "true" : "false") << '\n';
}

}  // namespace gfnrom
