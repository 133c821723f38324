// SPDX-License-Identifier: Apache-2.0
//
// Dense feedforward layers with hand-written reverse mode, Glorot
// initialisation, and SGD/Adam optimisers.

#pragma once

#include "gfnrom/common.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <span>
#include <string_view>

namespace gfnrom {

using Rng = std::mt19937_64;

enum class Activation { Tanh, Identity };

inline double activate(Activation a, double x) {
  return a == Activation::Tanh ? std::tanh(x) : x;
}

/// Derivative expressed through the activation output y = act(x).
inline double activate_grad_from_output(Activation a, double y) {
  return a == Activation::Tanh ? 1.0 - y * y : 1.0;
}

/// Lipschitz constant of each activation, used by the error bounds.
inline double lipschitz_constant(Activation a) {
  switch (a) {
    case Activation::Tanh:
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

inline std::string_view activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "identity";
}

inline Activation activation_from_name(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

/// Glorot-uniform weights, zero biases.
inline Matrix glorot_uniform(Eigen::Index fan_out, Eigen::Index fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_out, fan_in);
  // Fill row-major so the draw order does not depend on Eigen's storage.
  for (Eigen::Index i = 0; i < fan_out; ++i)
    for (Eigen::Index j = 0; j < fan_in; ++j) w(i, j) = dist(rng);
  return w;
}

struct DenseLayer {
  Matrix w;  ///< out x in
  Vector b;  ///< out
};

/// Gradient buffers with the same layout as a DenseNet.
struct DenseGrad {
  std::vector<DenseLayer> layers;
};

/// Forward activations kept for the backward pass. Columns are samples.
struct DenseTape {
  std::vector<Matrix> values;  ///< values[0] = input, values[k+1] = output of layer k
};

/// A stack of affine layers, each followed by the activation except
/// (optionally) the last one. An empty net is the identity map.
class DenseNet {
 public:
  DenseNet() = default;

  /// `sizes` = {in, h1, ..., out}; fewer than two sizes yields an empty net.
  DenseNet(const std::vector<std::size_t>& sizes, bool activate_last, Rng& rng,
           Activation act = Activation::Tanh)
      : activation_(act), activate_last_(activate_last) {
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
      const auto in = static_cast<Eigen::Index>(sizes[k]);
      const auto out = static_cast<Eigen::Index>(sizes[k + 1]);
      layers_.push_back({glorot_uniform(out, in, rng), Vector::Zero(out)});
    }
  }

  DenseNet(std::vector<DenseLayer> layers, bool activate_last,
           Activation act = Activation::Tanh)
      : layers_(std::move(layers)), activation_(act), activate_last_(activate_last) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      require(layers_[k].b.size() == layers_[k].w.rows(), "bias length mismatch in layer " +
                                                               std::to_string(k));
      if (k > 0)
        require(layers_[k].w.cols() == layers_[k - 1].w.rows(),
                "layer " + std::to_string(k) + " does not chain with its predecessor");
    }
  }

  std::size_t depth() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  bool activate_last() const { return activate_last_; }
  Activation activation() const { return activation_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Eigen::Index input_size() const { return layers_.empty() ? -1 : layers_.front().w.cols(); }
  Eigen::Index output_size() const { return layers_.empty() ? -1 : layers_.back().w.rows(); }

  bool activated(std::size_t k) const { return k + 1 < layers_.size() || activate_last_; }

  Vector forward(const Vector& x) const {
    DenseTape tape;
    return forward(Matrix(x), tape).col(0);
  }

  Matrix forward(const Matrix& x, DenseTape& tape) const {
    if (!layers_.empty())
      require(x.rows() == layers_.front().w.cols(),
              "network expects input of length " + std::to_string(layers_.front().w.cols()) +
                  ", got " + std::to_string(x.rows()));
    tape.values.clear();
    tape.values.push_back(x);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      Matrix a = layers_[k].w * tape.values.back();
      a.colwise() += layers_[k].b;
      if (activated(k)) a = a.unaryExpr([this](double v) { return activate(activation_, v); });
      tape.values.push_back(std::move(a));
    }
    return tape.values.back();
  }

  /// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
  Matrix backward(const DenseTape& tape, const Matrix& grad_out, DenseGrad& grad) const {
    Matrix g = grad_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      if (activated(k)) {
        const Matrix& y = tape.values[k + 1];
        g.array() *= y.unaryExpr([this](double v) {
                        return activate_grad_from_output(activation_, v);
                      }).array();
      }
      grad.layers[k].w.noalias() += g * tape.values[k].transpose();
      grad.layers[k].b += g.rowwise().sum();
      g = layers_[k].w.transpose() * g;
    }
    return g;
  }

  DenseGrad zero_grad() const {
    DenseGrad g;
    for (const auto& l : layers_)
      g.layers.push_back({Matrix::Zero(l.w.rows(), l.w.cols()), Vector::Zero(l.b.size())});
    return g;
  }

  bool finite() const {
    for (const auto& l : layers_)
      if (!l.w.allFinite() || !l.b.allFinite()) return false;
    return true;
  }

 private:
  std::vector<DenseLayer> layers_;
  Activation activation_ = Activation::Tanh;
  bool activate_last_ = true;
};

/// A contiguous run of parameters (or of their gradients).
struct ParamBlock {
  double* data = nullptr;
  std::size_t size = 0;
  bool decay = false;  ///< weights decay under L2, biases do not
};

template <class Derived>
ParamBlock block_of(Eigen::PlainObjectBase<Derived>& m, bool decay) {
  return {m.data(), static_cast<std::size_t>(m.size()), decay};
}

inline void append_blocks(std::vector<ParamBlock>& out, DenseNet& net) {
  for (auto& l : net.layers()) {
    out.push_back(block_of(l.w, true));
    out.push_back(block_of(l.b, false));
  }
}

inline void append_blocks(std::vector<ParamBlock>& out, DenseGrad& grad) {
  for (auto& l : grad.layers) {
    out.push_back(block_of(l.w, true));
    out.push_back(block_of(l.b, false));
  }
}

enum class OptimizerKind { Sgd, Adam };

inline std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

inline OptimizerKind optimizer_from_name(std::string_view s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw InvalidArgument("unknown optimizer '" + std::string(s) + "'");
}

/// First-order optimiser over a list of parameter blocks.
///
/// The L2 penalty adds `l2 * w` to the gradient of every decaying block before
/// the update. Adam keeps moment buffers bound to the block sizes seen on the
/// first step; a later step with different sizes is an error.
class Optimizer {
 public:
  explicit Optimizer(OptimizerKind kind = OptimizerKind::Adam, double lr = 1e-3,
                     double l2 = 1e-5)
      : kind_(kind), lr_(lr), l2_(l2) {
    require(lr > 0.0, "learning rate must be positive");
    require(l2 >= 0.0, "L2 penalty must be non-negative");
  }

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  double l2() const { return l2_; }
  std::size_t steps() const { return t_; }

  void step(std::span<const ParamBlock> params, std::span<const ParamBlock> grads) {
    require(params.size() == grads.size(), "parameter/gradient block count mismatch");
    ++t_;
    if (kind_ == OptimizerKind::Adam && m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.size, 0.0);
        v_.emplace_back(p.size, 0.0);
      }
    }
    if (kind_ == OptimizerKind::Adam) {
      require(m_.size() == params.size(), "Adam state does not match the parameter layout");
    }
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b) {
      const ParamBlock& p = params[b];
      const ParamBlock& g = grads[b];
      require(p.size == g.size, "parameter/gradient block size mismatch");
      const double decay = p.decay ? l2_ : 0.0;
      if (kind_ == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < p.size; ++i) p.data[i] -= lr_ * (g.data[i] + decay * p.data[i]);
        continue;
      }
      require(m_[b].size() == p.size, "Adam state does not match the parameter layout");
      auto& m = m_[b];
      auto& v = v_[b];
      for (std::size_t i = 0; i < p.size; ++i) {
        const double gi = g.data[i] + decay * p.data[i];
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
        p.data[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  OptimizerKind kind_;
  double lr_;
  double l2_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Network files: one JSON description plus one blob per tensor.
inline nlohmann::json save_dense(const std::filesystem::path& dir, const std::string& name,
                                 const DenseNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& l = net.layers()[k];
    const std::string w = name + "_w" + std::to_string(k) + ".bin";
    const std::string b = name + "_b" + std::to_string(k) + ".bin";
    io::write_blob(dir / w, l.w);
    io::write_vector_blob(dir / b, l.b);
    layers.push_back({{"in", l.w.cols()}, {"out", l.w.rows()}, {"w", w}, {"b", b}});
  }
  return {{"activation", activation_name(net.activation())},
          {"activate_last", net.activate_last()},
          {"layers", layers}};
}

inline DenseNet load_dense(const std::filesystem::path& dir, const nlohmann::json& desc) {
  std::vector<DenseLayer> layers;
  for (const auto& l : desc.at("layers")) {
    const auto in = l.at("in").get<Eigen::Index>();
    const auto out = l.at("out").get<Eigen::Index>();
    layers.push_back({io::read_blob(dir / l.at("w").get<std::string>(), out, in),
                      io::read_vector_blob(dir / l.at("b").get<std::string>(), out)});
  }
  return DenseNet(std::move(layers), desc.at("activate_last").get<bool>(),
                  activation_from_name(desc.at("activation").get<std::string>()));
}

}  // namespace gfnrom
