#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "uavisac/types.hpp"

namespace uavisac {

/// Fully connected network with SiLU hidden activations and a linear output.
/// Inputs and outputs are column-major batches: one sample per column.
template <typename T>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix w;
    Vector b;
  };

  struct Cache {
    std::vector<Matrix> inputs;  // input of each layer
    std::vector<Matrix> pre;     // pre-activation of each hidden layer
  };

  struct Grad {
    std::vector<Matrix> dw;
    std::vector<Vector> db;

    void zero() {
      for (auto& m : dw) m.setZero();
      for (auto& v : db) v.setZero();
    }
    T squared_norm() const {
      T s = 0;
      for (const auto& m : dw) s += m.squaredNorm();
      for (const auto& v : db) s += v.squaredNorm();
      return s;
    }
  };

  Mlp() = default;

  /// widths = {in, hidden..., out}. Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  template <typename Rng>
  Mlp(std::vector<int> widths, Rng& rng) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw Error("Mlp: need at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
      const int in = widths_[i], out = widths_[i + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      Layer l{Matrix(out, in), Vector(out)};
      for (Eigen::Index c = 0; c < l.w.cols(); ++c)
        for (Eigen::Index r = 0; r < l.w.rows(); ++r) l.w(r, c) = static_cast<T>(dist(rng));
      for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = static_cast<T>(dist(rng));
      layers_.push_back(std::move(l));
    }
  }

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// sum over layers of (in + 1) * out.
  long parameter_count() const {
    long n = 0;
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) n += static_cast<long>(widths_[i] + 1) * widths_[i + 1];
    return n;
  }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    if (cache) {
      cache->inputs.resize(layers_.size());
      cache->pre.resize(layers_.size() - 1);
    }
    Matrix h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (cache) cache->inputs[i] = h;
      Matrix z = layers_[i].w * h;
      z.colwise() += layers_[i].b;
      if (i + 1 < layers_.size()) {
        if (cache) cache->pre[i] = z;
        h = (z.array() / (T(1) + (-z.array()).exp())).matrix();
      } else {
        h = std::move(z);
      }
    }
    return h;
  }

  /// Back-propagates dL/dy; accumulates parameter gradients into `grad` when
  /// given and returns dL/dx.
  Matrix backward(const Cache& cache, const Matrix& dy, Grad* grad) const {
    Matrix delta = dy;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (i + 1 < layers_.size()) {
        const auto z = cache.pre[i].array();
        const auto s = (T(1) / (T(1) + (-z).exp())).eval();
        delta.array() *= s * (T(1) + z * (T(1) - s));
      }
      if (grad) {
        grad->dw[i].noalias() += delta * cache.inputs[i].transpose();
        grad->db[i] += delta.rowwise().sum();
      }
      delta = (layers_[i].w.transpose() * delta).eval();
    }
    return delta;
  }

  Grad make_grad() const {
    Grad g;
    for (const auto& l : layers_) {
      g.dw.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
      g.db.push_back(Vector::Zero(l.b.size()));
    }
    return g;
  }

  /// this = tau * src + (1 - tau) * this, elementwise.
  void soft_update_from(const Mlp& src, T tau) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].w = tau * src.layers_[i].w + (T(1) - tau) * layers_[i].w;
      layers_[i].b = tau * src.layers_[i].b + (T(1) - tau) * layers_[i].b;
    }
  }

  /// Flat copy of all parameters, layer by layer, weights (column-major) then bias.
  std::vector<T> flat() const {
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(parameter_count()));
    for (const auto& l : layers_) {
      out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
      out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
    }
    return out;
  }

  void set_flat(const std::vector<T>& values) {
    if (static_cast<long>(values.size()) != parameter_count()) throw Error("Mlp: flat parameter size mismatch");
    auto it = values.begin();
    for (auto& l : layers_) {
      std::copy(it, it + l.w.size(), l.w.data());
      it += l.w.size();
      std::copy(it, it + l.b.size(), l.b.data());
      it += l.b.size();
    }
  }

  template <typename U>
  Mlp<U> cast() const {
    Mlp<U> out;
    out.widths_ = widths_;
    for (const auto& l : layers_) out.layers_.push_back({l.w.template cast<U>(), l.b.template cast<U>()});
    return out;
  }

 private:
  template <typename>
  friend class Mlp;
  std::vector<int> widths_;
  std::vector<Layer> layers_;
};

/// Adam with global gradient-norm clipping.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp<T>& net, double lr, double clip_norm) : lr_(lr), clip_(clip_norm) {
    m_ = net.make_grad();
    v_ = net.make_grad();
  }

  void step(Mlp<T>& net, typename Mlp<T>::Grad& grad) {
    ++t_;
    const T norm = std::sqrt(grad.squared_norm());
    const T scale = (clip_ > 0 && norm > T(clip_)) ? T(clip_) / norm : T(1);
    const T b1 = T(0.9), b2 = T(0.999), eps = T(1e-8);
    const T c1 = T(1) - std::pow(b1, static_cast<T>(t_));
    const T c2 = T(1) - std::pow(b2, static_cast<T>(t_));
    const T lr = static_cast<T>(lr_);
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].w, grad.dw[i] * scale, m_.dw[i], v_.dw[i], b1, b2, c1, c2, lr, eps);
      update(layers[i].b, grad.db[i] * scale, m_.db[i], v_.db[i], b1, b2, c1, c2, lr, eps);
    }
  }

  long steps() const { return t_; }

 private:
  template <typename P, typename G, typename S>
  static void update(P& param, const G& g, S& m, S& v, T b1, T b2, T c1, T c2, T lr, T eps) {
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  double lr_ = 1e-4;
  double clip_ = 0.0;
  long t_ = 0;
  typename Mlp<T>::Grad m_;
  typename Mlp<T>::Grad v_;
};

/// Adam for a single scalar parameter.
class ScalarAdam {
 public:
  explicit ScalarAdam(double lr = 1e-4) : lr_(lr) {}
  double step(double param, double grad) {
    ++t_;
    m_ = 0.9 * m_ + 0.1 * grad;
    v_ = 0.999 * v_ + 0.001 * grad * grad;
    const double mh = m_ / (1.0 - std::pow(0.9, static_cast<double>(t_)));
    const double vh = v_ / (1.0 - std::pow(0.999, static_cast<double>(t_)));
    return param - lr_ * mh / (std::sqrt(vh) + 1e-8);
  }

 private:
  double lr_;
  double m_ = 0.0;
  double v_ = 0.0;
  long t_ = 0;
};

}  // namespace uavisac
