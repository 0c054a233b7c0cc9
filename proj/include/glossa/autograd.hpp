#pragma once

// Minimal reverse-mode differentiation over Eigen vectors: a tape of nodes,
// each holding its value, its gradient and a backward rule.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace glossa::ad {

struct Parameter {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m;  // Adam moments
  Eigen::MatrixXd v;

  Parameter() = default;
  Parameter(Eigen::Index rows, Eigen::Index cols)
      : value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)),
        m(Eigen::MatrixXd::Zero(rows, cols)),
        v(Eigen::MatrixXd::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

struct AdamOptions {
  double lr = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam step at time `t` (1-based) over every parameter.
inline void adam_step(const std::vector<Parameter*>& params, const AdamOptions& o, long t) {
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
  for (auto* p : params) {
    p->m = o.beta1 * p->m + (1.0 - o.beta1) * p->grad;
    p->v = o.beta2 * p->v + (1.0 - o.beta2) * p->grad.cwiseProduct(p->grad);
    p->value.array() -= o.lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + o.eps);
  }
}

class Tape {
 public:
  using Id = int;

  /// Test hook: replaces the tanh derivative with a wrong one.
  bool corrupt_tanh_backward = false;

  const Eigen::VectorXd& value(Id n) const { return nodes_[static_cast<std::size_t>(n)].value; }
  const Eigen::VectorXd& grad(Id n) const { return nodes_[static_cast<std::size_t>(n)].grad; }
  std::size_t size() const { return nodes_.size(); }

  Id constant(Eigen::VectorXd v) { return push(std::move(v), nullptr); }

  /// Column `col` of a parameter matrix.
  Id lookup(Parameter& p, Eigen::Index col) {
    return push(p.value.col(col), [&p, col](Tape& t, Id self) { p.grad.col(col) += t.g(self); });
  }

  /// W x for a parameter matrix W.
  Id matvec(Parameter& w, Id x) {
    return push(w.value * value(x), [&w, x](Tape& t, Id self) {
      const auto& g = t.g(self);
      w.grad.noalias() += g * t.value(x).transpose();
      t.g(x).noalias() += w.value.transpose() * g;
    });
  }

  /// x + b for a parameter column b.
  Id add_bias(Id x, Parameter& b) {
    return push(value(x) + b.value.col(0), [&b, x](Tape& t, Id self) {
      b.grad.col(0) += t.g(self);
      t.g(x) += t.g(self);
    });
  }

  Id add(Id a, Id b) {
    return push(value(a) + value(b), [a, b](Tape& t, Id self) {
      t.g(a) += t.g(self);
      t.g(b) += t.g(self);
    });
  }

  Id mul(Id a, Id b) {
    return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, Id self) {
      t.g(a) += t.g(self).cwiseProduct(t.value(b));
      t.g(b) += t.g(self).cwiseProduct(t.value(a));
    });
  }

  Id sigmoid(Id x) {
    Eigen::VectorXd y = (1.0 + (-value(x).array()).exp()).inverse().matrix();
    return push(std::move(y), [x](Tape& t, Id self) {
      const auto& y = t.value(self);
      t.g(x).array() += t.g(self).array() * y.array() * (1.0 - y.array());
    });
  }

  Id tanh(Id x) {
    return push(value(x).array().tanh().matrix(), [x](Tape& t, Id self) {
      const auto& y = t.value(self);
      if (t.corrupt_tanh_backward)
        t.g(x).array() += t.g(self).array() * (1.0 - y.array());
      else
        t.g(x).array() += t.g(self).array() * (1.0 - y.array().square());
    });
  }

  Id concat(Id a, Id b) {
    const auto na = value(a).size();
    Eigen::VectorXd v(na + value(b).size());
    v << value(a), value(b);
    return push(std::move(v), [a, b, na](Tape& t, Id self) {
      const auto& g = t.g(self);
      t.g(a) += g.head(na);
      t.g(b) += g.tail(g.size() - na);
    });
  }

  Id slice(Id x, Eigen::Index start, Eigen::Index len) {
    return push(value(x).segment(start, len),
                [x, start, len](Tape& t, Id self) { t.g(x).segment(start, len) += t.g(self); });
  }

  /// Numerically stable log-softmax.
  Id log_softmax(Id x) {
    const auto& v = value(x);
    const double mx = v.maxCoeff();
    const double lse = mx + std::log((v.array() - mx).exp().sum());
    return push((v.array() - lse).matrix(), [x](Tape& t, Id self) {
      const auto& g = t.g(self);
      const Eigen::VectorXd p = t.value(self).array().exp().matrix();
      t.g(x) += g - p * g.sum();
    });
  }

  /// Scalar node holding x[i].
  Id pick(Id x, Eigen::Index i) {
    return push(Eigen::VectorXd::Constant(1, value(x)(i)), [x, i](Tape& t, Id self) { t.g(x)(i) += t.g(self)(0); });
  }

  /// Scalar: -sum of the given scalar nodes.
  Id negative_sum(const std::vector<Id>& xs) {
    double s = 0;
    for (Id x : xs) s += value(x)(0);
    return push(Eigen::VectorXd::Constant(1, -s), [xs](Tape& t, Id self) {
      for (Id x : xs) t.g(x)(0) -= t.g(self)(0);
    });
  }

  /// Backpropagates from a scalar root into node and parameter gradients.
  void backward(Id root) {
    for (auto& n : nodes_) n.grad = Eigen::VectorXd::Zero(n.value.size());
    nodes_[static_cast<std::size_t>(root)].grad.setOnes();
    for (Id i = root; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back) n.back(*this, i);
    }
  }

 private:
  struct Node {
    Eigen::VectorXd value;
    Eigen::VectorXd grad;
    std::function<void(Tape&, Id)> back;
  };

  Eigen::VectorXd& g(Id n) { return nodes_[static_cast<std::size_t>(n)].grad; }

  Id push(Eigen::VectorXd v, std::function<void(Tape&, Id)> back) {
    nodes_.push_back({std::move(v), Eigen::VectorXd(), std::move(back)});
    return static_cast<Id>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

}  // namespace glossa::ad
