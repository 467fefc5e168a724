#pragma once

// Dense reverse-mode differentiation over row-major matrices. Only the ops
// the manifold losses need are provided. Each training step records a fresh
// Tape; nodes are appended in evaluation order, so backward is a single
// reverse sweep.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fame/linalg.hpp"

namespace fame::ad {

inline constexpr double kNormEpsilon = 1e-8;

class Tape;

/// Handle to a tape node. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using Gradients = std::map<std::string, Matrix>;

struct Parameter {
  Matrix value;
  Matrix first_moment;
  Matrix second_moment;
};

/// Named trainable tensors plus their optimizer state.
class ParamStore {
 public:
  void add(const std::string& name, Matrix value);
  bool contains(const std::string& name) const { return params_.contains(name); }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Matrix& value(const std::string& name) { return at(name).value; }
  const Matrix& value(const std::string& name) const { return at(name).value; }
  const std::map<std::string, Parameter>& entries() const { return params_; }
  std::map<std::string, Parameter>& entries() { return params_; }
  std::size_t parameter_count() const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  std::map<std::string, Parameter> params_;
  std::int64_t step_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Matrix value);
  // Leaf bound to a stored parameter; repeated calls share one node.
  Var param(const ParamStore& store, const std::string& name);

  Var record(Matrix value, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  // Gradient of the last backward() target; zero-shaped if unreached.
  Matrix grad(std::size_t id) const;
  void accumulate(std::size_t id, const Matrix& g);
  template <class Expr>
  void accumulate_expr(std::size_t id, const Expr& g) {
    auto& n = nodes_[id];
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }
  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }

  /// Reverse sweep from a 1x1 node. Throws ArgumentError otherwise.
  void backward(Var loss);

  /// Gradient for every bound parameter (zeros when off-path), keyed by
  /// parameter name. Call after backward().
  Gradients parameter_gradients(const ParamStore& store) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> bound_;
};

// Forward primitives. Shapes are checked; mismatches throw ArgumentError.
Var matmul(Var a, Var b);
Var add_bias(Var a, Var bias);  // bias is 1 x cols
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var relu(Var a);
Var concat_cols(Var a, Var b);
Var gather_rows(Var a, std::span<const int> rows);
Var l2_norm_sq(Var a);                // per row -> n x 1
Var cosine_sim(Var a, Var b);         // per row -> n x 1, 0 when a norm < eps
Var hinge(Var x, double margin);      // max(0, margin - x)
Var hinge(Var x, const Matrix& margins);
Var mul_const(Var a, const Matrix& c);  // elementwise
Var scale(Var a, double s);
Var sum(Var a);
Var mean(Var a);
/// Σ w_k · term_k over 1x1 terms.
Var weighted_sum(std::span<const std::pair<double, Var>> terms);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected adaptive-moment update. Parameters absent from
/// `grads` are treated as having zero gradient.
void adam_step(ParamStore& store, const Gradients& grads, double learning_rate,
               const AdamConfig& config = {});

/// Builds a scalar objective on a fresh tape from parameters in the store.
using Objective = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares tape gradients against central differences,
/// |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
GradCheckResult grad_check(const Objective& objective, ParamStore& store, double eps = 1e-5);

}  // namespace fame::ad
