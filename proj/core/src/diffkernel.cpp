#include "fame/diffkernel.hpp"

#include <algorithm>
#include <cmath>

#include "fame/errors.hpp"

namespace fame::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ArgumentError(what);
}

void require_same_tape(Var a, Var b) { require(&a.tape() == &b.tape(), "vars belong to different tapes"); }

void require_same_shape(Var a, Var b, const char* op) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()) + ")");
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  require(value().size() == 1, "scalar() on a non-scalar var");
  return value()(0, 0);
}

void ParamStore::add(const std::string& name, Matrix value) {
  require(!params_.contains(name), "duplicate parameter name");
  Parameter p;
  p.first_moment = Matrix::Zero(value.rows(), value.cols());
  p.second_moment = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  params_.emplace(name, std::move(p));
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Var Tape::constant(Matrix value) { return record(std::move(value), nullptr); }

Var Tape::param(const ParamStore& store, const std::string& name) {
  if (auto it = bound_.find(name); it != bound_.end()) return {this, it->second};
  Var v = record(store.value(name), nullptr);
  bound_.emplace(name, v.id());
  return v;
}

Var Tape::record(Matrix value, BackwardFn backward) {
  nodes_.push_back({std::move(value), Matrix(), std::move(backward)});
  return {this, nodes_.size() - 1};
}

Matrix Tape::grad(std::size_t id) const {
  const auto& n = nodes_[id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var loss) {
  require(&loss.tape() == this, "backward: loss from another tape");
  require(loss.value().rows() == 1 && loss.value().cols() == 1, "backward: loss must be a 1x1 scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, i);
  }
}

Gradients Tape::parameter_gradients(const ParamStore& store) const {
  Gradients out;
  for (const auto& [name, p] : store.entries()) {
    auto it = bound_.find(name);
    out.emplace(name, it == bound_.end() ? Matrix::Zero(p.value.rows(), p.value.cols()) : grad(it->second));
  }
  return out;
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) throw ArgumentError("matmul: inner dimensions differ");
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(a.value() * b.value(), [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    t.accumulate_expr(ia, g * t.value(ib).transpose());
    t.accumulate_expr(ib, t.value(ia).transpose() * g);
  });
}

Var add_bias(Var a, Var bias) {
  require_same_tape(a, bias);
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_bias: bias must be 1 x cols");
  const auto ia = a.id(), ib = bias.id();
  Matrix out = a.value();
  out.rowwise() += bias.value().row(0);
  return a.tape().record(std::move(out), [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    t.accumulate_expr(ia, g);
    t.accumulate_expr(ib, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), [ia, ib](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, t.upstream(self));
    t.accumulate_expr(ib, t.upstream(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(a.value() - b.value(), [ia, ib](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, t.upstream(self));
    t.accumulate_expr(ib, -t.upstream(self));
  });
}

Var relu(Var a) {
  const auto ia = a.id();
  return a.tape().record(a.value().cwiseMax(0.0), [ia](Tape& t, std::size_t self) {
    // Subgradient 0 at the kink.
    t.accumulate_expr(ia, (t.value(ia).array() > 0.0).select(t.upstream(self), 0.0));
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows(), "concat_cols: row counts differ");
  const auto ia = a.id(), ib = b.id();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  Matrix out(a.rows(), ca + cb);
  out << a.value(), b.value();
  return a.tape().record(std::move(out), [ia, ib, ca, cb](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    t.accumulate_expr(ia, g.leftCols(ca));
    t.accumulate_expr(ib, g.rightCols(cb));
  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  const auto ia = a.id();
  std::vector<int> idx(rows.begin(), rows.end());
  Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] >= 0 && idx[r] < a.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = a.value().row(idx[r]);
  }
  return a.tape().record(std::move(out), [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    Matrix scatter = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
    for (std::size_t r = 0; r < idx.size(); ++r) scatter.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
    t.accumulate(ia, scatter);
  });
}

Var l2_norm_sq(Var a) {
  const auto ia = a.id();
  return a.tape().record(a.value().rowwise().squaredNorm(), [ia](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    Matrix d = 2.0 * t.value(ia);
    d.array().colwise() *= g.col(0).array();
    t.accumulate(ia, d);
  });
}

Var cosine_sim(Var a, Var b) {
  require_same_shape(a, b, "cosine_sim");
  const auto ia = a.id(), ib = b.id();
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  const Eigen::Index n = x.rows();
  Vector na = x.rowwise().norm();
  Vector nb = y.rowwise().norm();
  Matrix out(n, 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    out(r, 0) = (na[r] < kNormEpsilon || nb[r] < kNormEpsilon) ? 0.0 : x.row(r).dot(y.row(r)) / (na[r] * nb[r]);
  }
  return a.tape().record(std::move(out), [ia, ib, na = std::move(na), nb = std::move(nb)](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    const Matrix& x = t.value(ia);
    const Matrix& y = t.value(ib);
    const Matrix& c = t.value(self);
    Matrix da = Matrix::Zero(x.rows(), x.cols());
    Matrix db = Matrix::Zero(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (na[r] < kNormEpsilon || nb[r] < kNormEpsilon) continue;
      const double inv = 1.0 / (na[r] * nb[r]);
      da.row(r) = g(r, 0) * (y.row(r) * inv - c(r, 0) * x.row(r) / (na[r] * na[r]));
      db.row(r) = g(r, 0) * (x.row(r) * inv - c(r, 0) * y.row(r) / (nb[r] * nb[r]));
    }
    t.accumulate(ia, da);
    t.accumulate(ib, db);
  });
}

Var hinge(Var x, const Matrix& margins) {
  require(margins.rows() == x.rows() && margins.cols() == x.cols(), "hinge: margin shape mismatch");
  const auto ix = x.id();
  Matrix active = ((margins - x.value()).array() > 0.0).cast<double>().matrix();
  Matrix out = (margins - x.value()).cwiseMax(0.0);
  return x.tape().record(std::move(out), [ix, active = std::move(active)](Tape& t, std::size_t self) {
    t.accumulate_expr(ix, -(t.upstream(self).cwiseProduct(active)));
  });
}

Var hinge(Var x, double margin) { return hinge(x, Matrix::Constant(x.rows(), x.cols(), margin)); }

Var mul_const(Var a, const Matrix& c) {
  require(c.rows() == a.rows() && c.cols() == a.cols(), "mul_const: shape mismatch");
  const auto ia = a.id();
  return a.tape().record(a.value().cwiseProduct(c), [ia, c](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, t.upstream(self).cwiseProduct(c));
  });
}

Var scale(Var a, double s) {
  const auto ia = a.id();
  return a.tape().record(a.value() * s, [ia, s](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, t.upstream(self) * s);
  });
}

Var sum(Var a) {
  const auto ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), [ia](Tape& t, std::size_t self) {
    const double g = t.upstream(self)(0, 0);
    t.accumulate_expr(ia, Matrix::Constant(t.value(ia).rows(), t.value(ia).cols(), g));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0.0) {
    Matrix zero = Matrix::Zero(1, 1);
    return a.tape().constant(std::move(zero));
  }
  return scale(sum(a), 1.0 / n);
}

Var weighted_sum(std::span<const std::pair<double, Var>> terms) {
  require(!terms.empty(), "weighted_sum: no terms");
  Tape& tape = terms.front().second.tape();
  Matrix out = Matrix::Zero(1, 1);
  std::vector<std::pair<double, std::size_t>> ids;
  for (const auto& [w, v] : terms) {
    require(&v.tape() == &tape, "weighted_sum: vars on different tapes");
    require(v.value().size() == 1, "weighted_sum: terms must be scalars");
    out(0, 0) += w * v.value()(0, 0);
    ids.emplace_back(w, v.id());
  }
  return tape.record(std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
    const double g = t.upstream(self)(0, 0);
    for (const auto& [w, id] : ids) t.accumulate_expr(id, Matrix::Constant(1, 1, w * g));
  });
}

void adam_step(ParamStore& store, const Gradients& grads, double learning_rate, const AdamConfig& config) {
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, p] : store.entries()) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      p.first_moment *= config.beta1;
      p.second_moment *= config.beta2;
    } else {
      const Matrix& g = it->second;
      require(g.rows() == p.value.rows() && g.cols() == p.value.cols(), "adam_step: gradient shape mismatch");
      p.first_moment = config.beta1 * p.first_moment + (1.0 - config.beta1) * g;
      p.second_moment = config.beta2 * p.second_moment + (1.0 - config.beta2) * g.cwiseProduct(g);
    }
    p.value.array() -= learning_rate * (p.first_moment.array() / c1) /
                       ((p.second_moment.array() / c2).sqrt() + config.epsilon);
  }
}

GradCheckResult grad_check(const Objective& objective, ParamStore& store, double eps) {
  Tape tape;
  Var loss = objective(tape, store);
  tape.backward(loss);
  const Gradients analytic = tape.parameter_gradients(store);

  auto evaluate = [&]() {
    Tape probe;
    return objective(probe, store).scalar();
  };

  GradCheckResult result;
  for (auto& [name, p] : store.entries()) {
    const Matrix& ga = analytic.at(name);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double& x = p.value.data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = evaluate();
      x = saved - eps;
      const double down = evaluate();
      x = saved;
      const double gn = (up - down) / (2.0 * eps);
      const double a = ga.data()[i];
      const double rel = std::abs(a - gn) / std::max(1e-8, std::abs(a) + std::abs(gn));
      if (result.worst_index < 0 || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = gn;
      }
    }
  }
  return result;
}

}  // namespace fame::ad
