#include "anasod/dnas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anasod/errors.hpp"

namespace anasod {

double OpLoss::operator()(const Eigen::VectorXd& w) const {
  return offset + curvature * (w - center).squaredNorm();
}

Eigen::VectorXd OpLoss::grad(const Eigen::VectorXd& w) const {
  return 2.0 * curvature * (w - center);
}

void ToyBilevelProblem::validate() const {
  if (train_losses.empty() || train_losses.size() != val_losses.size())
    throw InvalidInputError("toy problem: train/val loss lists must match");
  if (weight_dim < 1) throw InvalidInputError("toy problem: weight_dim < 1");
  for (const auto* side : {&train_losses, &val_losses})
    for (const OpLoss& loss : *side)
      if (loss.center.size() != weight_dim)
        throw InvalidInputError("toy problem: loss center has wrong dimension");
}

double ToyBilevelProblem::train_loss(const Encoding& p,
                                     const Eigen::VectorXd& w) const {
  double acc = 0.0;
  for (int i = 0; i < k(); ++i) acc += p.values[i] * train_losses[i](w);
  return acc;
}

double ToyBilevelProblem::val_loss(const Encoding& p,
                                   const Eigen::VectorXd& w) const {
  double acc = 0.0;
  for (int i = 0; i < k(); ++i) acc += p.values[i] * val_losses[i](w);
  return acc;
}

std::vector<double> ToyBilevelProblem::encoding_grad_val(
    const Eigen::VectorXd& w) const {
  // d/dp_i of sum_j p_j ell_j(w) is just ell_i(w).
  std::vector<double> g(k());
  for (int i = 0; i < k(); ++i) g[i] = val_losses[i](w);
  return g;
}

Eigen::VectorXd ToyBilevelProblem::weight_grad_train(
    const Encoding& p, const Eigen::VectorXd& w) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(weight_dim);
  for (int i = 0; i < k(); ++i) g += p.values[i] * train_losses[i].grad(w);
  return g;
}

int ToyBilevelProblem::analytic_optimum() const {
  // Fixed point of the alternating updates: if the encoding concentrates on
  // op i, the weights settle at that op's train center; the stable op is
  // the one with the lowest val loss at its own train optimum.
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k(); ++i) {
    const double v = val_losses[i](train_losses[i].center);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

ToyBilevelProblem ToyBilevelProblem::constant_per_op(std::vector<double> costs) {
  if (costs.empty()) throw InvalidInputError("constant_per_op: no costs");
  ToyBilevelProblem prob;
  prob.weight_dim = 1;
  for (double c : costs) {
    OpLoss loss{c, 0.0, Eigen::VectorXd::Zero(1)};
    prob.train_losses.push_back(loss);
    prob.val_losses.push_back(loss);
  }
  return prob;
}

ToyBilevelProblem ToyBilevelProblem::shifted_quadratics(int k, int weight_dim,
                                                        Rng& rng) {
  if (k < 2 || weight_dim < 1)
    throw InvalidInputError("shifted_quadratics: need k >= 2, weight_dim >= 1");
  ToyBilevelProblem prob;
  prob.weight_dim = weight_dim;
  // Offsets on a shuffled ladder: the gap (0.4) dwarfs the largest possible
  // center-mismatch penalty, so the lowest rung is the unique attractor of
  // the alternating updates, from any start.
  std::vector<int> rung(k);
  for (int i = 0; i < k; ++i) rung[i] = i;
  for (int i = k - 1; i > 0; --i) std::swap(rung[i], rung[rng.uniform_int(i + 1)]);
  for (int i = 0; i < k; ++i) {
    OpLoss loss;
    loss.offset = 0.25 + 0.4 * rung[i];
    loss.curvature = 0.5 + 0.5 * rng.uniform();   // strictly convex
    loss.center = Eigen::VectorXd::Zero(weight_dim);
    for (int d = 0; d < weight_dim; ++d) loss.center[d] = 0.15 * rng.normal();
    prob.train_losses.push_back(loss);
    prob.val_losses.push_back(loss);  // train == val: convex in each argument
  }
  return prob;
}

ToyBilevelProblem ToyBilevelProblem::with_free_op(int k) {
  if (k < 2) throw InvalidInputError("with_free_op: need k >= 2");
  ToyBilevelProblem prob;
  prob.weight_dim = 2;
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd center = Eigen::VectorXd::Constant(2, 0.7 * i);
    OpLoss train{0.5 + 0.1 * i, 1.0, center};
    OpLoss val = train;
    if (i == 0) {
      // Parameter-free shortcut: excellent training fit, poor validation.
      train.offset = 0.05;
      val.offset = 3.0;
      val.curvature = 0.5;
    }
    prob.train_losses.push_back(std::move(train));
    prob.val_losses.push_back(std::move(val));
  }
  return prob;
}

Encoding mirror_step(const Encoding& p, const std::vector<double>& grad,
                     double lr) {
  validate_encoding(p);
  if (static_cast<int>(grad.size()) != p.k())
    throw InvalidInputError("mirror_step: gradient dimension mismatch");
  if (!(lr > 0.0)) throw InvalidInputError("mirror_step: lr must be positive");

  bool zero_update = true;
  for (double g : grad)
    if (lr * g != 0.0) zero_update = false;
  if (zero_update) return p;  // renormalizing a simplex point is the identity

  double step = lr;
  for (int attempt = 0; attempt < 10; ++attempt) {
    Encoding next = p;
    double sum = 0.0;
    for (int i = 0; i < p.k(); ++i) {
      next.values[i] = std::max(p.values[i] - step * grad[i], 0.0);
      sum += next.values[i];
    }
    if (sum > 0.0) {
      for (double& v : next.values) v /= sum;
      return next;
    }
    step *= 0.5;  // clamping removed all mass; retry more cautiously
  }
  throw NumericalError("mirror_step: update drove every entry to zero");
}

DnasResult run_dnas(const ToyBilevelProblem& problem, int epochs,
                    double lr_encoding, double lr_weights, Rng& rng) {
  problem.validate();
  if (epochs < 1) throw InvalidInputError("run_dnas: epochs must be positive");
  if (!(lr_encoding > 0.0) || !(lr_weights > 0.0))
    throw InvalidInputError("run_dnas: learning rates must be positive");

  DnasResult res;
  res.final_encoding = uniform_encoding(problem.k());
  res.final_weights = Eigen::VectorXd::Zero(problem.weight_dim);
  for (int d = 0; d < problem.weight_dim; ++d)
    res.final_weights[d] = 0.1 * rng.normal();

  for (int epoch = 0; epoch < epochs; ++epoch) {
    res.final_encoding = mirror_step(
        res.final_encoding, problem.encoding_grad_val(res.final_weights),
        lr_encoding);
    res.final_weights -=
        lr_weights *
        problem.weight_grad_train(res.final_encoding, res.final_weights);

    const double train = problem.train_loss(res.final_encoding, res.final_weights);
    const double val = problem.val_loss(res.final_encoding, res.final_weights);
    res.train_history.push_back(train);
    res.val_history.push_back(val);
    if (std::abs(train) > 1e6 || std::abs(val) > 1e6) {
      res.diverged = true;
      break;
    }
  }
  return res;
}

std::vector<Architecture> sample_final(const Encoding& p, const CellSpec& spec,
                                       int count, Rng& rng) {
  if (count < 1) throw InvalidInputError("sample_final: count must be positive");
  std::vector<Architecture> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(decode_stochastic(p, spec, rng));
  return out;
}

}  // namespace anasod
