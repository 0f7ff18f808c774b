#pragma once

#include <vector>

#include <Eigen/Dense>

#include "anasod/cell_spec.hpp"
#include "anasod/encoding.hpp"
#include "anasod/rng.hpp"

namespace anasod {

// Per-op loss: offset + curvature * ||w - center||^2.
struct OpLoss {
  double offset = 0.0;
  double curvature = 0.0;
  Eigen::VectorXd center;

  double operator()(const Eigen::VectorXd& w) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& w) const;
};

// Relaxed bi-level toy: both losses are exact categorical expectations
// L(p, w) = sum_i p_i * loss_i(w), so the encoding gradient is just the
// per-op loss vector.
struct ToyBilevelProblem {
  int weight_dim = 2;
  std::vector<OpLoss> train_losses;  // size k
  std::vector<OpLoss> val_losses;    // size k

  int k() const { return static_cast<int>(train_losses.size()); }
  void validate() const;

  double train_loss(const Encoding& p, const Eigen::VectorXd& w) const;
  double val_loss(const Encoding& p, const Eigen::VectorXd& w) const;
  std::vector<double> encoding_grad_val(const Eigen::VectorXd& w) const;
  Eigen::VectorXd weight_grad_train(const Encoding& p,
                                    const Eigen::VectorXd& w) const;

  // Index minimizing the validation loss at the train-optimal weights; the
  // run should concentrate the encoding there.
  int analytic_optimum() const;

  // Identical constant losses for train and val: ell_i(w) = cost_i.
  static ToyBilevelProblem constant_per_op(std::vector<double> costs);
  // Convex in both arguments with train == val (shared shifted quadratics).
  static ToyBilevelProblem shifted_quadratics(int k, int weight_dim, Rng& rng);
  // Op 0 fits the training set well but generalizes badly; the relaxed
  // objective must not collapse onto it.
  static ToyBilevelProblem with_free_op(int k);
};

// clamp-to-zero mirror step, renormalized onto the simplex. A zero update
// returns p unchanged. If clamping wipes out all mass, the step is retried
// with a halved lr up to 10 times before giving up.
Encoding mirror_step(const Encoding& p, const std::vector<double>& grad,
                     double lr);

struct DnasResult {
  Encoding final_encoding;
  Eigen::VectorXd final_weights;
  std::vector<double> train_history;
  std::vector<double> val_history;
  bool diverged = false;
};

// Alternating first-order updates: encoding by mirror descent on the val
// loss, weights by gradient descent on the train loss. Aborts (diverged =
// true, history kept) when either loss passes 1e6.
DnasResult run_dnas(const ToyBilevelProblem& problem, int epochs,
                    double lr_encoding, double lr_weights, Rng& rng);

// Architectures drawn from the relaxed optimum with the stochastic decoder.
std::vector<Architecture> sample_final(const Encoding& p, const CellSpec& spec,
                                       int count, Rng& rng);

}  // namespace anasod
