#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "anasod/encoding.hpp"
#include "anasod/parallel.hpp"

namespace anasod::gp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct HyperparamBounds {
  Interval lengthscale{0.01, 0.5};
  Interval outputscale{0.5, 5.0};
  Interval noise_var{1e-6, 1e-1};
};

struct Hyperparams {
  double lengthscale = 0.2;
  double outputscale = 1.0;
  double noise_var = 1e-2;
};

struct FitOptions {
  HyperparamBounds bounds;
  int restarts = 3;    // random starts beyond the default/warm start
  int max_iters = 60;  // projected gradient steps per start
  std::optional<Hyperparams> warm_start;
  ExecPolicy policy = default_policy();
};

// Marginal log-likelihood of standardized targets z under a Matern 5/2
// kernel with shared lengthscale, plus its gradient in the three
// hyperparameters. Exposed for the fit loop and for finite-difference checks.
struct LmlResult {
  double value = 0.0;
  double d_lengthscale = 0.0;
  double d_outputscale = 0.0;
  double d_noise_var = 0.0;
};
LmlResult lml_with_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                            const Hyperparams& hp, double jitter);
double lml_value(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                 const Hyperparams& hp, double jitter);

// Gaussian process over encodings. Targets y (positive, percent scale) are
// modeled as z = (log y - mu) / sd; predictions can be read in either space.
// Instances are immutable after construction, so prediction is safe to call
// from several threads at once.
class Model {
 public:
  // Maximizes the marginal likelihood from multiple starts under hard box
  // bounds. Deterministic: the restart draws use a fixed internal seed.
  static Model fit(const std::vector<Encoding>& x, const std::vector<double>& y,
                   const FitOptions& options = {});

  // Skips hyperparameter optimization; projects hp into the given bounds.
  static Model with_hyperparams(const std::vector<Encoding>& x,
                                const std::vector<double>& y,
                                const Hyperparams& hp,
                                const HyperparamBounds& bounds = {});

  struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
  };

  // Latent posterior of z at x (observation noise excluded).
  Posterior predict_transformed(const Encoding& x) const;
  // Back-transformed posterior of y via the log-normal moments.
  Posterior predict(const Encoding& x) const;

  // Expected improvement below `incumbent` in transformed space.
  double expected_improvement(const Encoding& x, double incumbent) const;
  double expected_improvement(const Encoding& x) const;
  // d EI / d x at fixed incumbent.
  std::vector<double> ei_gradient(const Encoding& x, double incumbent) const;

  // Blocked batch scorer; the OpenMP policy splits candidate blocks across
  // threads and matches the serial policy bit for bit.
  std::vector<double> expected_improvement_batch(std::span<const Encoding> xs,
                                                 double incumbent,
                                                 ExecPolicy policy) const;

  double best_transformed_target() const;
  double best_target() const { return y_min_; }
  const Hyperparams& hyperparams() const { return hp_; }
  double log_marginal_likelihood() const { return lml_; }
  double transform_mean() const { return mu_; }
  double transform_sd() const { return sd_; }
  double jitter() const { return jitter_; }
  int dim() const { return static_cast<int>(x_.cols()); }
  int num_points() const { return static_cast<int>(x_.rows()); }

 private:
  Model() = default;
  void factorize();

  Eigen::MatrixXd x_;  // n x k inputs
  Eigen::VectorXd z_;  // standardized log targets
  Eigen::MatrixXd l_;  // Cholesky factor of K + jitter I
  Eigen::VectorXd alpha_;
  Hyperparams hp_;
  double mu_ = 0.0, sd_ = 1.0;
  double y_min_ = 0.0;
  double lml_ = 0.0;
  double jitter_ = 0.0;
};

// Pairwise Euclidean distance matrix between encoding rows.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x, ExecPolicy policy);

Eigen::MatrixXd to_matrix(std::span<const Encoding> xs);

}  // namespace anasod::gp
