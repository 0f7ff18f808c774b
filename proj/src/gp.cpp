#include "anasod/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anasod/errors.hpp"
#include "anasod/rng.hpp"

namespace anasod::gp {
namespace {

constexpr double kSqrt5 = 2.23606797749978969;
constexpr double kLog2Pi = 1.83787706640934548;
constexpr int kBatchBlock = 1024;

// Escalation ladder for the diagonal shift when the kernel matrix is not
// numerically positive definite.
constexpr double kJitterLadder[] = {0.0,  1e-9, 1e-8, 1e-7,
                                    1e-6, 1e-5, 1e-4};

double std_normal_pdf(double u) {
  return 0.39894228040143268 * std::exp(-0.5 * u * u);
}
double std_normal_cdf(double u) {
  return 0.5 * std::erfc(-u * 0.70710678118654752);
}

// Matern 5/2 profile at scaled distance d = sqrt(5) r / lengthscale.
double matern_profile(double d) {
  return (1.0 + d + d * d / 3.0) * std::exp(-d);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& r, const Hyperparams& hp,
                              double jitter) {
  const double inv_l = kSqrt5 / hp.lengthscale;
  Eigen::MatrixXd k = r.unaryExpr([&](double rij) {
    return matern_profile(rij * inv_l);
  });
  k *= hp.outputscale;
  k.diagonal().array() += hp.noise_var + jitter;
  return k;
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
  double lml = 0.0;
};

Factorization factorize_kernel(const Eigen::MatrixXd& r,
                               const Eigen::VectorXd& z, const Hyperparams& hp,
                               double jitter) {
  Factorization f;
  f.llt.compute(kernel_matrix(r, hp, jitter));
  if (f.llt.info() != Eigen::Success)
    throw NumericalError("gp: kernel matrix is not positive definite");
  f.alpha = f.llt.solve(z);
  const double logdet =
      2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  f.lml = -0.5 * z.dot(f.alpha) - 0.5 * logdet -
          0.5 * static_cast<double>(z.size()) * kLog2Pi;
  return f;
}

LmlResult lml_with_gradient_r(const Eigen::MatrixXd& r,
                              const Eigen::VectorXd& z, const Hyperparams& hp,
                              double jitter) {
  const auto n = z.size();
  const Factorization f = factorize_kernel(r, z, hp, jitter);

  Eigen::MatrixXd kinv =
      f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd a = f.alpha * f.alpha.transpose() - kinv;

  const double inv_l = kSqrt5 / hp.lengthscale;
  Eigen::MatrixXd dk_dl(n, n), profile(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = r(i, j) * inv_l;
      const double e = std::exp(-d);
      profile(i, j) = (1.0 + d + d * d / 3.0) * e;
      dk_dl(i, j) =
          hp.outputscale * e * d * d * (1.0 + d) / (3.0 * hp.lengthscale);
    }
  }

  LmlResult out;
  out.value = f.lml;
  out.d_lengthscale = 0.5 * (a.array() * dk_dl.array()).sum();
  out.d_outputscale = 0.5 * (a.array() * profile.array()).sum();
  out.d_noise_var = 0.5 * a.trace();
  return out;
}

struct LogBox {
  Eigen::Vector3d lo, hi;
};

Eigen::Vector3d project(const Eigen::Vector3d& phi, const LogBox& box) {
  return phi.cwiseMax(box.lo).cwiseMin(box.hi);
}

Hyperparams from_log(const Eigen::Vector3d& phi) {
  return Hyperparams{std::exp(phi[0]), std::exp(phi[1]), std::exp(phi[2])};
}

Eigen::Vector3d to_log(const Hyperparams& hp) {
  return {std::log(hp.lengthscale), std::log(hp.outputscale),
          std::log(hp.noise_var)};
}

double lml_value_r(const Eigen::MatrixXd& r, const Eigen::VectorXd& z,
                   const Hyperparams& hp, double jitter) {
  return factorize_kernel(r, z, hp, jitter).lml;
}

// Projected gradient ascent with Armijo backtracking in log-parameter space.
std::pair<Hyperparams, double> maximize_lml(const Eigen::MatrixXd& r,
                                            const Eigen::VectorXd& z,
                                            const Hyperparams& start,
                                            const LogBox& box, double jitter,
                                            int max_iters) {
  Eigen::Vector3d phi = project(to_log(start), box);
  LmlResult res = lml_with_gradient_r(r, z, from_log(phi), jitter);
  double step = 0.25;
  for (int it = 0; it < max_iters; ++it) {
    const Hyperparams hp = from_log(phi);
    const Eigen::Vector3d grad(res.d_lengthscale * hp.lengthscale,
                               res.d_outputscale * hp.outputscale,
                               res.d_noise_var * hp.noise_var);
    if (!(grad.norm() > 1e-7)) break;

    bool moved = false;
    while (step >= 1e-12) {
      const Eigen::Vector3d cand = project(phi + step * grad, box);
      const Eigen::Vector3d delta = cand - phi;
      if (delta.norm() < 1e-14) break;
      const double cand_val = lml_value_r(r, z, from_log(cand), jitter);
      if (cand_val > res.value + 1e-4 * grad.dot(delta)) {
        phi = cand;
        res = lml_with_gradient_r(r, z, from_log(phi), jitter);
        step = std::min(step * 2.0, 1.0);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return {from_log(phi), res.value};
}

void validate_targets(const std::vector<double>& y) {
  if (y.empty()) throw InvalidInputError("gp: no training targets");
  for (double v : y)
    if (!(v > 0.0))
      throw InvalidInputError("gp: targets must be positive for the log transform");
}

void init_data(Eigen::MatrixXd& x_out, Eigen::VectorXd& z_out, double& mu,
               double& sd, double& y_min, const std::vector<Encoding>& x,
               const std::vector<double>& y) {
  validate_targets(y);
  if (x.size() != y.size())
    throw InvalidInputError("gp: input/target count mismatch");
  x_out = to_matrix(x);
  const Eigen::Index n = x_out.rows();
  Eigen::VectorXd logy(n);
  for (Eigen::Index i = 0; i < n; ++i) logy[i] = std::log(y[i]);
  mu = logy.mean();
  sd = 1.0;
  if (n > 1) {
    const double ss = (logy.array() - mu).square().sum();
    sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  if (!(sd > 1e-12)) sd = 1.0;
  z_out = (logy.array() - mu) / sd;
  y_min = *std::min_element(y.begin(), y.end());
}

}  // namespace

Eigen::MatrixXd to_matrix(std::span<const Encoding> xs) {
  if (xs.empty()) throw InvalidInputError("gp: no training inputs");
  const int k = xs[0].k();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), k);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].k() != k) throw InvalidInputError("gp: mixed input dimensions");
    for (int j = 0; j < k; ++j) m(static_cast<Eigen::Index>(i), j) = xs[i].values[j];
  }
  return m;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x, ExecPolicy policy) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd r(n, n);
  // Row i is filled by iteration i alone; policies agree bitwise.
  parallel_for(n, policy, [&](std::int64_t i) {
    for (Eigen::Index j = 0; j < n; ++j)
      r(i, j) = (x.row(i) - x.row(j)).norm();
  });
  return r;
}

double lml_value(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                 const Hyperparams& hp, double jitter) {
  return lml_value_r(pairwise_distances(x, ExecPolicy::Serial), z, hp, jitter);
}

LmlResult lml_with_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                            const Hyperparams& hp, double jitter) {
  return lml_with_gradient_r(pairwise_distances(x, ExecPolicy::Serial), z, hp,
                             jitter);
}

Model Model::fit(const std::vector<Encoding>& x, const std::vector<double>& y,
                 const FitOptions& options) {
  Model m;
  init_data(m.x_, m.z_, m.mu_, m.sd_, m.y_min_, x, y);

  const Eigen::MatrixXd r = pairwise_distances(m.x_, options.policy);

  const LogBox box{
      {std::log(options.bounds.lengthscale.lo),
       std::log(options.bounds.outputscale.lo),
       std::log(options.bounds.noise_var.lo)},
      {std::log(options.bounds.lengthscale.hi),
       std::log(options.bounds.outputscale.hi),
       std::log(options.bounds.noise_var.hi)}};

  std::vector<Hyperparams> starts;
  starts.push_back(Hyperparams{});
  if (options.warm_start) starts.push_back(*options.warm_start);
  Rng restart_rng(0x9e3779b97f4a7c15ULL);  // fixed: fit must be deterministic
  for (int s = 0; s < options.restarts; ++s) {
    Eigen::Vector3d phi;
    for (int d = 0; d < 3; ++d)
      phi[d] = box.lo[d] + restart_rng.uniform() * (box.hi[d] - box.lo[d]);
    starts.push_back(from_log(phi));
  }

  for (double jitter : kJitterLadder) {
    try {
      Hyperparams best_hp;
      double best_val = -std::numeric_limits<double>::infinity();
      for (const Hyperparams& start : starts) {
        const auto [hp, val] =
            maximize_lml(r, m.z_, start, box, jitter, options.max_iters);
        if (val > best_val) {
          best_val = val;
          best_hp = hp;
        }
      }
      m.hp_ = best_hp;
      m.jitter_ = jitter;
      const Factorization f = factorize_kernel(r, m.z_, m.hp_, jitter);
      m.l_ = f.llt.matrixL();
      m.alpha_ = f.alpha;
      m.lml_ = f.lml;
      return m;
    } catch (const NumericalError&) {
      // not PSD at this jitter level; escalate
    }
  }
  throw NumericalError("gp: kernel matrix stayed indefinite at maximum jitter");
}

Model Model::with_hyperparams(const std::vector<Encoding>& x,
                              const std::vector<double>& y,
                              const Hyperparams& hp,
                              const HyperparamBounds& bounds) {
  Model m;
  init_data(m.x_, m.z_, m.mu_, m.sd_, m.y_min_, x, y);
  m.hp_ = Hyperparams{std::clamp(hp.lengthscale, bounds.lengthscale.lo,
                                 bounds.lengthscale.hi),
                      std::clamp(hp.outputscale, bounds.outputscale.lo,
                                 bounds.outputscale.hi),
                      std::clamp(hp.noise_var, bounds.noise_var.lo,
                                 bounds.noise_var.hi)};
  m.factorize();
  return m;
}

void Model::factorize() {
  const Eigen::MatrixXd r = pairwise_distances(x_, ExecPolicy::Serial);
  for (double jitter : kJitterLadder) {
    if (jitter < jitter_) continue;
    try {
      const Factorization f = factorize_kernel(r, z_, hp_, jitter);
      l_ = f.llt.matrixL();
      alpha_ = f.alpha;
      lml_ = f.lml;
      jitter_ = jitter;
      return;
    } catch (const NumericalError&) {
    }
  }
  throw NumericalError("gp: kernel matrix stayed indefinite at maximum jitter");
}

Model::Posterior Model::predict_transformed(const Encoding& x) const {
  // Queries may sit off the simplex (finite-difference probes, ascent
  // iterates); the model is generic over R^k, so only the arity is checked.
  if (x.k() != dim()) throw InvalidInputError("gp: query dimension mismatch");
  const Eigen::Index n = x_.rows();
  Eigen::Map<const Eigen::VectorXd> q(x.values.data(), dim());

  Eigen::VectorXd kstar(n);
  const double inv_l = kSqrt5 / hp_.lengthscale;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rdist = (x_.row(i).transpose() - q).norm();
    kstar[i] = hp_.outputscale * matern_profile(rdist * inv_l);
  }
  Posterior post;
  post.mean = kstar.dot(alpha_);
  const Eigen::VectorXd v =
      l_.triangularView<Eigen::Lower>().solve(kstar);
  post.variance = std::max(hp_.outputscale - v.squaredNorm(), 0.0);
  return post;
}

Model::Posterior Model::predict(const Encoding& x) const {
  const Posterior z = predict_transformed(x);
  // Log-normal moments of y = exp(mu + sd * Z).
  const double m_log = mu_ + sd_ * z.mean;
  const double v_log = sd_ * sd_ * z.variance;
  Posterior out;
  out.mean = std::exp(m_log + 0.5 * v_log);
  out.variance = (std::exp(v_log) - 1.0) * std::exp(2.0 * m_log + v_log);
  return out;
}

double Model::best_transformed_target() const {
  return (std::log(y_min_) - mu_) / sd_;
}

namespace {

double ei_from_posterior(double mean, double variance, double incumbent) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  if (sd < 1e-12) return std::max(incumbent - mean, 0.0);
  const double u = (incumbent - mean) / sd;
  return (incumbent - mean) * std_normal_cdf(u) + sd * std_normal_pdf(u);
}

}  // namespace

double Model::expected_improvement(const Encoding& x, double incumbent) const {
  const Posterior post = predict_transformed(x);
  return ei_from_posterior(post.mean, post.variance, incumbent);
}

double Model::expected_improvement(const Encoding& x) const {
  return expected_improvement(x, best_transformed_target());
}

std::vector<double> Model::ei_gradient(const Encoding& x,
                                       double incumbent) const {
  if (x.k() != dim()) throw InvalidInputError("gp: query dimension mismatch");
  const Eigen::Index n = x_.rows();
  const int k = dim();
  Eigen::Map<const Eigen::VectorXd> q(x.values.data(), k);

  Eigen::VectorXd kstar(n);
  Eigen::MatrixXd dkstar(n, k);  // row i = d k(x, x_i) / d x
  const double inv_l = kSqrt5 / hp_.lengthscale;
  const double coef = 5.0 * hp_.outputscale /
                      (3.0 * hp_.lengthscale * hp_.lengthscale);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd diff = q - x_.row(i).transpose();
    const double d = diff.norm() * inv_l;
    const double e = std::exp(-d);
    kstar[i] = hp_.outputscale * (1.0 + d + d * d / 3.0) * e;
    // d k / d x = -(5 s / (3 l^2)) e^{-d} (1 + d) (x - x_i); smooth at r = 0.
    dkstar.row(i) = (-coef * e * (1.0 + d)) * diff.transpose();
  }

  const double mean = kstar.dot(alpha_);
  const Eigen::VectorXd w = l_.triangularView<Eigen::Lower>().solve(kstar);
  const double variance = std::max(hp_.outputscale - w.squaredNorm(), 0.0);
  const Eigen::VectorXd kinv_kstar =
      l_.transpose().triangularView<Eigen::Upper>().solve(w);

  const Eigen::VectorXd dmean = dkstar.transpose() * alpha_;
  const Eigen::VectorXd dvar = -2.0 * (dkstar.transpose() * kinv_kstar);

  const double sd = std::sqrt(variance);
  Eigen::VectorXd g(k);
  if (sd < 1e-12) {
    g = incumbent > mean ? (-dmean).eval() : Eigen::VectorXd::Zero(k).eval();
  } else {
    const double u = (incumbent - mean) / sd;
    g = -std_normal_cdf(u) * dmean + std_normal_pdf(u) * (dvar / (2.0 * sd));
  }
  return {g.data(), g.data() + k};
}

std::vector<double> Model::expected_improvement_batch(
    std::span<const Encoding> xs, double incumbent, ExecPolicy policy) const {
  if (xs.empty()) return {};
  const int k = dim();
  for (const Encoding& enc : xs)
    if (enc.k() != k) throw InvalidInputError("gp: query dimension mismatch");
  // Keep Eigen's own threading out of the picture so both policies run the
  // same per-block arithmetic.
  Eigen::setNbThreads(1);

  const std::int64_t blocks =
      (static_cast<std::int64_t>(xs.size()) + kBatchBlock - 1) / kBatchBlock;
  std::vector<double> out(xs.size());
  const Eigen::VectorXd xsq = x_.rowwise().squaredNorm();

  parallel_for(blocks, policy, [&](std::int64_t b) {
    const std::int64_t lo = b * kBatchBlock;
    const std::int64_t hi =
        std::min<std::int64_t>(lo + kBatchBlock, xs.size());
    const Eigen::Index bs = static_cast<Eigen::Index>(hi - lo);

    Eigen::MatrixXd c(bs, k);
    for (Eigen::Index j = 0; j < bs; ++j)
      for (int d = 0; d < k; ++d) c(j, d) = xs[lo + j].values[d];

    Eigen::MatrixXd d2 = -2.0 * (x_ * c.transpose());  // n x bs
    d2.colwise() += xsq;
    d2.rowwise() += c.rowwise().squaredNorm().transpose();
    const double inv_l = kSqrt5 / hp_.lengthscale;
    Eigen::MatrixXd kstar = d2.unaryExpr([&](double v) {
      return hp_.outputscale *
             matern_profile(std::sqrt(std::max(v, 0.0)) * inv_l);
    });

    const Eigen::VectorXd means = kstar.transpose() * alpha_;
    const Eigen::MatrixXd v = l_.triangularView<Eigen::Lower>().solve(kstar);
    for (Eigen::Index j = 0; j < bs; ++j) {
      const double variance =
          std::max(hp_.outputscale - v.col(j).squaredNorm(), 0.0);
      out[lo + j] = ei_from_posterior(means[j], variance, incumbent);
    }
  });
  return out;
}

}  // namespace anasod::gp
