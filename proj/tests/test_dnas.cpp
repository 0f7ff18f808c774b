#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "anasod/cell_spec.hpp"
#include "anasod/dnas.hpp"
#include "anasod/encoding.hpp"
#include "anasod/errors.hpp"
#include "anasod/rng.hpp"

using namespace anasod;

namespace {

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("mirror step: clamp and renormalize") {
  Encoding p{{0.5, 0.5}};
  Encoding out = mirror_step(p, {3.0, 2.0}, 0.1);
  CHECK(out.values[0] == doctest::Approx(0.4));
  CHECK(out.values[1] == doctest::Approx(0.6));
}

TEST_CASE("mirror step: zero gradient returns the input unchanged") {
  Encoding p{{0.3, 0.2, 0.5}};
  Encoding out = mirror_step(p, {0.0, 0.0, 0.0}, 0.7);
  CHECK(out == p);  // exact, no renormalization drift
}

TEST_CASE("mirror step: non-positive learning rate is rejected") {
  Encoding p{{0.3, 0.2, 0.5}};
  CHECK_THROWS_AS(mirror_step(p, {1.0, 1.0, 1.0}, 0.0), InvalidInputError);
  CHECK_THROWS_AS(mirror_step(p, {1.0, 1.0, 1.0}, -0.5), InvalidInputError);
}

TEST_CASE("mirror step: negative mass is clamped away") {
  Encoding p{{0.5, 0.5}};
  // Large step pushes the first coordinate below zero.
  Encoding out = mirror_step(p, {10.0, 0.0}, 0.1);
  CHECK(out.values[0] == 0.0);
  CHECK(out.values[1] == 1.0);
}

TEST_CASE("mirror step: lr halves until some mass survives") {
  Encoding p{{0.5, 0.5}};
  // At lr 0.01 both entries go negative; one halving rescues the first.
  Encoding out = mirror_step(p, {60.0, 100.0}, 0.01);
  CHECK(out.values[0] == 1.0);
  CHECK(out.values[1] == 0.0);
}

TEST_CASE("mirror step: unrecoverable step throws after the retries") {
  Encoding p{{0.5, 0.5}};
  CHECK_THROWS_AS(mirror_step(p, {1e9, 1e9}, 1.0), NumericalError);
}

TEST_CASE("mirror step stays on the simplex to machine precision") {
  Rng rng(55);
  std::vector<double> alpha(4, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Encoding p = sample_dirichlet(alpha, rng);
    std::vector<double> g(4);
    for (double& v : g) v = 3.0 * rng.normal();
    Encoding out = mirror_step(p, g, 0.05);
    double sum = 0.0;
    for (double v : out.values) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("constant losses concentrate the encoding on the cheapest op") {
  ToyBilevelProblem problem = ToyBilevelProblem::constant_per_op({3.0, 1.0, 2.0});
  CHECK(problem.analytic_optimum() == 1);
  Rng rng(66);
  DnasResult result = run_dnas(problem, 200, 0.05, 0.1, rng);
  CHECK(!result.diverged);
  CHECK(argmax(result.final_encoding.values) == 1);
  CHECK(result.final_encoding.values[1] > 0.95);
  CHECK(result.train_history.size() == 200);
  CHECK(result.val_history.size() == 200);
  // With constant losses the val loss is the expected cost; it must fall.
  CHECK(result.val_history.back() < result.val_history.front());
  CHECK(result.val_history.back() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("shifted quadratics converge to the analytic optimum") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    Rng make(seed);
    ToyBilevelProblem problem = ToyBilevelProblem::shifted_quadratics(4, 3, make);
    Rng rng(seed + 100);
    DnasResult result = run_dnas(problem, 200, 0.05, 0.1, rng);
    CHECK(!result.diverged);
    CHECK(argmax(result.final_encoding.values) == problem.analytic_optimum());
    CHECK_NOTHROW(validate_encoding(result.final_encoding));
  }
}

TEST_CASE("free op wins training but not the relaxed objective") {
  ToyBilevelProblem problem = ToyBilevelProblem::with_free_op(4);
  CHECK(problem.analytic_optimum() != 0);
  Rng rng(77);
  DnasResult result = run_dnas(problem, 200, 0.05, 0.1, rng);
  CHECK(!result.diverged);
  CHECK(result.final_encoding.values[0] < 0.5);
  CHECK(argmax(result.final_encoding.values) == problem.analytic_optimum());
}

TEST_CASE("oversized weight steps trip the divergence guard") {
  Rng make(9);
  ToyBilevelProblem problem = ToyBilevelProblem::shifted_quadratics(3, 2, make);
  Rng rng(99);
  DnasResult result = run_dnas(problem, 200, 0.05, 1e4, rng);
  CHECK(result.diverged);
  CHECK(!result.train_history.empty());
  CHECK(result.train_history.size() <= 200);
}

TEST_CASE("problem validation catches arity mismatches") {
  ToyBilevelProblem problem = ToyBilevelProblem::constant_per_op({1.0, 2.0});
  problem.val_losses.pop_back();
  CHECK_THROWS_AS(problem.validate(), InvalidInputError);
  ToyBilevelProblem empty;
  CHECK_THROWS_AS(empty.validate(), InvalidInputError);
}

TEST_CASE("gradients match the loss definitions") {
  Rng make(13);
  ToyBilevelProblem problem = ToyBilevelProblem::shifted_quadratics(3, 2, make);
  Eigen::VectorXd w(2);
  w << 0.4, -0.3;
  Encoding p{{0.2, 0.5, 0.3}};

  // Encoding gradient of the val loss is the per-op loss vector.
  std::vector<double> g = problem.encoding_grad_val(w);
  for (int i = 0; i < 3; ++i)
    CHECK(g[i] == doctest::Approx(problem.val_losses[i](w)));

  // Weight gradient against central differences.
  Eigen::VectorXd wg = problem.weight_grad_train(p, w);
  const double h = 1e-6;
  for (int d = 0; d < 2; ++d) {
    Eigen::VectorXd up = w, dn = w;
    up[d] += h;
    dn[d] -= h;
    double fd = (problem.train_loss(p, up) - problem.train_loss(p, dn)) / (2 * h);
    CHECK(wg[d] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("final samples decode from the relaxed optimum") {
  CellSpec spec = CellSpec::fixed_chain(6, 3);
  Encoding p{{0.9, 0.1, 0.0}};
  Rng rng(21);
  std::vector<Architecture> archs = sample_final(p, spec, 40, rng);
  CHECK(archs.size() == 40);
  for (const Architecture& a : archs) {
    IntegerEncoding counts = encode(a, spec);
    CHECK(counts.counts[2] == 0);  // outside the support
  }
}
