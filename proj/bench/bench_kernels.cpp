#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "anasod/cell_spec.hpp"
#include "anasod/encoding.hpp"
#include "anasod/gp.hpp"
#include "anasod/parallel.hpp"
#include "anasod/rng.hpp"

// Times the OpenMP kernels against their serial reference and checks the
// outputs are bitwise identical. Not a test target; run manually.

using namespace anasod;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch())
      .count();
}

std::vector<Encoding> random_pool(int count, int k, Rng& rng) {
  std::vector<Encoding> pool;
  pool.reserve(count);
  std::vector<double> alpha(k, 1.0);
  for (int i = 0; i < count; ++i) pool.push_back(sample_dirichlet(alpha, rng));
  return pool;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Timing {
  double serial_ms = 0.0;
  double openmp_ms = 0.0;
  bool identical = false;
};

void report(const char* name, const Timing& t) {
  std::printf("%-24s serial %9.2f ms   openmp %9.2f ms   speedup %5.2fx   %s\n", name,
              t.serial_ms, t.openmp_ms,
              t.openmp_ms > 0 ? t.serial_ms / t.openmp_ms : 0.0,
              t.identical ? "bitwise identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int pool_size = argc > 1 ? std::atoi(argv[1]) : 100000;
  int train_size = argc > 2 ? std::atoi(argv[2]) : 120;
  int reps = argc > 3 ? std::atoi(argv[3]) : 5;
  const int k = 5;

  std::printf("pool %d, train %d, reps %d, omp threads %d\n", pool_size, train_size,
              reps, max_threads(ExecPolicy::OpenMP));

  Rng rng(7);
  std::vector<Encoding> train = random_pool(train_size, k, rng);
  std::vector<double> targets;
  targets.reserve(train.size());
  for (const Encoding& p : train) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i) s += (i + 1.0) * p.values[i];
    targets.push_back(5.0 + 10.0 * s + rng.normal());
  }
  std::vector<Encoding> pool = random_pool(pool_size, k, rng);

  gp::FitOptions fit;
  fit.policy = ExecPolicy::Serial;
  gp::Model model = gp::Model::fit(train, targets, fit);
  double incumbent = model.best_transformed_target();

  // Expected-improvement scoring over the candidate pool.
  {
    Timing t;
    std::vector<double> serial_scores, openmp_scores;
    for (int r = 0; r < reps; ++r) {
      double t0 = now_ms();
      serial_scores = model.expected_improvement_batch(pool, incumbent, ExecPolicy::Serial);
      double t1 = now_ms();
      openmp_scores = model.expected_improvement_batch(pool, incumbent, ExecPolicy::OpenMP);
      double t2 = now_ms();
      t.serial_ms += t1 - t0;
      t.openmp_ms += t2 - t1;
    }
    t.serial_ms /= reps;
    t.openmp_ms /= reps;
    t.identical = bitwise_equal(serial_scores, openmp_scores);
    report("ei_pool_scoring", t);
  }

  // Pairwise distance matrix used by every GP refit.
  {
    Timing t;
    std::vector<Encoding> big = random_pool(1200, k, rng);
    Eigen::MatrixXd xs = gp::to_matrix(big);
    Eigen::MatrixXd serial_d, openmp_d;
    for (int r = 0; r < reps; ++r) {
      double t0 = now_ms();
      serial_d = gp::pairwise_distances(xs, ExecPolicy::Serial);
      double t1 = now_ms();
      openmp_d = gp::pairwise_distances(xs, ExecPolicy::OpenMP);
      double t2 = now_ms();
      t.serial_ms += t1 - t0;
      t.openmp_ms += t2 - t1;
    }
    t.serial_ms /= reps;
    t.openmp_ms /= reps;
    t.identical = serial_d.rows() == openmp_d.rows() &&
                  std::memcmp(serial_d.data(), openmp_d.data(),
                              sizeof(double) * serial_d.size()) == 0;
    report("pairwise_distances", t);
  }

  return 0;
}
