// Timing comparison of the OpenMP kernels against their serial references.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "polchinski/ising_exact.hpp"
#include "polchinski/sde.hpp"

using namespace polchinski;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_ms(F&& f, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    f();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
  const int threads = omp_get_max_threads();
#else
  const int threads = 1;
#endif
  std::printf("threads: %d\n", threads);
  std::printf("%-34s %12s %12s %8s\n", "kernel", "serial ms", "parallel ms", "speedup");

  {
    IsingModel model = IsingModel::make(normalised_ring_coupling(18), 0.4);
    volatile double sink = 0.0;
    const double serial =
        time_ms([&] { sink = ref::ising_moments_serial(model).log_partition; });
    const double parallel = time_ms([&] { sink = ising_moments(model).log_partition; });
    std::printf("%-34s %12.1f %12.1f %8.2f\n", "ising enumeration (N=18)", serial, parallel,
                serial / parallel);
    (void)sink;
  }

  {
    ContinuousModel model =
        ContinuousModel::single_site(PotentialSpec::double_well(1.0), 1.0);
    CovarianceSchedule sched = CovarianceSchedule::unit1d(1.0);
    RenormEvaluator flow(model, sched);
    DriftTable1d table(flow, 1.0, 65, 129);
    const auto drift = [&](double t, double phi) { return table.grad(t, phi); };

    const auto run = [&](int nthreads) {
#ifdef _OPENMP
      omp_set_num_threads(nthreads);
#else
      (void)nthreads;
#endif
      localization_sample(sched, drift, 20000, 500, 7);
    };
    const double serial = time_ms([&] { run(1); });
    const double parallel = time_ms([&] { run(threads); });
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    std::printf("%-34s %12.1f %12.1f %8.2f\n", "sde ensemble (2e4 x 500 steps)", serial,
                parallel, serial / parallel);
  }

  {
    ContinuousModel model =
        ContinuousModel::single_site(PotentialSpec::double_well(1.0), 1.0);
    CovarianceSchedule sched = CovarianceSchedule::unit1d(1.0);
    RenormEvaluator flow(model, sched);
    const auto run = [&](int nthreads) {
#ifdef _OPENMP
      omp_set_num_threads(nthreads);
#else
      (void)nthreads;
#endif
      DriftTable1d table(flow, 1.0, 65, 257);
      volatile double sink = table.grad(0.5, 0.5);
      (void)sink;
    };
    const double serial = time_ms([&] { run(1); }, 2);
    const double parallel = time_ms([&] { run(threads); }, 2);
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    std::printf("%-34s %12.1f %12.1f %8.2f\n", "drift table build (65 x 257)", serial, parallel,
                serial / parallel);
  }
  return 0;
}
