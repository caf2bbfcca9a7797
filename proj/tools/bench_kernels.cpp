// Compares the OpenMP kernels against their serial reference implementations
// on a generated grid scenario: epidemic evaluation and pricing sweeps.

#include <chrono>
#include <cstdio>
#include <random>

#include "transit/epidemic.hpp"
#include "transit/lagrangian.hpp"
#include "transit/model.hpp"
#include "transit/pricing.hpp"
#include "transit/timexpand.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace transit;
using Clock = std::chrono::steady_clock;

namespace {

double ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    auto t0 = Clock::now();
    fn();
    best = std::min(best, ms(t0, Clock::now()));
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int rows = 4, cols = 4;
  if (argc > 2) {
    rows = std::atoi(argv[1]);
    cols = std::atoi(argv[2]);
  }
  Scenario sc = generate_toy_grid(rows, cols, 5.0 / 6.0, 7);
  SpaceTimeNetwork net = expand(sc, make_dispatch_grid(sc));
  std::printf("grid %dx%d: %zu nodes, %zu arcs, %zu commodities\n", rows, cols, net.nodes.size(),
              net.arcs.size(), sc.demand.size());
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled\n");
#endif

  // Random feasible-looking flows: every commodity on a handful of arcs.
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int32_t> pick(0, static_cast<int>(net.arcs.size()) - 1);
  std::uniform_real_distribution<double> amount(0.0, 3.0);
  FlowVector flows;
  for (std::size_t w = 0; w < sc.demand.size(); ++w)
    for (int k = 0; k < 6; ++k)
      flows.push_back({static_cast<std::int32_t>(w), pick(rng), amount(rng)});

  double serial = time_best_of(5, [&] { (void)evaluate_serial(net, flows, sc); });
  double parallel = time_best_of(5, [&] { (void)evaluate(net, flows, sc); });
  InfectionReport a = evaluate_serial(net, flows, sc);
  InfectionReport b = evaluate(net, flows, sc);
  std::printf("evaluate: serial %.3f ms, parallel %.3f ms, speedup %.2fx, |diff| %.3g\n", serial,
              parallel, serial / parallel, std::abs(a.total_new_cases - b.total_new_cases));

  RmpSolver rmp(net, sc);
  Multipliers zero = Multipliers::zeros(net, sc);
  RmpSolution sol = rmp.solve(zero.run, zero.station);
  Pricer pricer(net, sc);
  PricingOptions po;
  po.parallel = false;
  double price_serial = time_best_of(3, [&] { (void)pricer.price_all(sol, zero.run, zero.station, po); });
  po.parallel = true;
  double price_par = time_best_of(3, [&] { (void)pricer.price_all(sol, zero.run, zero.station, po); });
  auto ra = [&] {
    po.parallel = false;
    return pricer.price_all(sol, zero.run, zero.station, po);
  }();
  auto rb = [&] {
    po.parallel = true;
    return pricer.price_all(sol, zero.run, zero.station, po);
  }();
  int mismatch = 0;
  for (std::size_t i = 0; i < ra.size(); ++i)
    if (ra[i].best.has_value() != rb[i].best.has_value() ||
        (ra[i].best && ra[i].best->key != rb[i].best->key))
      ++mismatch;
  std::printf("pricing:  serial %.3f ms, parallel %.3f ms, speedup %.2fx, mismatches %d\n",
              price_serial, price_par, price_serial / price_par, mismatch);
  return 0;
}
