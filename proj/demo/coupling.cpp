// Runs the monotone coupling from the two extreme states and compares the
// empirical tail of the meeting time with the exact distance between the
// two laws.

#include <cstdio>

#include "epsis/experiments.hpp"
#include "epsis/simulate.hpp"

int main() {
  using namespace epsis;
  const ModelParams p{1.0, 2.0, 0.5, 200};
  const auto trace = simulate_coupled(p, 0, p.N, 10.0, GoodSet::standard(p), 2024);
  if (trace.tau_couple)
    std::printf("one trace: copies met at t = %.4f after %zu + %zu events\n", *trace.tau_couple,
                trace.w_trajectory.events(), trace.z_trajectory.events());

  const double tN = derived(p).t_N;
  const std::vector<double> times{tN - 0.5, tN, tN + 0.5, tN + 1.0};
  const auto tails = coupling_survival(p, 0, p.N, times, 5000, 7, 4);
  const auto tv = tv_between_starts(p, 0, p.N, times);
  std::printf("\n%8s %10s %22s %10s\n", "t", "P(tau>t)", "95% interval", "exact TV");
  for (std::size_t i = 0; i < times.size(); ++i)
    std::printf("%8.4f %10.4f   [%8.4f, %8.4f] %10.4f\n", times[i], tails[i].estimate,
                tails[i].lower, tails[i].upper, tv[i]);
}
