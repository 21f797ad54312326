// Worst-case distance to equilibrium around t_N for a few population sizes:
// the drop from ~1 to ~0 happens over a window that does not grow with N.

#include <cstdio>
#include <vector>

#include "epsis/exact.hpp"

int main() {
  using namespace epsis;
  const std::vector<double> offsets{-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0};
  std::printf("%6s %8s", "N", "t_N");
  for (double o : offsets) std::printf("  t_N%+5.2f", o);
  std::printf("\n");
  for (State N : {100, 400, 1600}) {
    const ModelParams p{1.0, 2.0, 0.5, N};
    const double tN = derived(p).t_N;
    std::vector<double> times;
    for (double o : offsets) times.push_back(tN + o);
    const auto prof = mixing_profile(p, times, StartSet::endpoints(p));
    std::printf("%6lld %8.4f", static_cast<long long>(N), tN);
    for (double r : prof.rho) std::printf("  %9.4f", r);
    std::printf("\n");
  }
  const ModelParams p{1.0, 2.0, 0.5, 400};
  const auto g = spectral_gap(p);
  std::printf("\nN=400: spectral gap %.6f (J = %.6f), t_mix(0.25) = %.4f\n", g.gap, derived(p).J,
              mixing_time(p, 0.25, StartSet::endpoints(p)));
}
