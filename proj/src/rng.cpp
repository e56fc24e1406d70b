#include "nivtest/rng.hpp"

#include "nivtest/nulldist.hpp"

namespace nivtest {

double CounterRng::next_normal() {
  // Phi^{-1}(u) = -Phi^{-1}(1-u) = -normal_quantile(u)
  return -nulldist::normal_quantile(next_uniform());
}

}  // namespace nivtest
