// Build pseudo-bosons from a known similarity, then recover it from the frame operator.

#include <cstdio>

#include "pbosons/frames.hpp"
#include "pbosons/models.hpp"

using namespace pbosons;

int main() {
  const auto spec = ModelSpec::riesz(10.0, 64);
  const auto pair = instantiate(spec);  // a = T c T^-1, b = T c^dag T^-1
  std::printf("|[a,b] - 1| on trust 32: %.2e\n", commutation_defects(pair, 32).canonical);

  const auto sys = build_system(pair, 31);
  std::printf("Gram deviation: %.2e\n", gram_deviation(sys));

  const auto w = bosonize(pair, sys, frame_operators(sys, 32).s_phi);
  const Matrix seed = riesz_seed_operator(spec).restricted(32);
  std::printf("residual on trust %d: %.2e\n", w.headline, w.residual());
  std::printf("orthonormality of T^-1 phi_n: %.2e\n", w.orthonormality);
  std::printf("|T_recovered - T| / |T|: %.2e\n", norm2(Matrix(w.t.entries() - seed)) / norm2(seed));
}
