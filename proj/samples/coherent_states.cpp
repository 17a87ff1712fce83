// Coherent states of the extended oscillator and the coherent-state integral.

#include <cstdio>

#include "pbosons/coherent.hpp"
#include "pbosons/models.hpp"

using namespace pbosons;

int main() {
  const auto pair = instantiate(ModelSpec::oscillator(1.0));
  const auto sys = build_system(pair, clean_n_max(64, 32));
  for (cplx z : {cplx(0.3, 0.0), cplx(0.0, 0.7), cplx(-0.5, 0.4)}) {
    const auto st = coherent_build(sys, z, CoherentOptions{1e-6});
    std::printf("z = %+.2f%+.2fi  eigen-relation %.2e  tail %.2e\n", z.real(), z.imag(),
                eigen_relation_check(st, pair, 32).max(), st.tail_bound);
  }

  const auto seeded = build_system(instantiate(ModelSpec::riesz(10.0)), 62);
  const auto q = identity_resolution_quadrature(seeded, 12);
  for (const auto& step : q.trace)
    std::printf("%3d x %3d nodes  defect %.3e  change %.1e\n", step.radial, step.angular, step.defect, step.change);

  try {
    identity_resolution_quadrature(build_system(instantiate(ModelSpec::swanson_spec(0.4)), 62), 12);
  } catch (const Error& e) {
    std::printf("swanson(0.4): %s\n", e.what());
  }
}
