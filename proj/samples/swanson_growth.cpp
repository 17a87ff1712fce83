// Frame-operator growth for the Swanson pair and the regularity verdict.

#include <cstdio>
#include <vector>

#include "pbosons/frames.hpp"
#include "pbosons/models.hpp"

using namespace pbosons;

int main() {
  std::vector<GrowthSample> growth;
  for (int dim : {16, 32, 64}) {
    const auto pair = instantiate(ModelSpec::swanson_spec(0.3, dim));
    const int trust = default_trust(dim);
    const auto sys = build_system(pair, clean_n_max(dim, trust));
    const auto b = riesz_bounds(frame_operators(sys, trust).s_phi, trust);
    std::printf("dim %3d  A %.3e  B %.3e  B/A %.3e\n", dim, b.lower, b.upper, b.condition);
    growth.push_back({dim, b.condition});
  }
  std::printf("classification: %s\n", std::string(to_string(classify_regularity(growth))).c_str());
}
