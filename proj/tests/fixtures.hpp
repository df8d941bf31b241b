#pragma once

#include "arealab/interpolation.hpp"

#include <numeric>

namespace fixtures {

using namespace arealab;

struct Step {
    Lattice     lat;
    Hamiltonian prev, next;
};

/// Chain of `n` sites grown from the left end: step n adds site n-1.
inline Step tfim_chain_step(int n, double J = 1.0, double g = 2.0) {
    Step             s{build_lattice(1, {n}, 1.0), {}, {}};
    auto             model = tfim_model(s.lat, J, g);
    std::vector<int> sites(n);
    std::iota(sites.begin(), sites.end(), 0);
    s.next = model_hamiltonian(model, sites);
    sites.pop_back();
    s.prev = model_hamiltonian(model, sites);
    return s;
}

inline Step contrived_step(int n, int M, double delta = 1.0) {
    Step             s{build_lattice(1, {n}, 1.0), {}, {}};
    auto             model = contrived_model(s.lat, M, delta);
    std::vector<int> sites(n);
    std::iota(sites.begin(), sites.end(), 0);
    s.next = model_hamiltonian(model, sites);
    sites.pop_back();
    s.prev = model_hamiltonian(model, sites);
    return s;
}

} // namespace fixtures
