#include "sisyphus/trapping.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "sisyphus/errors.hpp"

namespace sisyphus {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[std::max(a, b)] = std::min(a, b);
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

double first_merge_level(const LatticeParams& params, Sublevel m, int grid_per_cell) {
    const int nx = 2 * grid_per_cell;
    const int nz = 2 * grid_per_cell;
    const double hx = params.lattice_constant_x() / grid_per_cell;
    const double hz = params.lattice_constant_z() / grid_per_cell;
    const std::size_t n = static_cast<std::size_t>(nx) * nz;

    std::vector<double> energy(n);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nz; ++j) {
            energy[static_cast<std::size_t>(i) * nz + j] =
                potential(params, m, Vec2(i * hx, j * hz));
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return energy[a] < energy[b]; });

    DisjointSets sets(n);
    std::vector<char> active(n, 0);
    for (std::size_t idx : order) {
        active[idx] = 1;
        const int i = static_cast<int>(idx / nz);
        const int j = static_cast<int>(idx % nz);
        const std::size_t neighbours[4] = {
            static_cast<std::size_t>((i + 1) % nx) * nz + j,
            static_cast<std::size_t>((i + nx - 1) % nx) * nz + j,
            static_cast<std::size_t>(i) * nz + (j + 1) % nz,
            static_cast<std::size_t>(i) * nz + (j + nz - 1) % nz,
        };
        // Every component is seeded by a grid-local minimum, so the first
        // union joining two existing components happens at a saddle.
        int joined = 0;
        for (std::size_t nb : neighbours) {
            if (active[nb] && sets.find(nb) != sets.find(idx)) {
                sets.unite(nb, idx);
                if (++joined == 2) return energy[idx];
            }
        }
    }
    throw InvalidParameter("potential surface has a single basin; no escape energy");
}

}  // namespace

EscapeEnergies compute_escape_energies(const LatticeParams& params, int grid_per_cell) {
    if (grid_per_cell < 8) throw InvalidParameter("escape-energy grid is too coarse");
    return {first_merge_level(params, Sublevel::plus, grid_per_cell),
            first_merge_level(params, Sublevel::minus, grid_per_cell)};
}

Motion classify_trapped(const AtomState& state, const LatticeParams& params,
                        const EscapeEnergies& escape) {
    const double e = state.kinetic_energy() + potential(params, state.sublevel, state.position);
    return classify_energy(e, state.sublevel, escape);
}

}  // namespace sisyphus
