#pragma once

#include "sisyphus/lattice.hpp"
#include "sisyphus/state.hpp"

namespace sisyphus {

/// Lowest saddle of each potential surface, i.e. the energy at which the basin
/// of a well first connects to a neighbouring well.
struct EscapeEnergies {
    double plus = 0.0;
    double minus = 0.0;
    double of(Sublevel m) const noexcept { return m == Sublevel::plus ? plus : minus; }
};

/// Grid scan over a 2x2 supercell with `grid_per_cell`^2 points per unit
/// cell. Basins are grown in order of increasing energy; the level of the
/// first merge between two basins is the escape energy.
EscapeEnergies compute_escape_energies(const LatticeParams& params, int grid_per_cell = 256);

enum class Motion { trapped, traveling };

/// Trapped iff p^2/2 + U_m(r) < U_escape(m). Energy exactly at the saddle
/// counts as traveling.
Motion classify_trapped(const AtomState& state, const LatticeParams& params,
                        const EscapeEnergies& escape);

inline Motion classify_energy(double total_energy, Sublevel m, const EscapeEnergies& escape) {
    return total_energy < escape.of(m) ? Motion::trapped : Motion::traveling;
}

}  // namespace sisyphus
