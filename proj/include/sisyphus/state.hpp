#pragma once

#include <cmath>

#include "sisyphus/lattice.hpp"

namespace sisyphus {

/// One simulated atom. Velocities equal momenta (M = 1).
struct AtomState {
    Vec2 position = Vec2::Zero();
    Vec2 momentum = Vec2::Zero();
    Sublevel sublevel = Sublevel::plus;
    double time = 0.0;

    bool is_finite() const noexcept {
        return position.allFinite() && momentum.allFinite() && std::isfinite(time);
    }
    double kinetic_energy() const noexcept { return 0.5 * momentum.squaredNorm(); }
};

enum class Axis : int { x = 0, z = 1 };

inline constexpr Axis both_axes[] = {Axis::x, Axis::z};

constexpr const char* axis_name(Axis a) noexcept { return a == Axis::x ? "x" : "z"; }
constexpr int index(Axis a) noexcept { return static_cast<int>(a); }

}  // namespace sisyphus
