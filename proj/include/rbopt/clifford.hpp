// Copyright 2026 The rbopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RBOPT_CLIFFORD_HPP
#define RBOPT_CLIFFORD_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rbopt/error.hpp"

namespace rbopt {

/// Single-qubit Clifford group as 24 exact 2x2 unitaries (up to global
/// phase) generated by closure of {H, S}. Each element also carries its
/// Bloch-sphere action, a signed permutation matrix with entries in {-1,0,1},
/// so sequence composition is exact integer arithmetic.
class CliffordGroup {
   public:
    using Unitary = std::array<std::complex<double>, 4>;
    using Rotation = std::array<int, 9>;

    static const CliffordGroup& instance() {
        static const CliffordGroup group;
        return group;
    }

    static constexpr std::size_t size() noexcept { return 24; }

    const Unitary& unitary(std::size_t g) const { return unitaries_.at(g); }
    const Rotation& rotation(std::size_t g) const { return rotations_.at(g); }
    /// Index of a*b, meaning b is applied first.
    std::size_t compose(std::size_t a, std::size_t b) const { return table_[a * 24 + b]; }
    std::size_t inverse(std::size_t g) const { return inverse_[g]; }
    std::size_t identity() const noexcept { return 0; }

   private:
    CliffordGroup() {
        const double r = 1.0 / std::sqrt(2.0);
        const Unitary id{1.0, 0.0, 0.0, 1.0};
        const Unitary h{r, r, r, -r};
        const Unitary s{1.0, 0.0, 0.0, std::complex<double>(0.0, 1.0)};
        add(id);
        for (std::size_t i = 0; i < unitaries_.size(); ++i) {
            add(multiply(h, unitaries_[i]));
            add(multiply(s, unitaries_[i]));
        }
        if (unitaries_.size() != 24) throw Error(Errc::InvalidArgument, "Clifford closure did not produce 24 elements");
        table_.resize(24 * 24);
        inverse_.resize(24);
        for (std::size_t a = 0; a < 24; ++a)
            for (std::size_t b = 0; b < 24; ++b) {
                table_[a * 24 + b] = find(multiply_rotation(rotations_[a], rotations_[b]));
                if (table_[a * 24 + b] == 0) inverse_[a] = b;
            }
    }

    static Unitary multiply(const Unitary& a, const Unitary& b) {
        return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3]};
    }

    static Rotation multiply_rotation(const Rotation& a, const Rotation& b) {
        Rotation c{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
        return c;
    }

    // R_ij = tr(sigma_i U sigma_j U^dagger) / 2, rounded to the exact integer.
    static Rotation bloch(const Unitary& u) {
        using C = std::complex<double>;
        const C i1(0.0, 1.0);
        const std::array<Unitary, 3> pauli{Unitary{0.0, 1.0, 1.0, 0.0}, Unitary{0.0, -i1, i1, 0.0},
                                           Unitary{1.0, 0.0, 0.0, -1.0}};
        const Unitary ud{std::conj(u[0]), std::conj(u[2]), std::conj(u[1]), std::conj(u[3])};
        Rotation rot{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const Unitary m = multiply(pauli[i], multiply(u, multiply(pauli[j], ud)));
                rot[i * 3 + j] = static_cast<int>(std::lround(0.5 * (m[0] + m[3]).real()));
            }
        return rot;
    }

    std::size_t find(const Rotation& rot) const {
        for (std::size_t g = 0; g < rotations_.size(); ++g)
            if (rotations_[g] == rot) return g;
        return rotations_.size();
    }

    void add(const Unitary& u) {
        const Rotation rot = bloch(u);
        if (find(rot) != rotations_.size()) return;
        unitaries_.push_back(u);
        rotations_.push_back(rot);
    }

    std::vector<Unitary> unitaries_;
    std::vector<Rotation> rotations_;
    std::vector<std::size_t> table_;
    std::vector<std::size_t> inverse_;
};

}  // namespace rbopt

#endif  // RBOPT_CLIFFORD_HPP
