// Copyright 2026 The ptsbe Authors
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

#ifndef PTSBE_STATEVECTOR_HPP
#define PTSBE_STATEVECTOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ptsbe/circuit.hpp"
#include "ptsbe/errors.hpp"
#include "ptsbe/linalg.hpp"
#include "ptsbe/rng.hpp"

namespace ptsbe {

/// Largest supported register. A state holds 2^n complex doubles (2^(n+1) machine floats),
/// i.e. 16 GiB at n = 30.
inline constexpr int kMaxQubits = 30;
inline constexpr double kAnnihilationThreshold = 1e-14;
inline constexpr double kNormTolerance = 1e-8;

/// Bitstring of basis index `index`: qubit n-1 leftmost, qubit 0 rightmost.
inline std::string to_bitstring(std::uint64_t index, int n_qubits) {
    std::string s(static_cast<std::size_t>(n_qubits), '0');
    for (int q = 0; q < n_qubits; ++q) {
        if ((index >> q) & 1U) {
            s[static_cast<std::size_t>(n_qubits - 1 - q)] = '1';
        }
    }
    return s;
}

inline std::uint64_t from_bitstring(std::string_view bits) {
    std::uint64_t v = 0;
    for (char ch : bits) {
        if (ch != '0' && ch != '1') {
            throw ValidationError("bad bitstring '" + std::string(bits) + "'");
        }
        v = (v << 1) | static_cast<std::uint64_t>(ch == '1');
    }
    return v;
}

/// Pure state on n qubits. Basis index i has qubit q in bit q (qubit 0 is the LSB).
class StateVector {
   public:
    static StateVector init_zero(int n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw ValidationError("qubit count " + std::to_string(n_qubits) + " outside [1, " +
                                  std::to_string(kMaxQubits) + "]");
        }
        StateVector s;
        s.n_ = n_qubits;
        s.amps_.assign(std::size_t{1} << n_qubits, Complex(0.0, 0.0));
        s.amps_[0] = 1.0;
        return s;
    }

    int n_qubits() const noexcept {
        return n_;
    }
    std::size_t size() const noexcept {
        return amps_.size();
    }
    std::span<const Complex> amplitudes() const noexcept {
        return amps_;
    }
    std::span<Complex> amplitudes() noexcept {
        return amps_;
    }
    Complex amplitude(std::uint64_t index) const {
        return amps_.at(index);
    }

    double norm_squared() const noexcept {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    void scale(double factor) noexcept {
        for (auto &a : amps_) {
            a *= factor;
        }
    }

    /// Applies an arbitrary 2^k x 2^k matrix to `targets` without renormalizing. The first
    /// target is the most significant bit of the matrix's local index.
    void apply_matrix(const Matrix &m, std::span<const int> targets) {
        check(m, targets);
        if (targets.size() == 1) {
            apply_1q(m, targets[0]);
        } else if (targets.size() == 2) {
            apply_2q(m, targets[0], targets[1]);
        } else {
            apply_kq(m, targets);
        }
    }

    void apply_gate(const GateOp &op) {
        apply_matrix(op.matrix, op.targets);
    }

    /// ‖M|ψ⟩‖² computed without modifying the state.
    double transformed_norm_squared(const Matrix &m, std::span<const int> targets) const {
        check(m, targets);
        const std::size_t k = targets.size();
        const std::size_t dim = std::size_t{1} << k;
        std::vector<std::size_t> offsets = local_offsets(targets);
        std::vector<Complex> in(dim);
        double total = 0.0;
        for_each_group(targets, [&](std::size_t base) {
            for (std::size_t l = 0; l < dim; ++l) {
                in[l] = amps_[base + offsets[l]];
            }
            for (std::size_t r = 0; r < dim; ++r) {
                Complex acc = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    acc += mul(m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)), in[c]);
                }
                total += std::norm(acc);
            }
        });
        return total;
    }

   private:
    void check(const Matrix &m, std::span<const int> targets) const {
        if (targets.empty()) {
            throw ValidationError("operator has no targets");
        }
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (targets[i] < 0 || targets[i] >= n_) {
                throw ValidationError("target qubit " + std::to_string(targets[i]) + " out of range for " +
                                      std::to_string(n_) + " qubit(s)");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (targets[i] == targets[j]) {
                    throw ValidationError("duplicate target qubit " + std::to_string(targets[i]));
                }
            }
        }
        if (qubit_arity(m) != static_cast<int>(targets.size())) {
            throw ValidationError("matrix dimension does not match " + std::to_string(targets.size()) +
                                  " target(s)");
        }
    }

    static std::vector<std::size_t> local_offsets(std::span<const int> targets) {
        const std::size_t k = targets.size();
        std::vector<std::size_t> off(std::size_t{1} << k, 0);
        for (std::size_t l = 0; l < off.size(); ++l) {
            for (std::size_t j = 0; j < k; ++j) {
                if ((l >> (k - 1 - j)) & 1U) {
                    off[l] |= std::size_t{1} << targets[j];
                }
            }
        }
        return off;
    }

    /// Calls f(base) for every basis index whose target bits are all zero.
    template <typename F>
    void for_each_group(std::span<const int> targets, F &&f) const {
        std::vector<int> sorted(targets.begin(), targets.end());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t groups = amps_.size() >> targets.size();
        for (std::size_t g = 0; g < groups; ++g) {
            std::size_t base = g;
            for (int p : sorted) {
                const std::size_t low = base & ((std::size_t{1} << p) - 1);
                base = ((base >> p) << (p + 1)) | low;
            }
            f(base);
        }
    }

    static Complex mul(Complex a, Complex b) noexcept {
        return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
    }

    void apply_1q(const Matrix &m, int target) {
        const Complex m00 = m(0, 0), m01 = m(0, 1), m10 = m(1, 0), m11 = m(1, 1);
        const std::size_t bit = std::size_t{1} << target;
        const std::size_t n = amps_.size();
        Complex *a = amps_.data();
        for (std::size_t i0 = 0; i0 < n; i0 += 2 * bit) {
            for (std::size_t j = i0; j < i0 + bit; ++j) {
                const Complex x = a[j];
                const Complex y = a[j + bit];
                a[j] = mul(m00, x) + mul(m01, y);
                a[j + bit] = mul(m10, x) + mul(m11, y);
            }
        }
    }

    void apply_2q(const Matrix &m, int hi_target, int lo_target) {
        Complex u[4][4];
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                u[r][c] = m(r, c);
            }
        }
        const std::size_t bh = std::size_t{1} << hi_target;
        const std::size_t bl = std::size_t{1} << lo_target;
        const int p0 = std::min(hi_target, lo_target);
        const int p1 = std::max(hi_target, lo_target);
        const std::size_t mask0 = (std::size_t{1} << p0) - 1;
        const std::size_t mask1 = (std::size_t{1} << p1) - 1;
        const std::size_t groups = amps_.size() >> 2;
        Complex *a = amps_.data();
        for (std::size_t g = 0; g < groups; ++g) {
            std::size_t base = ((g & ~mask0) << 1) | (g & mask0);
            base = ((base & ~mask1) << 1) | (base & mask1);
            const std::size_t idx[4] = {base, base | bl, base | bh, base | bh | bl};
            const Complex in[4] = {a[idx[0]], a[idx[1]], a[idx[2]], a[idx[3]]};
            for (int r = 0; r < 4; ++r) {
                a[idx[r]] = mul(u[r][0], in[0]) + mul(u[r][1], in[1]) + mul(u[r][2], in[2]) + mul(u[r][3], in[3]);
            }
        }
    }

    void apply_kq(const Matrix &m, std::span<const int> targets) {
        const std::size_t dim = std::size_t{1} << targets.size();
        std::vector<std::size_t> offsets = local_offsets(targets);
        std::vector<Complex> mat(dim * dim);
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                mat[r * dim + c] = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
        std::vector<Complex> in(dim);
        Complex *a = amps_.data();
        for_each_group(targets, [&](std::size_t base) {
            for (std::size_t l = 0; l < dim; ++l) {
                in[l] = a[base + offsets[l]];
            }
            for (std::size_t r = 0; r < dim; ++r) {
                Complex acc = 0.0;
                const Complex *row = &mat[r * dim];
                for (std::size_t c = 0; c < dim; ++c) {
                    acc += mul(row[c], in[c]);
                }
                a[base + offsets[r]] = acc;
            }
        });
    }

    int n_ = 0;
    std::vector<Complex> amps_;
};

inline StateVector init_zero(int n_qubits) {
    return StateVector::init_zero(n_qubits);
}

/// ⟨ψ|K†K|ψ⟩ for K acting on `targets`.
inline double kraus_outcome_probability(const StateVector &state, const Matrix &k, std::span<const int> targets) {
    return state.transformed_norm_squared(k, targets);
}

/// state ← K|ψ⟩/‖K|ψ⟩‖; returns ‖K|ψ⟩‖². Throws AnnihilationError when ‖K|ψ⟩‖² is below
/// kAnnihilationThreshold, in which case the state is left unspecified. The returned
/// probability is capped at 1 against rounding.
inline double apply_kraus_normalized(StateVector &state, const Matrix &k, std::span<const int> targets) {
    state.apply_matrix(k, targets);
    const double p = state.norm_squared();
    if (!(p > kAnnihilationThreshold)) {
        throw AnnihilationError("Kraus operator annihilates the state (probability " + format_double(p) + ")");
    }
    state.scale(1.0 / std::sqrt(p));
    return std::min(p, 1.0);
}

inline std::vector<double> outcome_probabilities(const StateVector &state) {
    std::vector<double> p(state.size());
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::norm(amps[i]);
    }
    return p;
}

/// Computational-basis shots from one state.
struct ShotBatch {
    int n_qubits = 0;
    std::vector<std::uint64_t> outcomes;

    std::size_t size() const noexcept {
        return outcomes.size();
    }
    std::string bitstring(std::size_t i) const {
        return to_bitstring(outcomes.at(i), n_qubits);
    }
    std::vector<std::string> bitstrings() const {
        std::vector<std::string> out;
        out.reserve(outcomes.size());
        for (auto o : outcomes) {
            out.push_back(to_bitstring(o, n_qubits));
        }
        return out;
    }
    /// Outcome → multiplicity, ordered by basis index (equivalently by bitstring).
    std::map<std::uint64_t, std::uint64_t> counts() const {
        std::map<std::uint64_t, std::uint64_t> c;
        for (auto o : outcomes) {
            ++c[o];
        }
        return c;
    }
};

/// Prefix-sum table over |ψ_i|², built once per state; each draw is a binary search.
class OutcomeSampler {
   public:
    explicit OutcomeSampler(const StateVector &state) : n_qubits_(state.n_qubits()) {
        auto amps = state.amplitudes();
        cumulative_.resize(amps.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < amps.size(); ++i) {
            const double p = std::norm(amps[i]);
            acc += p;
            cumulative_[i] = acc;
            if (p > 0.0) {
                last_nonzero_ = i;
            }
        }
        if (std::abs(acc - 1.0) > kNormTolerance) {
            throw ValidationError("cannot sample from an unnormalized state (norm² = " + format_double(acc) + ")");
        }
        total_ = acc;
    }

    std::uint64_t draw(RandomStream &rng) const {
        const double u = rng.uniform() * total_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        auto idx = static_cast<std::size_t>(it - cumulative_.begin());
        return std::min(idx, last_nonzero_);
    }

    ShotBatch sample(std::size_t m, RandomStream &rng) const {
        ShotBatch batch{n_qubits_, {}};
        batch.outcomes.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            batch.outcomes.push_back(draw(rng));
        }
        return batch;
    }

   private:
    int n_qubits_;
    std::vector<double> cumulative_;
    double total_ = 1.0;
    std::size_t last_nonzero_ = 0;
};

/// m independent shots; the state is not collapsed or modified.
inline ShotBatch sample_shots(const StateVector &state, std::size_t m, RandomStream &rng) {
    if (m < 1) {
        throw ValidationError("shot count must be at least 1");
    }
    return OutcomeSampler(state).sample(m, rng);
}

}  // namespace ptsbe

#endif
