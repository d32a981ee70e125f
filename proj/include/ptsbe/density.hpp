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

#ifndef PTSBE_DENSITY_HPP
#define PTSBE_DENSITY_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ptsbe/circuit.hpp"
#include "ptsbe/errors.hpp"
#include "ptsbe/linalg.hpp"

namespace ptsbe {

/// The exact oracle refuses anything larger: 4^12 amplitudes is 256 MiB.
inline constexpr int kOracleMaxQubits = 12;

/// Row-major 2^n x 2^n density matrix. Deliberately shares no kernel code with StateVector
/// so it can serve as an independent reference.
class DensityMatrix {
   public:
    static DensityMatrix zero_state(int n_qubits) {
        if (n_qubits < 1 || n_qubits > kOracleMaxQubits) {
            throw ValidationError("density oracle supports 1.." + std::to_string(kOracleMaxQubits) +
                                  " qubits, got " + std::to_string(n_qubits));
        }
        DensityMatrix rho;
        rho.n_ = n_qubits;
        rho.dim_ = std::size_t{1} << n_qubits;
        rho.data_.assign(rho.dim_ * rho.dim_, Complex(0.0, 0.0));
        rho.data_[0] = 1.0;
        return rho;
    }

    static DensityMatrix from_pure(std::span<const Complex> psi, int n_qubits) {
        auto rho = zero_state(n_qubits);
        if (psi.size() != rho.dim_) {
            throw ValidationError("state size does not match qubit count");
        }
        for (std::size_t r = 0; r < rho.dim_; ++r) {
            for (std::size_t c = 0; c < rho.dim_; ++c) {
                rho.at(r, c) = psi[r] * std::conj(psi[c]);
            }
        }
        return rho;
    }

    int n_qubits() const noexcept {
        return n_;
    }
    std::size_t dim() const noexcept {
        return dim_;
    }
    Complex &at(std::size_t r, std::size_t c) {
        return data_[r * dim_ + c];
    }
    const Complex &at(std::size_t r, std::size_t c) const {
        return data_[r * dim_ + c];
    }

    Complex trace() const {
        Complex t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            t += at(i, i);
        }
        return t;
    }

    /// ρ → MρM† for M on `targets` (first target = most significant local bit).
    void conjugate_by(const Matrix &m, std::span<const int> targets) {
        data_ = sandwich(m, targets);
    }

    /// ρ → Σ_i K_i ρ K_i†.
    void apply_channel(const KrausChannel &channel, std::span<const int> targets) {
        std::vector<Complex> acc(data_.size(), Complex(0.0, 0.0));
        for (const auto &k : channel.ops()) {
            auto term = sandwich(k, targets);
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] += term[i];
            }
        }
        data_ = std::move(acc);
    }

    /// Throws ValidationError unless ρ is Hermitian and unit trace within 1e-10, and, when
    /// `check_spectrum` is set, has no eigenvalue below -1e-8.
    void check_invariants(bool check_spectrum = false) const {
        double herm = 0.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            for (std::size_t c = 0; c < dim_; ++c) {
                herm = std::max(herm, std::abs(at(r, c) - std::conj(at(c, r))));
            }
        }
        if (herm > 1e-10) {
            throw ValidationError("density matrix not Hermitian (deviation " + format_double(herm) + ")");
        }
        if (std::abs(trace() - 1.0) > 1e-10) {
            throw ValidationError("density matrix trace " + format_double(trace().real()) + " differs from 1");
        }
        if (check_spectrum) {
            Matrix m(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
            for (std::size_t r = 0; r < dim_; ++r) {
                for (std::size_t c = 0; c < dim_; ++c) {
                    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = at(r, c);
                }
            }
            Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-8) {
                throw ValidationError("density matrix has a negative eigenvalue");
            }
        }
    }

   private:
    static std::size_t local_index(std::size_t i, std::span<const int> targets) {
        std::size_t l = 0;
        for (int q : targets) {
            l = (l << 1) | ((i >> q) & 1U);
        }
        return l;
    }

    static std::size_t with_local(std::size_t i, std::span<const int> targets, std::size_t l) {
        const std::size_t k = targets.size();
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t bit = std::size_t{1} << targets[j];
            if ((l >> (k - 1 - j)) & 1U) {
                i |= bit;
            } else {
                i &= ~bit;
            }
        }
        return i;
    }

    /// Returns M ρ M† as a fresh buffer.
    std::vector<Complex> sandwich(const Matrix &m, std::span<const int> targets) const {
        if (qubit_arity(m) != static_cast<int>(targets.size())) {
            throw ValidationError("operator size does not match targets");
        }
        const std::size_t d = std::size_t{1} << targets.size();
        // left = M ρ
        std::vector<Complex> left(data_.size(), Complex(0.0, 0.0));
        for (std::size_t r = 0; r < dim_; ++r) {
            const std::size_t lr = local_index(r, targets);
            for (std::size_t a = 0; a < d; ++a) {
                const Complex coef = m(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(a));
                if (coef == Complex(0.0, 0.0)) {
                    continue;
                }
                const std::size_t src = with_local(r, targets, a);
                for (std::size_t c = 0; c < dim_; ++c) {
                    left[r * dim_ + c] += coef * data_[src * dim_ + c];
                }
            }
        }
        // out = left M†, (left M†)[r][c] = Σ_b left[r][b'] conj(M[lc][b])
        std::vector<Complex> out(data_.size(), Complex(0.0, 0.0));
        for (std::size_t c = 0; c < dim_; ++c) {
            const std::size_t lc = local_index(c, targets);
            for (std::size_t b = 0; b < d; ++b) {
                const Complex coef = std::conj(m(static_cast<Eigen::Index>(lc), static_cast<Eigen::Index>(b)));
                if (coef == Complex(0.0, 0.0)) {
                    continue;
                }
                const std::size_t src = with_local(c, targets, b);
                for (std::size_t r = 0; r < dim_; ++r) {
                    out[r * dim_ + c] += left[r * dim_ + src] * coef;
                }
            }
        }
        return out;
    }

    int n_ = 0;
    std::size_t dim_ = 0;
    std::vector<Complex> data_;
};

/// Exact evolution: gates as UρU†, every noise site as its full Kraus sum.
inline DensityMatrix evolve_exact(const NoisyCircuit &circuit) {
    if (circuit.n_qubits > kOracleMaxQubits) {
        throw ValidationError("circuit has " + std::to_string(circuit.n_qubits) +
                              " qubits; the density oracle is capped at " + std::to_string(kOracleMaxQubits));
    }
    auto rho = DensityMatrix::zero_state(circuit.n_qubits);
    std::size_t next_site = 0;
    for (std::size_t pos = 0; pos < circuit.ops.size(); ++pos) {
        rho.conjugate_by(circuit.ops[pos].matrix, circuit.ops[pos].targets);
        while (next_site < circuit.sites.size() && circuit.sites[next_site].position == pos) {
            const auto &site = circuit.sites[next_site];
            rho.apply_channel(circuit.channel_of(site).channel, site.targets);
            ++next_site;
        }
    }
    return rho;
}

/// Computational-basis readout: diag(ρ), clipped to [0, 1] and renormalized.
inline std::vector<double> outcome_distribution(const DensityMatrix &rho) {
    std::vector<double> p(rho.dim());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double v = rho.at(i, i).real();
        if (v < -1e-8) {
            throw ValidationError("negative diagonal entry " + format_double(v) + " in density matrix");
        }
        p[i] = std::clamp(v, 0.0, 1.0);
        sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-8) {
        throw ValidationError("density matrix diagonal sums to " + format_double(sum));
    }
    for (auto &v : p) {
        v /= sum;
    }
    return p;
}

/// ½ Σ|p_i − q_i|.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw ValidationError("distributions have different lengths (" + std::to_string(p.size()) + " vs " +
                              std::to_string(q.size()) + ")");
    }
    double sp = 0.0, sq = 0.0, d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sp += p[i];
        sq += q[i];
        d += std::abs(p[i] - q[i]);
    }
    if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6) {
        throw ValidationError("distribution does not sum to 1");
    }
    return 0.5 * d;
}

}  // namespace ptsbe

#endif
