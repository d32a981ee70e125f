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

#ifndef PTSBE_NOISE_HPP
#define PTSBE_NOISE_HPP

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptsbe/errors.hpp"
#include "ptsbe/linalg.hpp"

namespace ptsbe {

inline constexpr double kChannelTolerance = 1e-8;
/// Kraus operators whose largest entry is below this are dropped at construction.
inline constexpr double kZeroOperatorThreshold = 1e-12;

/// Operator-sum representation {K_i} of a channel on `arity` qubits.
///
/// Construction drops zero operators and checks that every matrix is square with the same
/// power-of-two dimension. Trace preservation is NOT enforced here; use validate_cptp.
class KrausChannel {
   public:
    explicit KrausChannel(std::vector<Matrix> ops) {
        if (ops.empty()) {
            throw ValidationError("Kraus channel has no operators");
        }
        const auto rows = ops.front().rows();
        for (const auto &k : ops) {
            if (k.rows() != k.cols()) {
                throw ValidationError("Kraus operator is not square");
            }
            if (k.rows() != rows) {
                throw ValidationError("Kraus operators have mismatched dimensions");
            }
        }
        arity_ = qubit_arity(ops.front());
        if (arity_ < 1) {
            throw ValidationError("Kraus operator dimension must be 2^k with k >= 1");
        }
        for (auto &k : ops) {
            if (max_abs(k) >= kZeroOperatorThreshold) {
                ops_.push_back(std::move(k));
            }
        }
        if (ops_.empty()) {
            throw ValidationError("every Kraus operator is zero");
        }
    }

    const std::vector<Matrix> &ops() const noexcept {
        return ops_;
    }
    std::size_t size() const noexcept {
        return ops_.size();
    }
    const Matrix &op(std::size_t i) const {
        return ops_.at(i);
    }
    int arity() const noexcept {
        return arity_;
    }
    Eigen::Index dim() const noexcept {
        return ops_.front().rows();
    }

   private:
    std::vector<Matrix> ops_;
    int arity_ = 0;
};

struct CptpReport {
    bool valid = false;
    double deviation = 0.0;  ///< ‖Σ K_i†K_i − I‖_max
};

inline CptpReport validate_cptp(const KrausChannel &channel, double tol = kChannelTolerance) {
    const auto d = channel.dim();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto &k : channel.ops()) {
        sum += k.adjoint() * k;
    }
    const double dev = max_abs(sum - Matrix::Identity(d, d));
    return {dev <= tol, dev};
}

/// Channel whose Kraus operators are K_i = sqrt(p_i) U_i. Index i matches the channel's
/// Kraus index i.
struct UnitaryMixture {
    std::vector<double> probs;
    std::vector<Matrix> unitaries;
    /// unitaries[i] is exactly the identity; execution may skip it.
    std::vector<bool> identity;
};

/// Returns the unitary-mixture form when every K_i / c_i, with c_i = sqrt(tr(K_i†K_i)/d),
/// is unitary within `tol`.
inline std::optional<UnitaryMixture> detect_unitary_mixture(const KrausChannel &channel,
                                                            double tol = kChannelTolerance) {
    const double d = static_cast<double>(channel.dim());
    UnitaryMixture mix;
    for (const auto &k : channel.ops()) {
        const double c2 = (k.adjoint() * k).trace().real() / d;
        if (!(c2 > 0.0)) {
            return std::nullopt;
        }
        Matrix u = k / std::sqrt(c2);
        if (!is_unitary(u, tol)) {
            return std::nullopt;
        }
        mix.probs.push_back(c2);
        mix.identity.push_back(is_identity(u, 1e-15));
        mix.unitaries.push_back(std::move(u));
    }
    return mix;
}

/// depolarizing, bit_flip, phase_flip, amplitude_damping. Index 0 is always the
/// no-error operator.
inline KrausChannel builtin_channel(std::string_view name, double param) {
    if (!(param >= 0.0 && param <= 1.0)) {
        throw ValidationError("channel parameter " + std::to_string(param) + " outside [0, 1]");
    }
    std::vector<Matrix> ops;
    if (name == "depolarizing") {
        const double a = std::sqrt(1.0 - param);
        const double b = std::sqrt(param / 3.0);
        ops = {a * pauli::I(), b * pauli::X(), b * pauli::Y(), b * pauli::Z()};
    } else if (name == "bit_flip") {
        ops = {std::sqrt(1.0 - param) * pauli::I(), std::sqrt(param) * pauli::X()};
    } else if (name == "phase_flip") {
        ops = {std::sqrt(1.0 - param) * pauli::I(), std::sqrt(param) * pauli::Z()};
    } else if (name == "amplitude_damping") {
        Matrix k0 = Matrix::Zero(2, 2);
        k0(0, 0) = 1.0;
        k0(1, 1) = std::sqrt(1.0 - param);
        Matrix k1 = Matrix::Zero(2, 2);
        k1(0, 1) = std::sqrt(param);
        ops = {k0, k1};
    } else {
        throw ValidationError("unknown builtin channel '" + std::string(name) + "'");
    }
    return KrausChannel(std::move(ops));
}

inline bool is_builtin_channel(std::string_view name) {
    return name == "depolarizing" || name == "bit_flip" || name == "phase_flip" || name == "amplitude_damping";
}

}  // namespace ptsbe

#endif
