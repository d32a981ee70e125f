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

#ifndef PTSBE_LINALG_HPP
#define PTSBE_LINALG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace ptsbe {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline double max_abs(const Matrix &m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// ‖M†M − I‖_max.
inline double unitarity_deviation(const Matrix &m) {
    if (m.rows() != m.cols()) {
        return INFINITY;
    }
    return max_abs(m.adjoint() * m - Matrix::Identity(m.rows(), m.cols()));
}

inline bool is_unitary(const Matrix &m, double tol) {
    return unitarity_deviation(m) <= tol;
}

inline bool is_identity(const Matrix &m, double tol = 0.0) {
    return m.rows() == m.cols() && max_abs(m - Matrix::Identity(m.rows(), m.cols())) <= tol;
}

/// Number of qubits acted on by a 2^k x 2^k matrix, or -1 if the size is not a power of two.
inline int qubit_arity(const Matrix &m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        return -1;
    }
    auto d = static_cast<unsigned long long>(m.rows());
    if ((d & (d - 1)) != 0) {
        return -1;
    }
    int k = 0;
    while ((1ULL << k) < d) {
        ++k;
    }
    return k;
}

namespace pauli {
inline Matrix I() {
    return Matrix::Identity(2, 2);
}
inline Matrix X() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Matrix Y() {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
inline Matrix Z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
}  // namespace pauli

}  // namespace ptsbe

#endif
