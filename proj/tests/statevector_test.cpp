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

#include "ptsbe/statevector.hpp"

#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "test_support.hpp"

using namespace ptsbe;

namespace {

StateVector run(const std::string &text) {
    auto c = parse_circuit(text);
    auto s = StateVector::init_zero(c.n_qubits);
    for (const auto &op : c.ops) {
        s.apply_gate(op);
    }
    return s;
}

Eigen::VectorXcd as_vector(const StateVector &s) {
    auto a = s.amplitudes();
    Eigen::VectorXcd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = a[i];
    }
    return v;
}

Eigen::VectorXcd random_state(std::mt19937_64 &rng, int n) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(Eigen::Index{1} << n);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = Complex(g(rng), g(rng));
    }
    return v / v.norm();
}

void load(StateVector &s, const Eigen::VectorXcd &v) {
    auto a = s.amplitudes();
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = v(static_cast<Eigen::Index>(i));
    }
}

}  // namespace

TEST(statevector, init_zero) {
    auto s = StateVector::init_zero(3);
    EXPECT_EQ(s.size(), 8u);
    EXPECT_EQ(s.amplitude(0), Complex(1, 0));
    EXPECT_DOUBLE_EQ(s.norm_squared(), 1.0);
    EXPECT_THROW(StateVector::init_zero(0), ValidationError);
    EXPECT_THROW(StateVector::init_zero(31), ValidationError);
}

TEST(statevector, bitstring_convention) {
    EXPECT_EQ(to_bitstring(1, 2), "01");
    EXPECT_EQ(to_bitstring(6, 3), "110");
    EXPECT_EQ(from_bitstring("110"), 6u);
    auto s = run("qubits 2\ngate x 0");
    EXPECT_EQ(s.amplitude(1), Complex(1, 0));
}

TEST(statevector, bell_state_amplitudes_and_shots) {
    auto s = run("qubits 2\ngate h 0\ngate cx 0 1");
    const double r = std::numbers::sqrt2 / 2;
    EXPECT_NEAR(std::abs(s.amplitude(0) - r), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s.amplitude(3) - r), 0.0, 1e-15);
    EXPECT_EQ(s.amplitude(1), Complex(0, 0));
    RandomStream rng(42);
    auto shots = sample_shots(s, 1000, rng);
    EXPECT_EQ(shots.size(), 1000u);
    for (const auto &b : shots.bitstrings()) {
        EXPECT_TRUE(b == "00" || b == "11") << b;
    }
    auto counts = shots.counts();
    EXPECT_GT(counts[0], 400u);
    EXPECT_GT(counts[3], 400u);
}

TEST(statevector, deterministic_state_gives_identical_shots) {
    auto s = run("qubits 3\ngate x 2");
    RandomStream rng(1);
    auto shots = sample_shots(s, 100, rng);
    for (std::size_t i = 0; i < shots.size(); ++i) {
        EXPECT_EQ(shots.bitstring(i), "100");
    }
    EXPECT_THROW(sample_shots(s, 0, rng), ValidationError);
}

TEST(statevector, first_target_is_most_significant) {
    // cx 1 0: qubit 1 controls qubit 0.
    auto s = run("qubits 2\ngate x 1\ngate cx 1 0");
    EXPECT_EQ(s.amplitude(3), Complex(1, 0));
    auto t = run("qubits 2\ngate x 0\ngate cx 1 0");
    EXPECT_EQ(t.amplitude(1), Complex(1, 0));
}

TEST(statevector, apply_matrix_matches_kronecker_embedding) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const int k = 1 + static_cast<int>(rng() % std::min(3, n));
        std::vector<int> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        std::vector<int> targets(all.begin(), all.begin() + k);
        Matrix m(1 << k, 1 << k);
        std::normal_distribution<double> g;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                m(r, c) = Complex(g(rng), g(rng));
            }
        }
        auto v = random_state(rng, n);
        auto s = StateVector::init_zero(n);
        load(s, v);
        const double predicted = s.transformed_norm_squared(m, targets);
        s.apply_matrix(m, targets);
        Eigen::VectorXcd expected = test::embed_full(m, targets, n) * v;
        EXPECT_LE((as_vector(s) - expected).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
        EXPECT_NEAR(predicted, expected.squaredNorm(), 1e-12 * std::max(1.0, predicted));
    }
}

TEST(statevector, apply_matrix_rejects_bad_targets) {
    auto s = StateVector::init_zero(2);
    std::vector<int> bad{2};
    EXPECT_THROW(s.apply_matrix(pauli::X(), bad), ValidationError);
    std::vector<int> dup{0, 0};
    EXPECT_THROW(s.apply_matrix(Matrix::Identity(4, 4), dup), ValidationError);
    std::vector<int> one{0};
    EXPECT_THROW(s.apply_matrix(Matrix::Identity(4, 4), one), ValidationError);
}

TEST(statevector, kraus_application_renormalizes) {
    auto s = run("qubits 1\ngate h 0");
    auto ad = builtin_channel("amplitude_damping", 0.36);
    std::vector<int> t{0};
    EXPECT_NEAR(kraus_outcome_probability(s, ad.op(1), t), 0.18, 1e-15);
    EXPECT_NEAR(kraus_outcome_probability(s, ad.op(0), t), 0.82, 1e-15);
    const double p = apply_kraus_normalized(s, ad.op(1), t);
    EXPECT_NEAR(p, 0.18, 1e-15);
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(s.amplitude(0)), 1.0, 1e-14);
}

TEST(statevector, annihilation_is_reported) {
    auto s = StateVector::init_zero(1);
    Matrix p1 = Matrix::Zero(2, 2);
    p1(1, 1) = 1.0;
    std::vector<int> t{0};
    EXPECT_THROW(apply_kraus_normalized(s, p1, t), AnnihilationError);
    auto fresh = StateVector::init_zero(1);
    EXPECT_EQ(kraus_outcome_probability(fresh, p1, t), 0.0);
}

TEST(statevector, unnormalized_state_cannot_be_sampled) {
    auto s = StateVector::init_zero(1);
    s.scale(0.5);
    RandomStream rng(0);
    EXPECT_THROW(sample_shots(s, 1, rng), ValidationError);
}

TEST(statevector, shot_frequencies_match_born_rule) {
    std::mt19937_64 rng_init(5);
    auto s = StateVector::init_zero(4);
    load(s, random_state(rng_init, 4));
    RandomStream rng(77);
    auto shots = sample_shots(s, 200000, rng);
    std::vector<std::uint64_t> observed(16, 0);
    for (auto o : shots.outcomes) {
        ++observed[o];
    }
    EXPECT_GT(test::chi_square_gof(observed, outcome_probabilities(s)), 1e-4);
}

TEST(statevector, same_seed_same_shots) {
    auto s = run("qubits 3\ngate h 0\ngate h 1\ngate h 2");
    RandomStream a(9), b(9), c(10);
    auto sa = sample_shots(s, 500, a).outcomes;
    EXPECT_EQ(sa, sample_shots(s, 500, b).outcomes);
    EXPECT_NE(sa, sample_shots(s, 500, c).outcomes);
}
