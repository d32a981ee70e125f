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

#ifndef PTSBE_TESTS_TEST_SUPPORT_HPP
#define PTSBE_TESTS_TEST_SUPPORT_HPP

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ptsbe/ptsbe.hpp"

namespace ptsbe::test {

inline std::string demo_path(const std::string &name) {
    return std::string(PTSBE_DEMO_DIR) + "/" + name;
}

inline NoisyCircuit load_demo(const std::string &circ, const std::string &noise) {
    return attach_noise(parse_circuit(read_text_file(demo_path(circ))),
                        parse_noise_model(read_text_file(demo_path(noise))));
}

inline std::filesystem::path temp_dir(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / ("ptsbe_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Random unitary built as a product of random single-qubit rotations and CNOT layers.
inline Matrix random_unitary(std::mt19937_64 &rng, int arity) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const Eigen::Index d = Eigen::Index{1} << arity;
    Matrix u = Matrix::Identity(d, d);
    auto embed = [&](const Matrix &g, int q) {
        // first-listed-target convention: qubit 0 of the local register is the MSB
        Matrix full = Matrix::Identity(1, 1);
        for (int j = 0; j < arity; ++j) {
            Matrix f = (j == q) ? g : Matrix::Identity(2, 2);
            Matrix next(full.rows() * 2, full.cols() * 2);
            for (Eigen::Index r = 0; r < full.rows(); ++r) {
                for (Eigen::Index c = 0; c < full.cols(); ++c) {
                    next.block(2 * r, 2 * c, 2, 2) = full(r, c) * f;
                }
            }
            full = next;
        }
        return full;
    };
    const int layers = arity == 1 ? 1 : 3;
    for (int layer = 0; layer < layers; ++layer) {
        for (int q = 0; q < arity; ++q) {
            Matrix g = builtin_gate_matrix("rz", {angle(rng)}) * builtin_gate_matrix("ry", {angle(rng)}) *
                       builtin_gate_matrix("rz", {angle(rng)});
            u = embed(g, q) * u;
        }
        if (arity == 2) {
            u = builtin_gate_matrix("cx", {}) * u;
        }
    }
    return std::polar(1.0, angle(rng)) * u;
}

struct RandomMixture {
    std::vector<double> probs;
    KrausChannel channel;
};

inline RandomMixture random_mixture(std::mt19937_64 &rng, int arity) {
    std::uniform_int_distribution<int> count(1, 4);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    const int n = count(rng);
    std::vector<double> probs(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto &p : probs) {
        p = w(rng);
        sum += p;
    }
    std::vector<Matrix> ops;
    for (auto &p : probs) {
        p /= sum;
        ops.push_back(std::sqrt(p) * random_unitary(rng, arity));
    }
    return {probs, KrausChannel(std::move(ops))};
}

/// Amplitude damping with gamma in [0.05, 1) sandwiched between random unitaries:
/// K_i -> U K_i V stays CPTP and keeps the rank-1 operator that rules out a mixture.
inline KrausChannel random_non_mixture(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> g(0.05, 0.999);
    auto base = builtin_channel("amplitude_damping", g(rng));
    Matrix u = random_unitary(rng, 1);
    Matrix v = random_unitary(rng, 1);
    std::vector<Matrix> ops;
    for (const auto &k : base.ops()) {
        ops.push_back(u * k * v);
    }
    return KrausChannel(std::move(ops));
}

struct RandomCircuitOptions {
    int n_qubits = 4;
    int n_ops = 10;
    int max_sites = 8;
    bool allow_general = false;
    /// Chance of a second site on the same op and qubit, which conflicts with the first.
    double stacked = 0.0;
};

/// Random circuit over the builtin gate set with 1-qubit noise on a random subset of ops.
/// Sites are capped at `max_sites`.
inline NoisyCircuit random_noisy_circuit(std::mt19937_64 &rng, const RandomCircuitOptions &o) {
    std::uniform_int_distribution<int> qubit(0, o.n_qubits - 1);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    static const char *one_q[] = {"h", "x", "y", "z", "s", "t", "rx", "ry", "rz"};
    static const char *two_q[] = {"cx", "cz", "swap"};
    NoisyCircuit c;
    c.n_qubits = o.n_qubits;
    for (int i = 0; i < o.n_ops; ++i) {
        if (o.n_qubits >= 2 && unit(rng) < 0.35) {
            int a = qubit(rng), b = qubit(rng);
            while (b == a) {
                b = qubit(rng);
            }
            c.ops.push_back(make_gate(two_q[rng() % 3], {a, b}));
        } else {
            std::string name = one_q[rng() % 9];
            std::vector<double> params;
            if (builtin_gate_param_count(name)) {
                params.push_back(angle(rng));
            }
            c.ops.push_back(make_gate(name, {qubit(rng)}, params));
        }
    }
    c.moments = compute_moments(c.n_qubits, c.ops);

    std::vector<std::pair<std::string, KrausChannel>> zoo;
    std::uniform_real_distribution<double> p(0.01, 0.3);
    const char *mixtures[] = {"depolarizing", "bit_flip", "phase_flip"};
    NoiseModel model;
    int sites = 0;
    for (std::size_t pos = 0; pos < c.ops.size() && sites < o.max_sites; ++pos) {
        if (unit(rng) < 0.4) {
            continue;
        }
        const auto &op = c.ops[pos];
        for (int q : op.targets) {
            if (sites >= o.max_sites) {
                break;
            }
            std::string name = mixtures[rng() % 3];
            if (o.allow_general && unit(rng) < 0.35) {
                name = "amplitude_damping";
            }
            const double param = p(rng);
            auto ch = builtin_channel(name, param);
            const std::string label = name + "(" + format_double(param) + ")";
            c.channels.push_back(analyze_channel(label, ch));
            c.sites.push_back({static_cast<std::size_t>(sites), pos, c.moments[pos], {q}, c.channels.size() - 1});
            ++sites;
            if (sites < o.max_sites && unit(rng) < o.stacked) {
                c.sites.push_back({static_cast<std::size_t>(sites), pos, c.moments[pos], {q}, c.channels.size() - 1});
                ++sites;
            }
        }
    }
    c.noise_fingerprint = "random";
    return c;
}

/// Two-sample chi-square homogeneity test on equal-size samples. Bins whose pooled count is
/// below `min_pooled` are merged into one. Returns the p-value.
inline double chi_square_homogeneity(const std::map<std::uint64_t, std::uint64_t> &a,
                                     const std::map<std::uint64_t, std::uint64_t> &b, double min_pooled = 10.0) {
    std::map<std::uint64_t, std::pair<double, double>> bins;
    double na = 0, nb = 0;
    for (auto [k, v] : a) {
        bins[k].first += static_cast<double>(v);
        na += static_cast<double>(v);
    }
    for (auto [k, v] : b) {
        bins[k].second += static_cast<double>(v);
        nb += static_cast<double>(v);
    }
    std::vector<std::pair<double, double>> used;
    std::pair<double, double> pool{0, 0};
    for (auto &[k, v] : bins) {
        if (v.first + v.second < min_pooled) {
            pool.first += v.first;
            pool.second += v.second;
        } else {
            used.push_back(v);
        }
    }
    if (pool.first + pool.second > 0) {
        used.push_back(pool);
    }
    if (used.size() < 2) {
        return 1.0;
    }
    double stat = 0.0;
    const double n = na + nb;
    for (auto [x, y] : used) {
        const double row = x + y;
        const double ea = row * na / n;
        const double eb = row * nb / n;
        stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    boost::math::chi_squared dist(static_cast<double>(used.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Goodness of fit of observed counts against expected probabilities.
inline double chi_square_gof(const std::vector<std::uint64_t> &observed, const std::vector<double> &probs) {
    double n = 0;
    for (auto o : observed) {
        n += static_cast<double>(o);
    }
    double stat = 0.0;
    std::size_t bins = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = n * probs[i];
        if (e <= 0) {
            continue;
        }
        stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
        ++bins;
    }
    if (bins < 2) {
        return 1.0;
    }
    boost::math::chi_squared dist(static_cast<double>(bins - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Full 2^n x 2^n matrix of `m` on `targets` by explicit basis enumeration.
inline Matrix embed_full(const Matrix &m, const std::vector<int> &targets, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    const std::size_t k = targets.size();
    Matrix full = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t lc = 0;
        for (int q : targets) {
            lc = (lc << 1) | ((col >> q) & 1U);
        }
        for (std::size_t lr = 0; lr < (std::size_t{1} << k); ++lr) {
            std::size_t row = col;
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t bit = std::size_t{1} << targets[j];
                row = ((lr >> (k - 1 - j)) & 1U) ? (row | bit) : (row & ~bit);
            }
            full(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
                m(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc));
        }
    }
    return full;
}

inline std::vector<double> counts_to_distribution(const std::map<std::uint64_t, std::uint64_t> &counts, int n_qubits) {
    std::vector<double> p(std::size_t{1} << n_qubits, 0.0);
    double total = 0;
    for (auto [k, v] : counts) {
        total += static_cast<double>(v);
    }
    for (auto [k, v] : counts) {
        p[k] = static_cast<double>(v) / total;
    }
    return p;
}

/// Every selection set in the cartesian product over sites, restricted to pairwise-compatible
/// non-default choices with probability at least `cutoff`, in canonical form.
inline std::vector<std::pair<Selections, double>> brute_force_sets(const NoisyCircuit &c, double cutoff) {
    std::vector<std::pair<Selections, double>> out;
    const std::size_t n = c.sites.size();
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        Selections sel;
        double p = 1.0;
        bool ok = true;
        for (std::size_t s = 0; s < n; ++s) {
            p *= c.channel_of(c.sites[s]).site_probs[idx[s]];
            if (idx[s] == 0) {
                continue;
            }
            for (const auto &prev : sel) {
                ok = ok && !sites_conflict(c.sites[prev.site], c.sites[s]);
            }
            sel.push_back({s, idx[s]});
        }
        if (ok && p >= cutoff) {
            out.emplace_back(std::move(sel), p);
        }
        std::size_t s = 0;
        for (; s < n; ++s) {
            if (++idx[s] < c.channel_of(c.sites[s]).site_probs.size()) {
                break;
            }
            idx[s] = 0;
        }
        if (s == n) {
            break;
        }
    }
    return out;
}

}  // namespace ptsbe::test

#endif
