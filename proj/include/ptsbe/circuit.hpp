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

#ifndef PTSBE_CIRCUIT_HPP
#define PTSBE_CIRCUIT_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptsbe/errors.hpp"
#include "ptsbe/linalg.hpp"
#include "ptsbe/noise.hpp"

namespace ptsbe {

inline constexpr double kGateUnitarityTolerance = 1e-10;

struct GateOp {
    std::string name;            ///< builtin gate name, or "umat" for an explicit matrix
    std::vector<double> params;  ///< rotation angles in radians
    std::vector<int> targets;    ///< first-listed target is the most significant local bit
    Matrix matrix;
};

/// A point where a channel acts. Fires immediately after ops[position].
struct NoiseSite {
    std::size_t site_id = 0;
    std::size_t position = 0;
    int moment = 0;
    std::vector<int> targets;
    std::size_t channel_id = 0;
};

/// A channel together with the state-independent data the samplers need.
struct ChannelEntry {
    std::string label;
    KrausChannel channel;
    std::optional<UnitaryMixture> mixture;
    /// Outcome probabilities used by pre-trajectory sampling: the mixture weights for
    /// unitary mixtures, tr(K_i†K_i)/d (the maximally mixed state) otherwise.
    std::vector<double> site_probs;

    bool is_mixture() const noexcept {
        return mixture.has_value();
    }
    std::size_t size() const noexcept {
        return channel.size();
    }
};

inline ChannelEntry analyze_channel(std::string label, KrausChannel channel) {
    auto mixture = detect_unitary_mixture(channel);
    std::vector<double> probs;
    if (mixture) {
        probs = mixture->probs;
    } else {
        const double d = static_cast<double>(channel.dim());
        for (const auto &k : channel.ops()) {
            probs.push_back((k.adjoint() * k).trace().real() / d);
        }
    }
    return {std::move(label), std::move(channel), std::move(mixture), std::move(probs)};
}

struct NoisyCircuit {
    int n_qubits = 0;
    std::vector<GateOp> ops;
    std::vector<int> moments;  ///< moments[i] is the time layer of ops[i]
    std::vector<NoiseSite> sites;
    std::vector<ChannelEntry> channels;
    /// Canonical text of every noise model applied, in order. Hashed into dataset manifests.
    std::string noise_fingerprint;

    const ChannelEntry &channel_of(const NoiseSite &site) const {
        return channels.at(site.channel_id);
    }
    bool all_mixtures() const {
        for (const auto &s : sites) {
            if (!channel_of(s).is_mixture()) {
                return false;
            }
        }
        return true;
    }
};

// ---------------------------------------------------------------------------------------------
// Number formatting and parsing helpers.

/// Shortest text that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_complex(Complex z) {
    std::string s = format_double(z.real());
    const double im = z.imag();
    if (std::signbit(im)) {
        s += format_double(im);
    } else {
        s += "+" + format_double(im);
    }
    return s + "i";
}

namespace detail {

inline std::optional<double> parse_real(std::string_view tok) {
    if (tok.empty()) {
        return std::nullopt;
    }
    std::string s(tok);
    char *end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
        return std::nullopt;
    }
    return v;
}

/// Accepts `a`, `bi`, `i`, `a+bi`, `a-bi`, `a+i`, `a-i`.
inline std::optional<Complex> parse_complex(std::string_view tok) {
    if (tok.empty()) {
        return std::nullopt;
    }
    if (tok.back() != 'i') {
        if (auto r = parse_real(tok)) {
            return Complex(*r, 0.0);
        }
        return std::nullopt;
    }
    std::string_view body = tok.substr(0, tok.size() - 1);
    // Split at the last sign that is not part of an exponent and not the leading character.
    std::size_t split = std::string_view::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    auto imag_of = [](std::string_view s) -> std::optional<double> {
        if (s.empty() || s == "+") {
            return 1.0;
        }
        if (s == "-") {
            return -1.0;
        }
        return parse_real(s);
    };
    if (split == std::string_view::npos) {
        auto im = imag_of(body);
        if (!im) {
            return std::nullopt;
        }
        return Complex(0.0, *im);
    }
    auto re = parse_real(body.substr(0, split));
    auto im = imag_of(body.substr(split));
    if (!re || !im) {
        return std::nullopt;
    }
    return Complex(*re, *im);
}

/// Real number, or a multiple of pi: `pi`, `-pi/2`, `3*pi/4`, `0.5*pi`.
inline std::optional<double> parse_angle(std::string_view tok) {
    if (auto v = parse_real(tok)) {
        return v;
    }
    auto pos = tok.find("pi");
    if (pos == std::string_view::npos) {
        return std::nullopt;
    }
    double scale = 1.0;
    std::string_view pre = tok.substr(0, pos);
    if (pre == "-") {
        scale = -1.0;
    } else if (!pre.empty() && pre != "+") {
        if (pre.back() != '*') {
            return std::nullopt;
        }
        auto v = parse_real(pre.substr(0, pre.size() - 1));
        if (!v) {
            return std::nullopt;
        }
        scale = *v;
    }
    std::string_view post = tok.substr(pos + 2);
    double div = 1.0;
    if (!post.empty()) {
        if (post.front() != '/') {
            return std::nullopt;
        }
        auto v = parse_real(post.substr(1));
        if (!v || *v == 0.0) {
            return std::nullopt;
        }
        div = *v;
    }
    return scale * std::numbers::pi / div;
}

inline std::optional<int> parse_int(std::string_view tok) {
    int v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) {
            ++j;
        }
        if (j > i) {
            out.push_back(line.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

inline std::string_view strip_comment(std::string_view line) {
    auto pos = line.find('#');
    return pos == std::string_view::npos ? line : line.substr(0, pos);
}

template <typename F>
void for_each_line(std::string_view text, F &&f) {
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        ++lineno;
        f(lineno, strip_comment(text.substr(start, end - start)));
        start = end + 1;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Gates.

inline int builtin_gate_arity(std::string_view name) {
    if (name == "cx" || name == "cz" || name == "swap") {
        return 2;
    }
    static constexpr std::string_view one[] = {"i", "x", "y", "z", "h", "s", "t", "rx", "ry", "rz"};
    for (auto n : one) {
        if (n == name) {
            return 1;
        }
    }
    return 0;
}

inline std::size_t builtin_gate_param_count(std::string_view name) {
    return (name == "rx" || name == "ry" || name == "rz") ? 1 : 0;
}

/// Textbook matrix of a builtin gate. For two-qubit gates the first target is the most
/// significant local bit, so cx = |0><0| ⊗ I + |1><1| ⊗ X with the control listed first.
inline Matrix builtin_gate_matrix(std::string_view name, const std::vector<double> &params) {
    const int arity = builtin_gate_arity(name);
    if (arity == 0) {
        throw ValidationError("unknown gate '" + std::string(name) + "'");
    }
    if (params.size() != builtin_gate_param_count(name)) {
        throw ValidationError("gate '" + std::string(name) + "' takes " +
                              std::to_string(builtin_gate_param_count(name)) + " parameter(s), got " +
                              std::to_string(params.size()));
    }
    const Complex i1(0.0, 1.0);
    Matrix m;
    if (name == "i") {
        m = pauli::I();
    } else if (name == "x") {
        m = pauli::X();
    } else if (name == "y") {
        m = pauli::Y();
    } else if (name == "z") {
        m = pauli::Z();
    } else if (name == "h") {
        m = Matrix(2, 2);
        const double r = 1.0 / std::sqrt(2.0);
        m << r, r, r, -r;
    } else if (name == "s") {
        m = Matrix::Identity(2, 2);
        m(1, 1) = i1;
    } else if (name == "t") {
        m = Matrix::Identity(2, 2);
        m(1, 1) = std::polar(1.0, std::numbers::pi / 4);
    } else if (name == "rx" || name == "ry" || name == "rz") {
        const double c = std::cos(params[0] / 2);
        const double s = std::sin(params[0] / 2);
        m = Matrix(2, 2);
        if (name == "rx") {
            m << c, -i1 * s, -i1 * s, c;
        } else if (name == "ry") {
            m << c, -s, s, c;
        } else {
            m << std::polar(1.0, -params[0] / 2), 0, 0, std::polar(1.0, params[0] / 2);
        }
    } else {
        m = Matrix::Zero(4, 4);
        if (name == "cx") {
            m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
        } else if (name == "cz") {
            m(0, 0) = m(1, 1) = m(2, 2) = 1;
            m(3, 3) = -1;
        } else {
            m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1;
        }
    }
    return m;
}

inline GateOp make_gate(std::string name, std::vector<int> targets, std::vector<double> params = {}) {
    const int arity = builtin_gate_arity(name);
    if (arity == 0) {
        throw ValidationError("unknown gate '" + name + "'");
    }
    if (static_cast<int>(targets.size()) != arity) {
        throw ValidationError("gate '" + name + "' acts on " + std::to_string(arity) + " qubit(s), got " +
                              std::to_string(targets.size()));
    }
    Matrix m = builtin_gate_matrix(name, params);
    return {std::move(name), std::move(params), std::move(targets), std::move(m)};
}

inline GateOp make_umat(std::vector<int> targets, Matrix m) {
    if (qubit_arity(m) != static_cast<int>(targets.size())) {
        throw ValidationError("umat matrix size does not match " + std::to_string(targets.size()) + " target(s)");
    }
    if (!is_unitary(m, kGateUnitarityTolerance)) {
        throw ValidationError("umat matrix is not unitary (deviation " + format_double(unitarity_deviation(m)) + ")");
    }
    return {"umat", {}, std::move(targets), std::move(m)};
}

/// Greedy-earliest layering: an op lands one layer after the latest layer touching any of
/// its qubits.
inline std::vector<int> compute_moments(int n_qubits, const std::vector<GateOp> &ops) {
    std::vector<int> next_free(static_cast<std::size_t>(n_qubits), 0);
    std::vector<int> moments;
    moments.reserve(ops.size());
    for (const auto &op : ops) {
        int m = 0;
        for (int q : op.targets) {
            m = std::max(m, next_free.at(static_cast<std::size_t>(q)));
        }
        for (int q : op.targets) {
            next_free[static_cast<std::size_t>(q)] = m + 1;
        }
        moments.push_back(m);
    }
    return moments;
}

inline void check_targets(const std::vector<int> &targets, int n_qubits) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] < 0 || targets[i] >= n_qubits) {
            throw ValidationError("qubit " + std::to_string(targets[i]) + " out of range for " +
                                  std::to_string(n_qubits) + " qubit(s)");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (targets[j] == targets[i]) {
                throw ValidationError("duplicate target qubit " + std::to_string(targets[i]));
            }
        }
    }
}

/// Checks every structural invariant of a circuit; throws ValidationError on the first violation.
inline void validate_circuit(const NoisyCircuit &c) {
    if (c.n_qubits < 1) {
        throw ValidationError("circuit has no qubits");
    }
    if (c.moments.size() != c.ops.size()) {
        throw ValidationError("moment table does not match op count");
    }
    std::vector<std::vector<int>> used;
    for (std::size_t i = 0; i < c.ops.size(); ++i) {
        const auto &op = c.ops[i];
        check_targets(op.targets, c.n_qubits);
        if (qubit_arity(op.matrix) != static_cast<int>(op.targets.size())) {
            throw ValidationError("op " + std::to_string(i) + " matrix size does not match its targets");
        }
        if (!is_unitary(op.matrix, kGateUnitarityTolerance)) {
            throw ValidationError("op " + std::to_string(i) + " is not unitary");
        }
        auto m = static_cast<std::size_t>(c.moments[i]);
        if (used.size() <= m) {
            used.resize(m + 1);
        }
        for (int q : op.targets) {
            if (std::find(used[m].begin(), used[m].end(), q) != used[m].end()) {
                throw ValidationError("two ops in moment " + std::to_string(m) + " share qubit " + std::to_string(q));
            }
            used[m].push_back(q);
        }
    }
    for (std::size_t s = 0; s < c.sites.size(); ++s) {
        const auto &site = c.sites[s];
        if (site.site_id != s) {
            throw ValidationError("site ids are not dense in circuit order");
        }
        if (s > 0 && site.position < c.sites[s - 1].position) {
            throw ValidationError("sites are not ordered by position");
        }
        if (site.position >= c.ops.size()) {
            throw ValidationError("site " + std::to_string(s) + " refers to a missing op");
        }
        check_targets(site.targets, c.n_qubits);
        if (site.channel_id >= c.channels.size()) {
            throw ValidationError("site " + std::to_string(s) + " refers to a missing channel");
        }
        if (c.channels[site.channel_id].channel.arity() != static_cast<int>(site.targets.size())) {
            throw ValidationError("site " + std::to_string(s) + " channel arity does not match its targets");
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Circuit text format.

/// Parses the line-based circuit format:
///
///     qubits <n>
///     gate <name> <q0> [q1 ...] [@ <angle> ...]
///     umat <q0> [q1 ...] : <row-major complex entries>
///
/// `#` starts a comment. Noise sites are attached separately by attach_noise.
inline NoisyCircuit parse_circuit(std::string_view text) {
    NoisyCircuit c;
    bool have_qubits = false;
    detail::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        auto toks = detail::split_ws(line);
        if (toks.empty()) {
            return;
        }
        auto fail = [&](const std::string &msg) { throw ParseError(lineno, msg); };
        auto parse_qubits = [&](std::size_t begin, std::size_t end) {
            std::vector<int> qs;
            for (std::size_t i = begin; i < end; ++i) {
                auto q = detail::parse_int(toks[i]);
                if (!q) {
                    fail("bad qubit index '" + std::string(toks[i]) + "'");
                }
                qs.push_back(*q);
            }
            if (qs.empty()) {
                fail("no target qubits");
            }
            try {
                check_targets(qs, c.n_qubits);
            } catch (const ValidationError &e) {
                fail(e.what());
            }
            return qs;
        };
        if (toks[0] == "qubits") {
            if (have_qubits) {
                fail("duplicate 'qubits' statement");
            }
            if (toks.size() != 2) {
                fail("expected 'qubits <n>'");
            }
            auto n = detail::parse_int(toks[1]);
            if (!n || *n < 1) {
                fail("qubit count must be a positive integer");
            }
            c.n_qubits = *n;
            have_qubits = true;
            return;
        }
        if (!have_qubits) {
            fail("'qubits <n>' must come first");
        }
        if (toks[0] == "gate") {
            if (toks.size() < 3) {
                fail("expected 'gate <name> <qubits...>'");
            }
            std::string name(toks[1]);
            if (builtin_gate_arity(name) == 0) {
                fail("unknown gate '" + name + "'");
            }
            std::size_t at = toks.size();
            for (std::size_t i = 2; i < toks.size(); ++i) {
                if (toks[i] == "@") {
                    at = i;
                    break;
                }
            }
            auto qs = parse_qubits(2, at);
            std::vector<double> params;
            for (std::size_t i = at + 1; i < toks.size(); ++i) {
                auto a = detail::parse_angle(toks[i]);
                if (!a) {
                    fail("bad angle '" + std::string(toks[i]) + "'");
                }
                params.push_back(*a);
            }
            try {
                c.ops.push_back(make_gate(std::move(name), std::move(qs), std::move(params)));
            } catch (const ValidationError &e) {
                fail(e.what());
            }
            return;
        }
        if (toks[0] == "umat") {
            std::size_t colon = toks.size();
            for (std::size_t i = 1; i < toks.size(); ++i) {
                if (toks[i] == ":") {
                    colon = i;
                    break;
                }
            }
            if (colon == toks.size()) {
                fail("expected 'umat <qubits...> : <entries>'");
            }
            auto qs = parse_qubits(1, colon);
            const auto dim = Eigen::Index{1} << qs.size();
            if (toks.size() - colon - 1 != static_cast<std::size_t>(dim * dim)) {
                fail("umat on " + std::to_string(qs.size()) + " qubit(s) needs " + std::to_string(dim * dim) +
                     " entries");
            }
            Matrix m(dim, dim);
            for (Eigen::Index k = 0; k < dim * dim; ++k) {
                auto z = detail::parse_complex(toks[colon + 1 + static_cast<std::size_t>(k)]);
                if (!z) {
                    fail("bad complex entry '" + std::string(toks[colon + 1 + static_cast<std::size_t>(k)]) + "'");
                }
                m(k / dim, k % dim) = *z;
            }
            try {
                c.ops.push_back(make_umat(std::move(qs), std::move(m)));
            } catch (const ValidationError &e) {
                fail(e.what());
            }
            return;
        }
        fail("unknown statement '" + std::string(toks[0]) + "'");
    });
    if (!have_qubits) {
        throw ParseError(0, "missing 'qubits <n>' statement");
    }
    c.moments = compute_moments(c.n_qubits, c.ops);
    return c;
}

/// Canonical text of the coherent part of a circuit. parse_circuit(serialize_circuit(c))
/// reproduces c's ops exactly.
inline std::string serialize_circuit(const NoisyCircuit &c) {
    std::string out = "qubits " + std::to_string(c.n_qubits) + "\n";
    for (const auto &op : c.ops) {
        out += op.name == "umat" ? "umat" : "gate " + op.name;
        for (int q : op.targets) {
            out += " " + std::to_string(q);
        }
        if (op.name == "umat") {
            out += " :";
            for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
                for (Eigen::Index col = 0; col < op.matrix.cols(); ++col) {
                    out += " " + format_complex(op.matrix(r, col));
                }
            }
        } else if (!op.params.empty()) {
            out += " @";
            for (double a : op.params) {
                out += " " + format_double(a);
            }
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Noise model.

struct NoiseRule {
    std::vector<std::string> gates;  ///< empty = any gate
    std::vector<int> qubits;         ///< empty = any qubit; otherwise every op target must be listed
    std::size_t channel = 0;         ///< index into NoiseModel::channels

    bool matches(const GateOp &op) const {
        if (!gates.empty() && std::find(gates.begin(), gates.end(), op.name) == gates.end()) {
            return false;
        }
        if (!qubits.empty()) {
            for (int q : op.targets) {
                if (std::find(qubits.begin(), qubits.end(), q) == qubits.end()) {
                    return false;
                }
            }
        }
        return true;
    }
};

struct NamedChannel {
    std::string label;
    bool custom = false;
    KrausChannel channel;
};

/// Ordered rules; first match wins. Channels are listed in first-definition order.
struct NoiseModel {
    std::vector<NamedChannel> channels;
    std::vector<NoiseRule> rules;

    std::size_t add_channel(std::string label, KrausChannel ch, bool custom) {
        for (std::size_t i = 0; i < channels.size(); ++i) {
            if (channels[i].label == label) {
                return i;
            }
        }
        channels.push_back({std::move(label), custom, std::move(ch)});
        return channels.size() - 1;
    }

    /// Appends a rule using a builtin channel expression, e.g. `depolarizing(0.01)`.
    NoiseModel &add_rule(std::vector<std::string> gates, std::vector<int> qubits, std::string_view builtin,
                         double param) {
        auto ch = builtin_channel(builtin, param);
        auto id = add_channel(std::string(builtin) + "(" + format_double(param) + ")", std::move(ch), false);
        rules.push_back({std::move(gates), std::move(qubits), id});
        return *this;
    }
};

/// Parses the noise-model format:
///
///     channel <name> arity=<k>
///     kraus <row-major complex entries>
///     ...
///     end
///     rule gate=<name,name|*> qubits=<q,q|*> channel=<builtin(p)|name>
///
/// Rules are kept in file order. CPTP is not enforced here (see check_noise_model) so that
/// `validate` can report bad channels.
inline NoiseModel parse_noise_model(std::string_view text) {
    NoiseModel model;
    struct Pending {
        std::string name;
        int arity = 0;
        std::vector<Matrix> ops;
        std::size_t line = 0;
    };
    std::optional<Pending> pending;
    detail::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        auto toks = detail::split_ws(line);
        if (toks.empty()) {
            return;
        }
        auto fail = [&](const std::string &msg) { throw ParseError(lineno, msg); };
        auto kv = [&](std::string_view tok) -> std::pair<std::string_view, std::string_view> {
            auto eq = tok.find('=');
            if (eq == std::string_view::npos) {
                fail("expected key=value, got '" + std::string(tok) + "'");
            }
            return {tok.substr(0, eq), tok.substr(eq + 1)};
        };
        if (pending) {
            if (toks[0] == "kraus") {
                const auto dim = Eigen::Index{1} << pending->arity;
                if (toks.size() - 1 != static_cast<std::size_t>(dim * dim)) {
                    fail("kraus operator of arity " + std::to_string(pending->arity) + " needs " +
                         std::to_string(dim * dim) + " entries");
                }
                Matrix m(dim, dim);
                for (Eigen::Index k = 0; k < dim * dim; ++k) {
                    auto z = detail::parse_complex(toks[1 + static_cast<std::size_t>(k)]);
                    if (!z) {
                        fail("bad complex entry '" + std::string(toks[1 + static_cast<std::size_t>(k)]) + "'");
                    }
                    m(k / dim, k % dim) = *z;
                }
                pending->ops.push_back(std::move(m));
                return;
            }
            if (toks[0] == "end" && toks.size() == 1) {
                try {
                    model.add_channel(pending->name, KrausChannel(std::move(pending->ops)), true);
                } catch (const ValidationError &e) {
                    throw ParseError(pending->line, "channel '" + pending->name + "': " + e.what());
                }
                pending.reset();
                return;
            }
            fail("expected 'kraus ...' or 'end' inside channel block");
        }
        if (toks[0] == "channel") {
            if (toks.size() != 3) {
                fail("expected 'channel <name> arity=<k>'");
            }
            std::string name(toks[1]);
            if (name.find('(') != std::string::npos || is_builtin_channel(name)) {
                fail("channel name '" + name + "' collides with a builtin");
            }
            for (const auto &ch : model.channels) {
                if (ch.label == name) {
                    fail("channel '" + name + "' defined twice");
                }
            }
            auto [k, v] = kv(toks[2]);
            auto arity = detail::parse_int(v);
            if (k != "arity" || !arity || *arity < 1 || *arity > 4) {
                fail("arity must be an integer in [1, 4]");
            }
            pending = Pending{std::move(name), *arity, {}, lineno};
            return;
        }
        if (toks[0] == "rule") {
            NoiseRule rule;
            std::optional<std::size_t> channel;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                auto [k, v] = kv(toks[i]);
                auto list = [&](std::string_view s) {
                    std::vector<std::string_view> items;
                    std::size_t start = 0;
                    while (start <= s.size()) {
                        auto comma = s.find(',', start);
                        if (comma == std::string_view::npos) {
                            comma = s.size();
                        }
                        if (comma == start) {
                            fail("empty list item in '" + std::string(s) + "'");
                        }
                        items.push_back(s.substr(start, comma - start));
                        start = comma + 1;
                    }
                    return items;
                };
                if (k == "gate") {
                    if (v != "*") {
                        for (auto g : list(v)) {
                            if (g != "umat" && builtin_gate_arity(g) == 0) {
                                fail("unknown gate '" + std::string(g) + "' in rule");
                            }
                            rule.gates.emplace_back(g);
                        }
                    }
                } else if (k == "qubits") {
                    if (v != "*") {
                        for (auto q : list(v)) {
                            auto qi = detail::parse_int(q);
                            if (!qi || *qi < 0) {
                                fail("bad qubit '" + std::string(q) + "' in rule");
                            }
                            rule.qubits.push_back(*qi);
                        }
                    }
                } else if (k == "channel") {
                    auto open = v.find('(');
                    if (open != std::string_view::npos) {
                        if (v.back() != ')') {
                            fail("bad channel expression '" + std::string(v) + "'");
                        }
                        auto name = v.substr(0, open);
                        auto p = detail::parse_real(v.substr(open + 1, v.size() - open - 2));
                        if (!p || !is_builtin_channel(name)) {
                            fail("bad builtin channel '" + std::string(v) + "'");
                        }
                        try {
                            channel = model.add_channel(std::string(name) + "(" + format_double(*p) + ")",
                                                        builtin_channel(name, *p), false);
                        } catch (const ValidationError &e) {
                            fail(e.what());
                        }
                    } else {
                        for (std::size_t c = 0; c < model.channels.size(); ++c) {
                            if (model.channels[c].custom && model.channels[c].label == v) {
                                channel = c;
                            }
                        }
                        if (!channel) {
                            fail("undefined channel '" + std::string(v) + "'");
                        }
                    }
                } else {
                    fail("unknown rule key '" + std::string(k) + "'");
                }
            }
            if (!channel) {
                fail("rule has no channel");
            }
            rule.channel = *channel;
            model.rules.push_back(std::move(rule));
            return;
        }
        fail("unknown statement '" + std::string(toks[0]) + "'");
    });
    if (pending) {
        throw ParseError(pending->line, "channel '" + pending->name + "' is missing 'end'");
    }
    return model;
}

/// Canonical text of a noise model; parse_noise_model accepts it back.
inline std::string serialize_noise_model(const NoiseModel &model) {
    std::string out;
    for (const auto &ch : model.channels) {
        if (!ch.custom) {
            continue;
        }
        out += "channel " + ch.label + " arity=" + std::to_string(ch.channel.arity()) + "\n";
        for (const auto &k : ch.channel.ops()) {
            out += "kraus";
            for (Eigen::Index r = 0; r < k.rows(); ++r) {
                for (Eigen::Index col = 0; col < k.cols(); ++col) {
                    out += " " + format_complex(k(r, col));
                }
            }
            out += "\n";
        }
        out += "end\n";
    }
    for (const auto &rule : model.rules) {
        out += "rule gate=";
        if (rule.gates.empty()) {
            out += "*";
        }
        for (std::size_t i = 0; i < rule.gates.size(); ++i) {
            out += (i ? "," : "") + rule.gates[i];
        }
        out += " qubits=";
        if (rule.qubits.empty()) {
            out += "*";
        }
        for (std::size_t i = 0; i < rule.qubits.size(); ++i) {
            out += (i ? "," : "") + std::to_string(rule.qubits[i]);
        }
        out += " channel=" + model.channels.at(rule.channel).label + "\n";
    }
    return out;
}

/// Throws ValidationError if any channel referenced by a rule fails the CPTP check.
inline void check_noise_model(const NoiseModel &model, double tol = kChannelTolerance) {
    for (const auto &rule : model.rules) {
        const auto &ch = model.channels.at(rule.channel);
        auto report = validate_cptp(ch.channel, tol);
        if (!report.valid) {
            throw ValidationError("channel '" + ch.label + "' is not trace preserving (deviation " +
                                  format_double(report.deviation) + ")");
        }
    }
}

/// Attaches noise sites after every op matched by a rule. One-qubit channels get one site per
/// op target; wider channels must match the op's target count and get a single site.
/// Existing sites are kept; ids are renumbered in circuit order.
inline NoisyCircuit attach_noise(NoisyCircuit circuit, const NoiseModel &model) {
    check_noise_model(model);
    std::vector<std::size_t> channel_ids(model.channels.size(), SIZE_MAX);
    auto channel_id = [&](std::size_t model_channel) {
        auto &slot = channel_ids[model_channel];
        if (slot == SIZE_MAX) {
            const auto &nc = model.channels[model_channel];
            for (std::size_t i = 0; i < circuit.channels.size(); ++i) {
                if (circuit.channels[i].label == nc.label) {
                    slot = i;
                }
            }
            if (slot == SIZE_MAX) {
                circuit.channels.push_back(analyze_channel(nc.label, nc.channel));
                slot = circuit.channels.size() - 1;
            }
        }
        return slot;
    };

    std::vector<NoiseSite> added;
    for (std::size_t pos = 0; pos < circuit.ops.size(); ++pos) {
        const auto &op = circuit.ops[pos];
        for (const auto &rule : model.rules) {
            if (!rule.matches(op)) {
                continue;
            }
            const auto &nc = model.channels[rule.channel];
            const int arity = nc.channel.arity();
            const auto cid = channel_id(rule.channel);
            if (arity == 1) {
                for (int q : op.targets) {
                    added.push_back({0, pos, circuit.moments[pos], {q}, cid});
                }
            } else if (arity == static_cast<int>(op.targets.size())) {
                added.push_back({0, pos, circuit.moments[pos], op.targets, cid});
            } else {
                throw ValidationError("channel '" + nc.label + "' of arity " + std::to_string(arity) +
                                      " cannot attach to op " + std::to_string(pos) + " ('" + op.name + "') with " +
                                      std::to_string(op.targets.size()) + " target(s)");
            }
            break;
        }
    }
    std::vector<NoiseSite> merged;
    merged.reserve(circuit.sites.size() + added.size());
    std::merge(circuit.sites.begin(), circuit.sites.end(), added.begin(), added.end(), std::back_inserter(merged),
               [](const NoiseSite &a, const NoiseSite &b) { return a.position < b.position; });
    for (std::size_t i = 0; i < merged.size(); ++i) {
        merged[i].site_id = i;
    }
    circuit.sites = std::move(merged);
    circuit.noise_fingerprint += serialize_noise_model(model);
    return circuit;
}

}  // namespace ptsbe

#endif
