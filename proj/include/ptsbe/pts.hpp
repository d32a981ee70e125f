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

#ifndef PTSBE_PTS_HPP
#define PTSBE_PTS_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ptsbe/circuit.hpp"
#include "ptsbe/errors.hpp"
#include "ptsbe/rng.hpp"

namespace ptsbe {

/// Kraus outcome `kraus` chosen at noise site `site`.
struct Selection {
    std::size_t site = 0;
    std::size_t kraus = 0;

    auto operator<=>(const Selection &) const = default;
};

/// Canonical form: sorted by site, one entry per site, only non-default (kraus != 0) outcomes.
using Selections = std::vector<Selection>;

/// One pre-selected Kraus-operator set with its shot budget and provenance tags.
struct TrajectorySpec {
    Selections selections;
    /// Present iff every channel in the circuit is a unitary mixture.
    std::optional<double> joint_prob;
    std::uint64_t shots = 0;
    std::map<std::string, std::string> tags;
};

inline bool is_canonical(const Selections &s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].kraus == 0 || (i > 0 && s[i - 1].site >= s[i].site)) {
            return false;
        }
    }
    return true;
}

/// Non-default entries of a full per-site outcome list, in canonical form.
inline Selections canonicalize(const Selections &full) {
    Selections out;
    for (const auto &s : full) {
        if (s.kraus != 0) {
            out.push_back(s);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Throws ValidationError unless `spec` is canonical and refers to real sites and outcomes.
inline void check_spec(const TrajectorySpec &spec, const NoisyCircuit &circuit) {
    if (!is_canonical(spec.selections)) {
        throw ValidationError("trajectory selections are not in canonical form");
    }
    for (const auto &s : spec.selections) {
        if (s.site >= circuit.sites.size()) {
            throw ValidationError("selection refers to unknown site " + std::to_string(s.site));
        }
        if (s.kraus >= circuit.channel_of(circuit.sites[s.site]).size()) {
            throw ValidationError("site " + std::to_string(s.site) + " has no Kraus index " + std::to_string(s.kraus));
        }
    }
}

inline bool sites_conflict(const NoiseSite &a, const NoiseSite &b) {
    if (a.moment != b.moment) {
        return false;
    }
    for (int q : a.targets) {
        if (std::find(b.targets.begin(), b.targets.end(), q) != b.targets.end()) {
            return true;
        }
    }
    return false;
}

/// False iff `sample` already holds `candidate.site`, or holds a different site that shares a
/// qubit with it in the same moment.
inline bool compatible(const Selection &candidate, const Selections &sample, const NoisyCircuit &circuit) {
    if (candidate.site >= circuit.sites.size()) {
        throw ValidationError("unknown site id " + std::to_string(candidate.site));
    }
    const auto &site = circuit.sites[candidate.site];
    for (const auto &s : sample) {
        if (s.site == candidate.site) {
            return false;
        }
        if (sites_conflict(site, circuit.sites.at(s.site))) {
            return false;
        }
    }
    return true;
}

struct SelectionsHash {
    std::size_t operator()(const Selections &s) const noexcept {
        std::uint64_t h = 0x243F6A8885A308D3ULL;
        for (const auto &e : s) {
            h = avalanche64(h ^ (static_cast<std::uint64_t>(e.site) * 0x100000001B3ULL + e.kraus));
        }
        return static_cast<std::size_t>(h);
    }
};

/// Hash set of accepted canonical Kraus sets.
class KrausSetIndex {
   public:
    bool contains(const Selections &s) const {
        return seen_.count(s) != 0;
    }
    /// Returns false if `s` was already present.
    bool insert(const Selections &s) {
        return seen_.insert(s).second;
    }
    std::size_t size() const noexcept {
        return seen_.size();
    }

   private:
    std::unordered_set<Selections, SelectionsHash> seen_;
};

inline bool unique_kraus(const Selections &sample, const KrausSetIndex &accepted) {
    return !accepted.contains(sample);
}

/// Product over ALL sites of the chosen outcome's probability (index 0 for unlisted sites).
/// Empty when some site's channel is not a unitary mixture: the probability is then
/// state-dependent and only known after execution.
inline std::optional<double> joint_probability(const Selections &selections, const NoisyCircuit &circuit) {
    double p = 1.0;
    std::size_t next = 0;
    for (const auto &site : circuit.sites) {
        const auto &ch = circuit.channel_of(site);
        if (!ch.is_mixture()) {
            return std::nullopt;
        }
        std::size_t k = 0;
        if (next < selections.size() && selections[next].site == site.site_id) {
            k = selections[next].kraus;
            ++next;
        }
        p *= ch.mixture->probs.at(k);
    }
    return p;
}

/// Restricts which sites may carry a non-default outcome. Empty lists match everything.
struct SiteFilter {
    std::vector<std::string> gates;
    std::vector<int> qubits;
    std::vector<int> moments;

    bool allows(const NoisyCircuit &circuit, const NoiseSite &site) const {
        if (!gates.empty()) {
            const auto &name = circuit.ops.at(site.position).name;
            if (std::find(gates.begin(), gates.end(), name) == gates.end()) {
                return false;
            }
        }
        if (!qubits.empty()) {
            bool hit = false;
            for (int q : site.targets) {
                hit = hit || std::find(qubits.begin(), qubits.end(), q) != qubits.end();
            }
            if (!hit) {
                return false;
            }
        }
        if (!moments.empty() && std::find(moments.begin(), moments.end(), site.moment) == moments.end()) {
            return false;
        }
        return true;
    }
};

enum class Strategy { probabilistic, proportional, band, cutoff };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::probabilistic:
            return "probabilistic";
        case Strategy::proportional:
            return "proportional";
        case Strategy::band:
            return "band";
        case Strategy::cutoff:
            return "cutoff";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view s) {
    if (s == "probabilistic") {
        return Strategy::probabilistic;
    }
    if (s == "proportional") {
        return Strategy::proportional;
    }
    if (s == "band") {
        return Strategy::band;
    }
    if (s == "cutoff") {
        return Strategy::cutoff;
    }
    throw ValidationError("unknown strategy '" + std::string(s) + "'");
}

inline constexpr std::uint64_t kDefaultEnumerationBound = 1'000'000;

struct PtsConfig {
    Strategy strategy = Strategy::probabilistic;
    std::uint64_t nsamples = 1000;
    std::uint64_t nshots = 1000;
    std::uint64_t total_shots = 100000;  ///< proportional only
    double p_min = 0.0;
    double p_max = 1.0;
    double cutoff = 0.0;
    std::uint64_t enumeration_bound = kDefaultEnumerationBound;
    /// Specs that proportional reallocation starts from.
    Strategy proportional_base = Strategy::probabilistic;
    std::uint64_t seed = 0;
    SiteFilter filter;

    void validate() const {
        if (!(0.0 <= p_min && p_min <= p_max && p_max <= 1.0)) {
            throw ValidationError("probability band must satisfy 0 <= p_min <= p_max <= 1");
        }
        if (!(cutoff >= 0.0 && cutoff <= 1.0)) {
            throw ValidationError("cutoff must lie in [0, 1]");
        }
        if (proportional_base == Strategy::proportional) {
            throw ValidationError("proportional base strategy cannot itself be proportional");
        }
    }
};

/// Provenance record of a Kraus set: one entry per injected error.
inline std::map<std::string, std::string> provenance_tags(const Selections &selections, const NoisyCircuit &circuit,
                                                          const std::string &strategy) {
    std::string errors;
    for (const auto &s : selections) {
        const auto &site = circuit.sites.at(s.site);
        if (!errors.empty()) {
            errors += "; ";
        }
        errors += "site=" + std::to_string(s.site) + " gate=" + circuit.ops.at(site.position).name + " qubits=";
        for (std::size_t i = 0; i < site.targets.size(); ++i) {
            errors += (i ? "," : "") + std::to_string(site.targets[i]);
        }
        errors += " moment=" + std::to_string(site.moment) + " channel=" + circuit.channel_of(site).label +
                  " kraus=" + std::to_string(s.kraus);
    }
    return {{"strategy", strategy}, {"n_errors", std::to_string(selections.size())}, {"errors", errors}};
}

/// Smallest k with cumulative probability > r. Rounding overshoot clamps to the last
/// outcome with positive probability.
inline std::size_t select_index(double r, const std::vector<double> &probs) {
    if (probs.empty()) {
        throw ValidationError("empty probability list");
    }
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (probs[k] > 0.0) {
            last_positive = k;
        }
        if (acc > r) {
            return k;
        }
    }
    return last_positive;
}

/// One pass over the sites: a categorical draw per site (one uniform each, in site order),
/// keeping non-default outcomes that the filter allows and that are compatible with what was
/// already chosen. `raw`, when given, receives the per-site draws before any filtering.
inline Selections draw_kraus_sample(const NoisyCircuit &circuit, RandomStream &rng, const SiteFilter &filter = {},
                                    std::vector<std::size_t> *raw = nullptr) {
    Selections sample;
    if (raw) {
        raw->clear();
    }
    for (const auto &site : circuit.sites) {
        const std::size_t k = select_index(rng.uniform(), circuit.channel_of(site).site_probs);
        if (raw) {
            raw->push_back(k);
        }
        if (k == 0 || !filter.allows(circuit, site)) {
            continue;
        }
        Selection cand{site.site_id, k};
        if (compatible(cand, sample, circuit)) {
            sample.push_back(cand);
        }
    }
    return sample;
}

namespace detail {

inline std::vector<TrajectorySpec> sample_specs(const NoisyCircuit &circuit, std::uint64_t nsamples,
                                                std::uint64_t nshots, RandomStream &rng, const SiteFilter &filter,
                                                const std::string &strategy,
                                                const std::function<bool(const std::optional<double> &)> &accept) {
    if (nsamples < 1) {
        throw ValidationError("nsamples must be at least 1");
    }
    std::vector<TrajectorySpec> specs;
    KrausSetIndex accepted;
    for (std::uint64_t i = 0; i < nsamples; ++i) {
        Selections sample = draw_kraus_sample(circuit, rng, filter);
        if (!unique_kraus(sample, accepted)) {
            continue;
        }
        auto p = joint_probability(sample, circuit);
        if (!accept(p)) {
            continue;
        }
        accepted.insert(sample);
        TrajectorySpec spec;
        spec.tags = provenance_tags(sample, circuit, strategy);
        spec.selections = std::move(sample);
        spec.joint_prob = p;
        spec.shots = nshots;
        specs.push_back(std::move(spec));
    }
    return specs;
}

inline void require_mixtures(const NoisyCircuit &circuit, const char *what) {
    if (!circuit.all_mixtures()) {
        throw ValidationError(std::string(what) + " needs every noise channel to be a unitary mixture");
    }
}

}  // namespace detail

/// Repeats nsamples times: draw a Kraus set, keep it if no identical set was accepted before.
/// Each accepted set gets `nshots` shots. Output is in acceptance order.
inline std::vector<TrajectorySpec> pts_probabilistic(const NoisyCircuit &circuit, std::uint64_t nsamples,
                                                     std::uint64_t nshots, RandomStream &rng,
                                                     const SiteFilter &filter = {}) {
    return detail::sample_specs(circuit, nsamples, nshots, rng, filter, "probabilistic",
                                [](const std::optional<double> &) { return true; });
}

/// As pts_probabilistic, accepting only sets with p_min <= p_alpha <= p_max.
inline std::vector<TrajectorySpec> pts_band(const NoisyCircuit &circuit, double p_min, double p_max,
                                            std::uint64_t nsamples, std::uint64_t nshots, RandomStream &rng,
                                            const SiteFilter &filter = {}) {
    if (p_min > p_max) {
        throw ValidationError("p_min exceeds p_max");
    }
    detail::require_mixtures(circuit, "band sampling");
    return detail::sample_specs(circuit, nsamples, nshots, rng, filter, "band",
                                [&](const std::optional<double> &p) { return *p >= p_min && *p <= p_max; });
}

/// Reallocates `total_shots` across specs in proportion to p_alpha / Σ p, by largest
/// remainder. Ties go to the lower spec index; Σ shots == total_shots exactly.
inline std::vector<TrajectorySpec> pts_proportional(std::vector<TrajectorySpec> specs, std::uint64_t total_shots) {
    double sum = 0.0;
    for (const auto &s : specs) {
        if (!s.joint_prob) {
            throw ValidationError("proportional allocation needs a joint probability on every spec");
        }
        sum += *s.joint_prob;
    }
    if (specs.empty()) {
        return specs;
    }
    if (!(sum > 0.0)) {
        throw ValidationError("joint probabilities sum to zero");
    }
    std::vector<double> remainder(specs.size());
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const double quota = static_cast<double>(total_shots) * (*specs[i].joint_prob / sum);
        const double base = std::floor(quota);
        specs[i].shots = static_cast<std::uint64_t>(base);
        remainder[i] = quota - base;
        assigned += specs[i].shots;
    }
    std::vector<std::size_t> order(specs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    // Floating-point floors can leave the total a few shots over or under.
    std::size_t cursor = 0;
    while (assigned < total_shots) {
        ++specs[order[cursor % order.size()]].shots;
        ++assigned;
        ++cursor;
    }
    for (std::size_t i = order.size(); assigned > total_shots && i-- > 0;) {
        if (specs[order[i]].shots > 0) {
            --specs[order[i]].shots;
            --assigned;
        }
    }
    for (auto &s : specs) {
        s.tags["allocation"] = "proportional";
    }
    return specs;
}

/// Every compatible Kraus set with p_alpha >= cutoff, by depth-first search over sites with
/// bound pruning. Sorted by descending p_alpha, then by selections. Deterministic.
inline std::vector<TrajectorySpec> pts_cutoff(const NoisyCircuit &circuit, double cutoff, std::uint64_t nshots,
                                              std::uint64_t bound = kDefaultEnumerationBound,
                                              const SiteFilter &filter = {}) {
    detail::require_mixtures(circuit, "cutoff enumeration");
    if (!(cutoff >= 0.0 && cutoff <= 1.0)) {
        throw ValidationError("cutoff must lie in [0, 1]");
    }
    const std::size_t n_sites = circuit.sites.size();
    std::vector<const std::vector<double> *> probs(n_sites);
    std::vector<bool> allowed(n_sites);
    for (std::size_t s = 0; s < n_sites; ++s) {
        probs[s] = &circuit.channel_of(circuit.sites[s]).site_probs;
        allowed[s] = filter.allows(circuit, circuit.sites[s]);
    }
    if (cutoff == 0.0) {
        double total = 1.0;
        for (std::size_t s = 0; s < n_sites; ++s) {
            total *= allowed[s] ? static_cast<double>(probs[s]->size()) : 1.0;
        }
        if (total > static_cast<double>(bound)) {
            throw ValidationError("full enumeration of " + format_double(total) + " Kraus sets exceeds the bound of " +
                                  std::to_string(bound));
        }
    }
    // suffix_max[s] = Π_{j >= s} max_k p_{j,k}
    std::vector<double> suffix_max(n_sites + 1, 1.0);
    for (std::size_t s = n_sites; s-- > 0;) {
        double m = allowed[s] ? *std::max_element(probs[s]->begin(), probs[s]->end()) : (*probs[s])[0];
        suffix_max[s] = suffix_max[s + 1] * m;
    }

    struct Found {
        Selections selections;
        double p;
    };
    std::vector<Found> found;
    Selections current;
    std::function<void(std::size_t, double)> dfs = [&](std::size_t s, double p) {
        if (s == n_sites) {
            if (p >= cutoff) {
                if (found.size() >= bound) {
                    throw ValidationError("enumeration exceeds the bound of " + std::to_string(bound) + " Kraus sets");
                }
                found.push_back({current, p});
            }
            return;
        }
        const auto &ps = *probs[s];
        const std::size_t outcomes = allowed[s] ? ps.size() : 1;
        for (std::size_t k = 0; k < outcomes; ++k) {
            const double next = p * ps[k];
            if (next * suffix_max[s + 1] < cutoff) {
                continue;
            }
            if (k == 0) {
                dfs(s + 1, next);
                continue;
            }
            Selection cand{s, k};
            if (!compatible(cand, current, circuit)) {
                continue;
            }
            current.push_back(cand);
            dfs(s + 1, next);
            current.pop_back();
        }
    };
    dfs(0, 1.0);

    std::sort(found.begin(), found.end(), [](const Found &a, const Found &b) {
        if (a.p != b.p) {
            return a.p > b.p;
        }
        return a.selections < b.selections;
    });
    std::vector<TrajectorySpec> specs;
    specs.reserve(found.size());
    for (auto &f : found) {
        TrajectorySpec spec;
        spec.tags = provenance_tags(f.selections, circuit, "cutoff");
        spec.selections = std::move(f.selections);
        spec.joint_prob = f.p;
        spec.shots = nshots;
        specs.push_back(std::move(spec));
    }
    return specs;
}

/// Runs the configured strategy. Sampling strategies draw from the stream
/// mix_seed(config.seed, kSamplingStream).
inline std::vector<TrajectorySpec> generate_specs(const NoisyCircuit &circuit, const PtsConfig &config) {
    config.validate();
    RandomStream rng(mix_seed(config.seed, kSamplingStream));
    auto base = [&](Strategy s) {
        switch (s) {
            case Strategy::band:
                return pts_band(circuit, config.p_min, config.p_max, config.nsamples, config.nshots, rng,
                                config.filter);
            case Strategy::cutoff:
                return pts_cutoff(circuit, config.cutoff, config.nshots, config.enumeration_bound, config.filter);
            default:
                return pts_probabilistic(circuit, config.nsamples, config.nshots, rng, config.filter);
        }
    };
    if (config.strategy == Strategy::proportional) {
        return pts_proportional(base(config.proportional_base), config.total_shots);
    }
    return base(config.strategy);
}

}  // namespace ptsbe

#endif
