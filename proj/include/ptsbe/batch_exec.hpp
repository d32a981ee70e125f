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

#ifndef PTSBE_BATCH_EXEC_HPP
#define PTSBE_BATCH_EXEC_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ptsbe/circuit.hpp"
#include "ptsbe/dataset.hpp"
#include "ptsbe/parallel.hpp"
#include "ptsbe/pts.hpp"
#include "ptsbe/rng.hpp"
#include "ptsbe/statevector.hpp"

namespace ptsbe {

struct PreparedTrajectory {
    StateVector state;
    double realized_weight = 1.0;
    double path_prob = 1.0;
};

/// Evolves |0…0⟩ through the circuit with every noise site fixed to the spec's outcome (index 0
/// where unlisted). Mixture outcomes apply U_k; general outcomes apply K_k and renormalize.
/// Throws AnnihilationError when a fixed general outcome is impossible for the evolved state.
inline PreparedTrajectory prepare_trajectory(const NoisyCircuit &circuit, const TrajectorySpec &spec) {
    check_spec(spec, circuit);
    PreparedTrajectory out{StateVector::init_zero(circuit.n_qubits)};
    std::size_t next_site = 0;
    std::size_t next_sel = 0;
    for (std::size_t pos = 0; pos < circuit.ops.size(); ++pos) {
        out.state.apply_gate(circuit.ops[pos]);
        for (; next_site < circuit.sites.size() && circuit.sites[next_site].position == pos; ++next_site) {
            const auto &site = circuit.sites[next_site];
            std::size_t k = 0;
            if (next_sel < spec.selections.size() && spec.selections[next_sel].site == site.site_id) {
                k = spec.selections[next_sel++].kraus;
            }
            const auto &ch = circuit.channel_of(site);
            if (ch.is_mixture()) {
                if (!ch.mixture->identity[k]) {
                    out.state.apply_matrix(ch.mixture->unitaries[k], site.targets);
                }
                out.path_prob *= ch.mixture->probs[k];
            } else {
                const double p = apply_kraus_normalized(out.state, ch.channel.op(k), site.targets);
                out.realized_weight *= p;
                out.path_prob *= p;
            }
        }
    }
    return out;
}

struct ExecutionResult {
    ShotBatch shots;
    double realized_weight = 1.0;
    double path_prob = 1.0;
    double prep_seconds = 0.0;
    double sample_seconds = 0.0;
};

/// Prepares the spec's state once, then draws all spec.shots shots from it.
inline ExecutionResult execute_trajectory(const NoisyCircuit &circuit, const TrajectorySpec &spec, RandomStream &rng) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto prepared = prepare_trajectory(circuit, spec);
    const auto t1 = clock::now();
    ExecutionResult res;
    res.shots.n_qubits = circuit.n_qubits;
    if (spec.shots > 0) {
        res.shots = OutcomeSampler(prepared.state).sample(spec.shots, rng);
    }
    const auto t2 = clock::now();
    res.realized_weight = prepared.realized_weight;
    res.path_prob = prepared.path_prob;
    res.prep_seconds = std::chrono::duration<double>(t1 - t0).count();
    res.sample_seconds = std::chrono::duration<double>(t2 - t1).count();
    return res;
}

/// Runs every spec on `parallelism` workers. Trajectory t samples from the stream
/// mix_seed(master_seed, t), so the records are byte-identical for any worker count.
/// Annihilated trajectories stay in the manifest with zero records; any other failure marks
/// the dataset partial and keeps the completed trajectories.
inline Dataset execute_all(const NoisyCircuit &circuit, const std::vector<TrajectorySpec> &specs,
                           std::size_t parallelism, std::uint64_t master_seed, const std::string &strategy = "custom",
                           nlohmann::json config = nlohmann::json::object()) {
    if (parallelism < 1) {
        throw ValidationError("parallelism must be at least 1");
    }
    for (const auto &s : specs) {
        check_spec(s, circuit);
    }
    const auto start = std::chrono::steady_clock::now();
    Dataset ds;
    ds.n_qubits = circuit.n_qubits;
    ds.circuit_hash = circuit_hash(circuit);
    ds.noise_hash = noise_hash(circuit);
    ds.master_seed = master_seed;
    ds.strategy = strategy;
    ds.config = std::move(config);
    ds.parallelism = parallelism;
    ds.trajectories.resize(specs.size());
    parallel_for(specs.size(), parallelism, [&](std::size_t t) {
        auto &res = ds.trajectories[t];
        res.id = t;
        res.spec = specs[t];
        res.stream_seed = mix_seed(master_seed, t);
        RandomStream rng(res.stream_seed);
        try {
            auto exec = execute_trajectory(circuit, specs[t], rng);
            res.counts = exec.shots.counts();
            res.realized_weight = exec.realized_weight;
            res.path_prob = exec.path_prob;
            res.prep_seconds = exec.prep_seconds;
            res.sample_seconds = exec.sample_seconds;
        } catch (const AnnihilationError &e) {
            res.status = TrajectoryStatus::annihilated;
            res.error = e.what();
        } catch (const std::exception &e) {
            res.status = TrajectoryStatus::error;
            res.error = e.what();
        }
    });
    for (const auto &t : ds.trajectories) {
        ds.partial = ds.partial || t.status == TrajectoryStatus::error;
    }
    ds.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return ds;
}

/// Distinct bitstrings / total shots.
inline double unique_fraction(const ShotBatch &batch) {
    if (batch.outcomes.empty()) {
        throw ValidationError("unique fraction of an empty batch");
    }
    std::vector<std::uint64_t> sorted = batch.outcomes;
    std::sort(sorted.begin(), sorted.end());
    const auto distinct = static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    return static_cast<double>(distinct) / static_cast<double>(sorted.size());
}

/// Expected unique fraction of m uniform draws over `outcomes` equally likely values.
inline double expected_unique_fraction_uniform(double outcomes, double m) {
    return outcomes * (1.0 - std::pow(1.0 - 1.0 / outcomes, m)) / m;
}

/// Σ_α w_α · |ψ_α|² over the given specs, with w_α the path probability of each trajectory.
/// With the cutoff-0 enumeration of an all-mixture circuit this is the exact output distribution.
inline std::vector<double> weighted_outcome_distribution(const NoisyCircuit &circuit,
                                                         const std::vector<TrajectorySpec> &specs) {
    std::vector<double> p(std::size_t{1} << circuit.n_qubits, 0.0);
    for (const auto &spec : specs) {
        auto prepared = prepare_trajectory(circuit, spec);
        auto amps = prepared.state.amplitudes();
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] += prepared.path_prob * std::norm(amps[i]);
        }
    }
    return p;
}

struct ThroughputRow {
    std::uint64_t m = 0;
    std::string mode;  ///< "batched" or "naive"
    double shots_per_second = 0.0;
    double unique_fraction = 0.0;
};

struct ThroughputReport {
    std::vector<ThroughputRow> rows;
    /// batched / naive rate for each batch size, in input order.
    std::vector<double> ratios;
};

struct ThroughputOptions {
    std::size_t repeats = 5;
    /// Naive mode repeats the full preparation once per shot; it is timed over at most this
    /// many shots per measurement and reported as a rate.
    std::uint64_t naive_cap = 32;
    std::uint64_t seed = 0;
};

/// Shots per second of (a) batched mode: one preparation then m shots, and (b) naive mode:
/// one full preparation per shot. Rates are medians over `repeats` runs.
inline ThroughputReport throughput_report(const NoisyCircuit &circuit, const TrajectorySpec &spec,
                                          const std::vector<std::uint64_t> &batch_sizes,
                                          const ThroughputOptions &options = {}) {
    using clock = std::chrono::steady_clock;
    if (options.repeats < 1 || options.naive_cap < 1) {
        throw ValidationError("repeats and naive_cap must be at least 1");
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    ThroughputReport report;
    std::uint64_t stream = 0;
    for (auto m : batch_sizes) {
        if (m < 1) {
            throw ValidationError("batch sizes must be at least 1");
        }
        std::vector<double> batched_rates, naive_rates;
        ShotBatch last_batched, last_naive;
        for (std::size_t r = 0; r < options.repeats; ++r) {
            RandomStream rng(mix_seed(options.seed, stream++));
            const auto t0 = clock::now();
            auto prepared = prepare_trajectory(circuit, spec);
            last_batched = OutcomeSampler(prepared.state).sample(m, rng);
            const double dt = std::chrono::duration<double>(clock::now() - t0).count();
            batched_rates.push_back(static_cast<double>(m) / dt);

            const std::uint64_t reps = std::min(m, options.naive_cap);
            last_naive = ShotBatch{circuit.n_qubits, {}};
            const auto t1 = clock::now();
            for (std::uint64_t i = 0; i < reps; ++i) {
                auto fresh = prepare_trajectory(circuit, spec);
                last_naive.outcomes.push_back(OutcomeSampler(fresh.state).draw(rng));
            }
            const double dn = std::chrono::duration<double>(clock::now() - t1).count();
            naive_rates.push_back(static_cast<double>(reps) / dn);
        }
        const double b = median(batched_rates);
        const double n = median(naive_rates);
        report.rows.push_back({m, "batched", b, unique_fraction(last_batched)});
        report.rows.push_back({m, "naive", n, unique_fraction(last_naive)});
        report.ratios.push_back(b / n);
    }
    return report;
}

inline std::string throughput_csv(const ThroughputReport &report) {
    std::string out = "m,mode,shots_per_second,unique_fraction\n";
    for (const auto &r : report.rows) {
        out += std::to_string(r.m) + "," + r.mode + "," + format_double(r.shots_per_second) + "," +
               format_double(r.unique_fraction) + "\n";
    }
    return out;
}

}  // namespace ptsbe

#endif
