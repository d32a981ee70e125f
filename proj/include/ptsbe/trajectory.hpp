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

#ifndef PTSBE_TRAJECTORY_HPP
#define PTSBE_TRAJECTORY_HPP

#include <chrono>
#include <cstdint>
#include <vector>

#include "ptsbe/circuit.hpp"
#include "ptsbe/dataset.hpp"
#include "ptsbe/parallel.hpp"
#include "ptsbe/pts.hpp"
#include "ptsbe/rng.hpp"
#include "ptsbe/statevector.hpp"

namespace ptsbe {

struct RealizedTrajectory {
    /// One entry per noise site, in site order, including default (index 0) outcomes.
    Selections selections;
    /// Π of realized probabilities at general-channel sites; 1 for all-mixture circuits.
    double weight = 1.0;
    /// Probability of the whole Kraus path, mixture weights included.
    double path_prob = 1.0;
    StateVector final_state;
};

struct TrajectoryOptions {
    /// Treat unitary mixtures as general channels (state-dependent probabilities).
    bool force_general = false;
};

/// Conventional trajectory simulation: walk the ops, and after each one draw a Kraus outcome
/// at each of its noise sites using one uniform per site. Unitary mixtures pick from their
/// cached weights and apply U_k; general channels evaluate p_i = ‖K_i|ψ⟩‖² on the current
/// state and apply K_k/√p_k.
inline RealizedTrajectory run_trajectory(const NoisyCircuit &circuit, RandomStream &rng,
                                         const TrajectoryOptions &options = {}) {
    RealizedTrajectory out{{}, 1.0, 1.0, StateVector::init_zero(circuit.n_qubits)};
    auto &state = out.final_state;
    out.selections.reserve(circuit.sites.size());
    std::vector<double> probs;
    std::size_t next_site = 0;
    for (std::size_t pos = 0; pos < circuit.ops.size(); ++pos) {
        state.apply_gate(circuit.ops[pos]);
        for (; next_site < circuit.sites.size() && circuit.sites[next_site].position == pos; ++next_site) {
            const auto &site = circuit.sites[next_site];
            const auto &ch = circuit.channel_of(site);
            const double r = rng.uniform();
            std::size_t k = 0;
            if (ch.is_mixture() && !options.force_general) {
                k = select_index(r, ch.mixture->probs);
                if (!ch.mixture->identity[k]) {
                    state.apply_matrix(ch.mixture->unitaries[k], site.targets);
                }
                out.path_prob *= ch.mixture->probs[k];
            } else {
                probs.resize(ch.size());
                for (std::size_t i = 0; i < ch.size(); ++i) {
                    probs[i] = kraus_outcome_probability(state, ch.channel.op(i), site.targets);
                }
                k = select_index(r, probs);
                const double p = apply_kraus_normalized(state, ch.channel.op(k), site.targets);
                if (!ch.is_mixture()) {
                    out.weight *= p;
                }
                out.path_prob *= p;
            }
            out.selections.push_back({site.site_id, k});
        }
    }
    return out;
}

/// The redundant-preparation baseline: n_traj independent trajectories, each prepared from
/// scratch, with shots_per_traj shots each. Trajectory t draws from mix_seed(seed, t).
inline Dataset sample_conventional(const NoisyCircuit &circuit, std::uint64_t n_traj, std::uint64_t shots_per_traj,
                                   std::uint64_t seed, std::size_t parallelism = 1) {
    if (n_traj < 1) {
        throw ValidationError("n_traj must be at least 1");
    }
    if (shots_per_traj < 1) {
        throw ValidationError("shots_per_traj must be at least 1");
    }
    const auto start = std::chrono::steady_clock::now();
    Dataset ds;
    ds.n_qubits = circuit.n_qubits;
    ds.circuit_hash = circuit_hash(circuit);
    ds.noise_hash = noise_hash(circuit);
    ds.master_seed = seed;
    ds.strategy = "conventional";
    ds.config = {{"n_traj", n_traj}, {"shots_per_traj", shots_per_traj}};
    ds.parallelism = parallelism;
    ds.trajectories.resize(n_traj);
    const bool mixtures = circuit.all_mixtures();
    parallel_for(n_traj, parallelism, [&](std::size_t t) {
        auto &res = ds.trajectories[t];
        res.id = t;
        res.stream_seed = mix_seed(seed, t);
        res.spec.shots = shots_per_traj;
        RandomStream rng(res.stream_seed);
        try {
            const auto t0 = std::chrono::steady_clock::now();
            auto traj = run_trajectory(circuit, rng);
            const auto t1 = std::chrono::steady_clock::now();
            res.spec.selections = canonicalize(traj.selections);
            if (mixtures) {
                res.spec.joint_prob = joint_probability(res.spec.selections, circuit);
            }
            res.realized_weight = traj.weight;
            res.path_prob = traj.path_prob;
            if (shots_per_traj == 1) {
                res.counts[OutcomeSampler(traj.final_state).draw(rng)] = 1;
            } else {
                res.counts = sample_shots(traj.final_state, shots_per_traj, rng).counts();
            }
            res.prep_seconds = std::chrono::duration<double>(t1 - t0).count();
            res.sample_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
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

}  // namespace ptsbe

#endif
