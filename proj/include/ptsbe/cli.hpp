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

#ifndef PTSBE_CLI_HPP
#define PTSBE_CLI_HPP

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "ptsbe/batch_exec.hpp"
#include "ptsbe/circuit.hpp"
#include "ptsbe/dataset.hpp"
#include "ptsbe/density.hpp"
#include "ptsbe/pts.hpp"
#include "ptsbe/trajectory.hpp"

namespace ptsbe::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kParseFailure = 2,
    kValidationFailure = 3,
    kExecutionFailure = 4,
    kIoFailure = 5,
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::parse:
            return kParseFailure;
        case ErrorKind::validation:
            return kValidationFailure;
        case ErrorKind::execution:
            return kExecutionFailure;
        case ErrorKind::io:
            return kIoFailure;
    }
    return kUsage;
}

inline NoisyCircuit load_circuit(const std::string &circuit_path, const std::string &noise_path) {
    auto circuit = parse_circuit(read_text_file(circuit_path));
    auto model = parse_noise_model(read_text_file(noise_path));
    return attach_noise(std::move(circuit), model);
}

inline Selections parse_selection_list(const std::string &text) {
    Selections out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string::npos) {
            comma = text.size();
        }
        auto item = std::string_view(text).substr(start, comma - start);
        auto colon = item.find(':');
        auto site = detail::parse_int(item.substr(0, colon));
        auto kraus = colon == std::string_view::npos ? std::nullopt : detail::parse_int(item.substr(colon + 1));
        if (!site || !kraus || *site < 0 || *kraus < 0) {
            throw ValidationError("bad selection '" + std::string(item) + "', expected <site>:<kraus>");
        }
        out.push_back({static_cast<std::size_t>(*site), static_cast<std::size_t>(*kraus)});
        start = comma + 1;
    }
    return canonicalize(out);
}

struct ValidateArgs {
    std::string circuit, noise;
};

inline int cmd_validate(const ValidateArgs &a, std::ostream &out) {
    auto circuit = parse_circuit(read_text_file(a.circuit));
    auto model = parse_noise_model(read_text_file(a.noise));
    out << "circuit: " << circuit.n_qubits << " qubits, " << circuit.ops.size() << " ops\n";
    bool ok = true;
    for (const auto &ch : model.channels) {
        auto report = validate_cptp(ch.channel);
        auto mix = detect_unitary_mixture(ch.channel);
        out << "channel " << ch.label << ": arity=" << ch.channel.arity() << " kraus=" << ch.channel.size()
            << " cptp_deviation=" << format_double(report.deviation) << " " << (report.valid ? "valid" : "INVALID");
        if (report.valid) {
            out << " " << (mix ? "unitary-mixture" : "general");
            if (mix) {
                out << " probs=";
                for (std::size_t i = 0; i < mix->probs.size(); ++i) {
                    out << (i ? "," : "") << format_double(mix->probs[i]);
                }
            }
        }
        out << "\n";
        ok = ok && report.valid;
    }
    if (!ok) {
        out << "result: invalid\n";
        return kValidationFailure;
    }
    auto noisy = attach_noise(std::move(circuit), model);
    out << "sites: " << noisy.sites.size() << "\nresult: valid\n";
    return kOk;
}

struct RunArgs {
    std::string circuit, noise, out_dir;
    std::string strategy = "probabilistic";
    std::string base = "probabilistic";
    std::uint64_t seed = 0;
    std::uint64_t nsamples = 1000, nshots = 1000, total_shots = 100000, bound = kDefaultEnumerationBound;
    std::uint64_t ntraj = 1000, shots_per_traj = 1;
    double p_min = 0.0, p_max = 1.0, cutoff = 0.0, threshold = 0.02;
    std::size_t parallelism = 1;
    std::vector<std::string> filter_gates;
    std::vector<int> filter_qubits, filter_moments;
    bool oracle = false;
};

inline Weighting weighting_for(const std::string &strategy) {
    return strategy == "proportional" || strategy == "conventional" ? Weighting::pooled : Weighting::path_weighted;
}

inline double oracle_tv(const NoisyCircuit &circuit, const Dataset &ds) {
    auto exact = outcome_distribution(evolve_exact(circuit));
    auto empirical = empirical_distribution(ds, weighting_for(ds.strategy));
    return tv_distance(empirical, exact);
}

inline int cmd_run(const RunArgs &a, std::ostream &out) {
    auto circuit = load_circuit(a.circuit, a.noise);
    const auto start = std::chrono::steady_clock::now();
    Dataset ds;
    nlohmann::json config = {{"strategy", a.strategy}, {"seed", a.seed}};
    if (a.strategy == "conventional") {
        config["n_traj"] = a.ntraj;
        config["shots_per_traj"] = a.shots_per_traj;
        ds = sample_conventional(circuit, a.ntraj, a.shots_per_traj, a.seed, a.parallelism);
        ds.config = config;
    } else {
        PtsConfig pc;
        pc.strategy = parse_strategy(a.strategy);
        pc.proportional_base = parse_strategy(a.base);
        pc.nsamples = a.nsamples;
        pc.nshots = a.nshots;
        pc.total_shots = a.total_shots;
        pc.p_min = a.p_min;
        pc.p_max = a.p_max;
        pc.cutoff = a.cutoff;
        pc.enumeration_bound = a.bound;
        pc.seed = a.seed;
        pc.filter = {a.filter_gates, a.filter_qubits, a.filter_moments};
        config.update({{"nsamples", a.nsamples},
                       {"nshots", a.nshots},
                       {"total_shots", a.total_shots},
                       {"p_min", a.p_min},
                       {"p_max", a.p_max},
                       {"cutoff", a.cutoff},
                       {"enumeration_bound", a.bound},
                       {"base", a.base},
                       {"filter_gates", a.filter_gates},
                       {"filter_qubits", a.filter_qubits},
                       {"filter_moments", a.filter_moments}});
        auto specs = generate_specs(circuit, pc);
        ds = execute_all(circuit, specs, a.parallelism, a.seed, a.strategy, config);
    }
    ds.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_dataset(ds, a.out_dir);
    std::size_t failed = 0;
    for (const auto &t : ds.trajectories) {
        failed += t.status != TrajectoryStatus::ok;
    }
    out << "trajectories: " << ds.trajectories.size() << "\n"
        << "failed: " << failed << "\n"
        << "total_shots: " << ds.total_shots() << "\n"
        << "unique_fraction: " << format_double(ds.unique_fraction()) << "\n"
        << "wall_seconds: " << format_double(ds.wall_seconds) << "\n"
        << "dataset: " << a.out_dir << "\n";
    if (ds.partial) {
        out << "warning: dataset is partial\n";
        return kExecutionFailure;
    }
    if (a.oracle) {
        const double tv = oracle_tv(circuit, ds);
        out << "oracle_tv: " << format_double(tv) << " (threshold " << format_double(a.threshold) << ")\n";
        if (tv > a.threshold) {
            return kValidationFailure;
        }
    }
    return kOk;
}

struct OracleArgs {
    std::string circuit, noise, dataset;
    double threshold = 0.02;
};

inline int cmd_oracle(const OracleArgs &a, std::ostream &out) {
    auto circuit = load_circuit(a.circuit, a.noise);
    if (circuit.n_qubits > kOracleMaxQubits) {
        throw ValidationError("circuit has " + std::to_string(circuit.n_qubits) + " qubits; the oracle is capped at " +
                              std::to_string(kOracleMaxQubits));
    }
    auto ds = read_dataset(a.dataset);
    if (ds.circuit_hash != circuit_hash(circuit)) {
        throw ValidationError("circuit hash mismatch: dataset was generated from a different circuit");
    }
    if (ds.noise_hash != noise_hash(circuit)) {
        throw ValidationError("noise-model hash mismatch: dataset was generated with a different noise model");
    }
    const double tv = oracle_tv(circuit, ds);
    out << "strategy: " << ds.strategy << "\n"
        << "weighting: " << (weighting_for(ds.strategy) == Weighting::pooled ? "pooled" : "path_weighted") << "\n"
        << "total_shots: " << ds.total_shots() << "\n"
        << "tv_distance: " << format_double(tv) << "\n"
        << "threshold: " << format_double(a.threshold) << "\n"
        << "result: " << (tv <= a.threshold ? "pass" : "fail") << "\n";
    return tv <= a.threshold ? kOk : kValidationFailure;
}

struct BenchArgs {
    std::string circuit, noise, out_dir, selections;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> batch_sizes{1, 10, 100, 1000, 10000};
    std::size_t repeats = 5;
    std::uint64_t naive_cap = 32;
};

inline int cmd_bench(const BenchArgs &a, std::ostream &out) {
    auto circuit = load_circuit(a.circuit, a.noise);
    TrajectorySpec spec;
    spec.selections = parse_selection_list(a.selections);
    check_spec(spec, circuit);
    auto report = throughput_report(circuit, spec, a.batch_sizes, {a.repeats, a.naive_cap, a.seed});
    std::error_code ec;
    std::filesystem::create_directories(a.out_dir, ec);
    if (ec) {
        throw IoError("cannot create directory '" + a.out_dir + "': " + ec.message());
    }
    write_text_file(std::filesystem::path(a.out_dir) / "throughput.csv", throughput_csv(report));
    std::string uniq = "m,unique_fraction\n";
    for (const auto &row : report.rows) {
        if (row.mode == "batched") {
            uniq += std::to_string(row.m) + "," + format_double(row.unique_fraction) + "\n";
        }
    }
    write_text_file(std::filesystem::path(a.out_dir) / "uniqueness.csv", uniq);
    for (std::size_t i = 0; i < a.batch_sizes.size(); ++i) {
        out << "m=" << a.batch_sizes[i] << " batched/naive=" << format_double(report.ratios[i]) << "\n";
    }
    out << "wrote " << (std::filesystem::path(a.out_dir) / "throughput.csv").string() << " and uniqueness.csv\n";
    return kOk;
}

/// Entry point shared by the `ptsbe` binary and the tests. args[0] is the program name.
inline int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Noisy circuit trajectory sampler with batched shot execution"};
    app.require_subcommand(1);

    ValidateArgs va;
    auto *validate = app.add_subcommand("validate", "check channels for CPTP and unitary-mixture structure");
    validate->add_option("--circuit", va.circuit, "circuit file")->required();
    validate->add_option("--noise", va.noise, "noise-model file")->required();

    RunArgs ra;
    auto *run = app.add_subcommand("run", "sample trajectories and write a dataset");
    run->add_option("--circuit", ra.circuit, "circuit file")->required();
    run->add_option("--noise", ra.noise, "noise-model file")->required();
    run->add_option("--out", ra.out_dir, "output directory")->required();
    run->add_option("--seed", ra.seed, "master seed")->required();
    run->add_option("--strategy", ra.strategy, "probabilistic|proportional|band|cutoff|conventional")
        ->check(CLI::IsMember({"probabilistic", "proportional", "band", "cutoff", "conventional"}));
    run->add_option("--base", ra.base, "spec source for proportional allocation")
        ->check(CLI::IsMember({"probabilistic", "band", "cutoff"}));
    run->add_option("--nsamples", ra.nsamples);
    run->add_option("--nshots", ra.nshots);
    run->add_option("--total-shots", ra.total_shots);
    run->add_option("--pmin", ra.p_min);
    run->add_option("--pmax", ra.p_max);
    run->add_option("--cutoff", ra.cutoff);
    run->add_option("--bound", ra.bound, "enumeration bound for cutoff");
    run->add_option("--ntraj", ra.ntraj, "trajectories for the conventional baseline");
    run->add_option("--shots-per-traj", ra.shots_per_traj);
    run->add_option("--parallelism", ra.parallelism)->check(CLI::PositiveNumber);
    run->add_option("--filter-gates", ra.filter_gates)->delimiter(',');
    run->add_option("--filter-qubits", ra.filter_qubits)->delimiter(',');
    run->add_option("--filter-moments", ra.filter_moments)->delimiter(',');
    run->add_flag("--oracle", ra.oracle, "compare against the density-matrix oracle");
    run->add_option("--threshold", ra.threshold, "oracle TV threshold");

    OracleArgs oa;
    auto *oracle = app.add_subcommand("oracle", "compare a dataset with the exact density-matrix distribution");
    oracle->add_option("--circuit", oa.circuit)->required();
    oracle->add_option("--noise", oa.noise)->required();
    oracle->add_option("--dataset", oa.dataset, "dataset directory")->required();
    oracle->add_option("--threshold", oa.threshold);

    BenchArgs ba;
    auto *bench = app.add_subcommand("bench", "batched vs naive throughput and shot uniqueness");
    bench->add_option("--circuit", ba.circuit)->required();
    bench->add_option("--noise", ba.noise)->required();
    bench->add_option("--out", ba.out_dir)->required();
    bench->add_option("--seed", ba.seed)->required();
    bench->add_option("--batch-sizes", ba.batch_sizes)->delimiter(',');
    bench->add_option("--repeats", ba.repeats)->check(CLI::PositiveNumber);
    bench->add_option("--naive-cap", ba.naive_cap)->check(CLI::PositiveNumber);
    bench->add_option("--selections", ba.selections, "fixed trajectory as site:kraus,...");

    std::vector<const char *> argv;
    for (const auto &s : args) {
        argv.push_back(s.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    try {
        if (*validate) {
            return cmd_validate(va, out);
        }
        if (*run) {
            return cmd_run(ra, out);
        }
        if (*oracle) {
            return cmd_oracle(oa, out);
        }
        return cmd_bench(ba, out);
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExecutionFailure;
    }
}

}  // namespace ptsbe::cli

#endif
