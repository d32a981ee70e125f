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

#ifndef PTSBE_DATASET_HPP
#define PTSBE_DATASET_HPP

#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ptsbe/errors.hpp"
#include "ptsbe/pts.hpp"
#include "ptsbe/statevector.hpp"

namespace ptsbe {

inline constexpr std::string_view kEngineVersion = "ptsbe 0.1.0";
inline constexpr std::string_view kManifestSchema = "ptsbe.manifest/1";
inline constexpr std::string_view kRecordsFile = "records.jsonl";
inline constexpr std::string_view kManifestFile = "manifest.json";

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw ExecutionError("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

inline std::string circuit_hash(const NoisyCircuit &c) {
    return sha256_hex(serialize_circuit(c));
}

inline std::string noise_hash(const NoisyCircuit &c) {
    return sha256_hex(c.noise_fingerprint);
}

enum class TrajectoryStatus {
    ok,
    annihilated,  ///< the fixed selection is impossible for the evolved state
    error,        ///< anything else went wrong; the dataset is marked partial
};

inline std::string to_string(TrajectoryStatus s) {
    switch (s) {
        case TrajectoryStatus::ok:
            return "ok";
        case TrajectoryStatus::annihilated:
            return "annihilated";
        case TrajectoryStatus::error:
            return "error";
    }
    return "?";
}

inline TrajectoryStatus parse_status(std::string_view s) {
    if (s == "ok") {
        return TrajectoryStatus::ok;
    }
    if (s == "annihilated") {
        return TrajectoryStatus::annihilated;
    }
    if (s == "error") {
        return TrajectoryStatus::error;
    }
    throw ValidationError("unknown trajectory status '" + std::string(s) + "'");
}

struct TrajectoryResult {
    std::size_t id = 0;
    TrajectorySpec spec;
    std::uint64_t stream_seed = 0;
    TrajectoryStatus status = TrajectoryStatus::ok;
    std::string error;
    /// Π of realized probabilities at general-channel sites.
    double realized_weight = 1.0;
    /// Probability of the full Kraus path: mixture weights times realized_weight.
    std::optional<double> path_prob;
    std::map<std::uint64_t, std::uint64_t> counts;
    double prep_seconds = 0.0;
    double sample_seconds = 0.0;

    std::uint64_t recorded_shots() const {
        std::uint64_t n = 0;
        for (const auto &[_, c] : counts) {
            n += c;
        }
        return n;
    }
};

struct Dataset {
    int n_qubits = 0;
    std::string circuit_hash;
    std::string noise_hash;
    std::uint64_t master_seed = 0;
    std::string strategy;
    nlohmann::json config = nlohmann::json::object();
    bool partial = false;
    std::vector<TrajectoryResult> trajectories;
    double wall_seconds = 0.0;
    std::size_t parallelism = 1;

    std::uint64_t total_shots() const {
        std::uint64_t n = 0;
        for (const auto &t : trajectories) {
            n += t.recorded_shots();
        }
        return n;
    }

    /// Distinct bitstrings over all records divided by total shots.
    double unique_fraction() const {
        std::map<std::uint64_t, bool> seen;
        for (const auto &t : trajectories) {
            for (const auto &[o, _] : t.counts) {
                seen[o] = true;
            }
        }
        const auto total = total_shots();
        return total ? static_cast<double>(seen.size()) / static_cast<double>(total) : 0.0;
    }
};

enum class Weighting {
    pooled,        ///< every shot counts once (proportional or conventional datasets)
    path_weighted  ///< trajectory α contributes p'_α · counts_α / m_α (uniform-shot datasets)
};

/// Empirical outcome distribution of a dataset.
inline std::vector<double> empirical_distribution(const Dataset &ds, Weighting w) {
    std::vector<double> p(std::size_t{1} << ds.n_qubits, 0.0);
    if (w == Weighting::pooled) {
        const auto total = ds.total_shots();
        if (total == 0) {
            throw ValidationError("dataset has no shots");
        }
        for (const auto &t : ds.trajectories) {
            for (const auto &[o, c] : t.counts) {
                p.at(o) += static_cast<double>(c) / static_cast<double>(total);
            }
        }
        return p;
    }
    double norm = 0.0;
    for (const auto &t : ds.trajectories) {
        if (t.recorded_shots() > 0) {
            if (!t.path_prob) {
                throw ValidationError("trajectory " + std::to_string(t.id) + " has no path probability");
            }
            norm += *t.path_prob;
        }
    }
    if (!(norm > 0.0)) {
        throw ValidationError("dataset has no weighted shots");
    }
    for (const auto &t : ds.trajectories) {
        const auto m = t.recorded_shots();
        if (m == 0) {
            continue;
        }
        const double weight = *t.path_prob / norm;
        for (const auto &[o, c] : t.counts) {
            p.at(o) += weight * static_cast<double>(c) / static_cast<double>(m);
        }
    }
    return p;
}

// ---------------------------------------------------------------------------------------------
// Serialization.

/// One line per (trajectory, bitstring): {"t": <id>, "b": "<bits>", "c": <count>}, sorted by
/// t then bitstring.
inline std::string records_jsonl(const Dataset &ds) {
    std::string out;
    for (const auto &t : ds.trajectories) {
        const std::string id = std::to_string(t.id);
        for (const auto &[o, c] : t.counts) {
            out += "{\"t\": " + id + ", \"b\": \"" + to_bitstring(o, ds.n_qubits) + "\", \"c\": " + std::to_string(c) +
                   "}\n";
        }
    }
    return out;
}

inline nlohmann::json optional_json(const std::optional<double> &v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

/// Manifest content excluding the `timing` block and `content_hash`.
inline nlohmann::json manifest_body(const Dataset &ds) {
    using nlohmann::json;
    json trajs = json::array();
    for (const auto &t : ds.trajectories) {
        json sel = json::array();
        for (const auto &s : t.spec.selections) {
            sel.push_back({s.site, s.kraus});
        }
        trajs.push_back({{"id", t.id},
                         {"stream_seed", t.stream_seed},
                         {"selections", sel},
                         {"joint_prob", optional_json(t.spec.joint_prob)},
                         {"path_prob", optional_json(t.path_prob)},
                         {"realized_weight", t.realized_weight},
                         {"shots", t.spec.shots},
                         {"recorded_shots", t.recorded_shots()},
                         {"status", to_string(t.status)},
                         {"error", t.error},
                         {"tags", t.spec.tags}});
    }
    return {{"schema", kManifestSchema},
            {"engine_version", kEngineVersion},
            {"n_qubits", ds.n_qubits},
            {"circuit_hash", ds.circuit_hash},
            {"noise_hash", ds.noise_hash},
            {"master_seed", ds.master_seed},
            {"strategy", ds.strategy},
            {"config", ds.config},
            {"partial", ds.partial},
            {"trajectory_count", ds.trajectories.size()},
            {"total_shots", ds.total_shots()},
            {"trajectories", trajs}};
}

inline nlohmann::json manifest_json(const Dataset &ds) {
    auto m = manifest_body(ds);
    m["content_hash"] = sha256_hex(m.dump());
    nlohmann::json per = nlohmann::json::array();
    for (const auto &t : ds.trajectories) {
        per.push_back({{"id", t.id}, {"prep_seconds", t.prep_seconds}, {"sample_seconds", t.sample_seconds}});
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["timing"] = {{"wall_seconds", ds.wall_seconds},
                   {"parallelism", ds.parallelism},
                   {"created_at", stamp},
                   {"trajectories", per}};
    return m;
}

inline void write_text_file(const std::filesystem::path &path, std::string_view text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

inline std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot read '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Writes records.jsonl and manifest.json into `dir`, creating it if needed.
inline void write_dataset(const Dataset &ds, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    }
    write_text_file(dir / kRecordsFile, records_jsonl(ds));
    write_text_file(dir / kManifestFile, manifest_json(ds).dump(2) + "\n");
}

/// Loads a dataset written by write_dataset. Timing fields are restored when present.
inline Dataset read_dataset(const std::filesystem::path &dir) {
    using nlohmann::json;
    json m;
    try {
        m = json::parse(read_text_file(dir / kManifestFile));
    } catch (const json::exception &e) {
        throw ValidationError("malformed manifest: " + std::string(e.what()));
    }
    Dataset ds;
    try {
        if (m.at("schema").get<std::string>() != kManifestSchema) {
            throw ValidationError("unsupported manifest schema '" + m.at("schema").get<std::string>() + "'");
        }
        ds.n_qubits = m.at("n_qubits").get<int>();
        ds.circuit_hash = m.at("circuit_hash").get<std::string>();
        ds.noise_hash = m.at("noise_hash").get<std::string>();
        ds.master_seed = m.at("master_seed").get<std::uint64_t>();
        ds.strategy = m.at("strategy").get<std::string>();
        ds.config = m.at("config");
        ds.partial = m.at("partial").get<bool>();
        std::map<std::size_t, std::size_t> index;
        for (const auto &t : m.at("trajectories")) {
            TrajectoryResult r;
            r.id = t.at("id").get<std::size_t>();
            r.stream_seed = t.at("stream_seed").get<std::uint64_t>();
            for (const auto &s : t.at("selections")) {
                r.spec.selections.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
            }
            if (!t.at("joint_prob").is_null()) {
                r.spec.joint_prob = t.at("joint_prob").get<double>();
            }
            if (!t.at("path_prob").is_null()) {
                r.path_prob = t.at("path_prob").get<double>();
            }
            r.realized_weight = t.at("realized_weight").get<double>();
            r.spec.shots = t.at("shots").get<std::uint64_t>();
            r.status = parse_status(t.at("status").get<std::string>());
            r.error = t.at("error").get<std::string>();
            r.spec.tags = t.at("tags").get<std::map<std::string, std::string>>();
            index[r.id] = ds.trajectories.size();
            ds.trajectories.push_back(std::move(r));
        }
        if (m.contains("timing")) {
            const auto &timing = m.at("timing");
            ds.wall_seconds = timing.value("wall_seconds", 0.0);
            ds.parallelism = timing.value("parallelism", std::size_t{1});
        }

        const std::string records = read_text_file(dir / kRecordsFile);
        std::istringstream lines(records);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            if (line.empty()) {
                continue;
            }
            json rec = json::parse(line);
            auto it = index.find(rec.at("t").get<std::size_t>());
            if (it == index.end()) {
                throw ValidationError("record on line " + std::to_string(lineno) + " refers to unknown trajectory");
            }
            const auto bits = rec.at("b").get<std::string>();
            if (static_cast<int>(bits.size()) != ds.n_qubits) {
                throw ValidationError("record on line " + std::to_string(lineno) + " has the wrong bitstring length");
            }
            ds.trajectories[it->second].counts[from_bitstring(bits)] += rec.at("c").get<std::uint64_t>();
        }
    } catch (const json::exception &e) {
        throw ValidationError("malformed dataset: " + std::string(e.what()));
    }
    return ds;
}

}  // namespace ptsbe

#endif
