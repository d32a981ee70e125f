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

#include "ptsbe/pts.hpp"

#include <random>
#include <set>

#include "gtest/gtest.h"
#include "test_support.hpp"

using namespace ptsbe;

namespace {

NoisyCircuit noisy(const std::string &circuit, const std::string &noise) {
    return attach_noise(parse_circuit(circuit), parse_noise_model(noise));
}

NoisyCircuit three_bit_flips(double p) {
    return noisy("qubits 3\ngate x 0\ngate x 1\ngate x 2",
                 "rule gate=x qubits=* channel=bit_flip(" + format_double(p) + ")\n");
}

// Two bit-flip sites on qubit 0, stacked on one op (same moment) or on consecutive ops.
NoisyCircuit same_moment_pair(bool same_moment) {
    auto c = parse_circuit("qubits 2\ngate x 0\ngate x 0");
    auto ch = analyze_channel("bit_flip(0.1)", builtin_channel("bit_flip", 0.1));
    c.channels.push_back(ch);
    c.sites.push_back({0, 0, c.moments[0], {0}, 0});
    c.sites.push_back({1, same_moment ? 0u : 1u, same_moment ? c.moments[0] : c.moments[1], {0}, 0});
    return c;
}

}  // namespace

TEST(pts, compatible_examples) {
    auto c = three_bit_flips(0.1);
    EXPECT_TRUE(compatible({2, 1}, {}, c));
    EXPECT_FALSE(compatible({1, 1}, {{1, 1}}, c));
    EXPECT_TRUE(compatible({1, 1}, {{0, 1}}, c));
    EXPECT_THROW(compatible({7, 1}, {}, c), ValidationError);
    EXPECT_FALSE(compatible({1, 1}, {{0, 1}}, same_moment_pair(true)));
    EXPECT_TRUE(compatible({1, 1}, {{0, 1}}, same_moment_pair(false)));
}

TEST(pts, unique_kraus_examples) {
    KrausSetIndex idx;
    EXPECT_TRUE(unique_kraus({{0, 1}}, idx));
    idx.insert({{0, 1}});
    EXPECT_FALSE(unique_kraus({{0, 1}}, idx));
    EXPECT_TRUE(unique_kraus({{0, 2}}, idx));
    EXPECT_TRUE(unique_kraus({}, idx));
}

TEST(pts, canonical_form) {
    EXPECT_TRUE(is_canonical({{0, 1}, {2, 3}}));
    EXPECT_FALSE(is_canonical({{2, 1}, {0, 3}}));
    EXPECT_FALSE(is_canonical({{0, 1}, {0, 2}}));
    EXPECT_FALSE(is_canonical({{0, 0}}));
    EXPECT_EQ(canonicalize({{0, 0}, {1, 2}, {2, 0}}), (Selections{{1, 2}}));
}

TEST(pts, joint_probability_examples) {
    auto c = three_bit_flips(0.1);
    EXPECT_NEAR(*joint_probability({}, c), 0.729, 1e-15);
    EXPECT_NEAR(*joint_probability({{1, 1}}, c), 0.081, 1e-15);
    auto ad = noisy("qubits 1\ngate x 0", "rule gate=x qubits=* channel=amplitude_damping(0.1)\n");
    EXPECT_FALSE(joint_probability({}, ad).has_value());
}

TEST(pts, probabilistic_noiseless_collapses_to_one_spec) {
    auto c = three_bit_flips(0.0);
    RandomStream rng(1);
    auto specs = pts_probabilistic(c, 500, 77, rng);
    ASSERT_EQ(specs.size(), 1u);
    EXPECT_TRUE(specs[0].selections.empty());
    EXPECT_EQ(specs[0].shots, 77u);
    EXPECT_DOUBLE_EQ(*specs[0].joint_prob, 1.0);
}

TEST(pts, probabilistic_forced_error) {
    // bit_flip(1) normalizes to the single operator X at index 0, so the only set has no
    // non-default outcome while still applying X.
    auto c = noisy("qubits 1\ngate i 0", "rule gate=i qubits=* channel=bit_flip(1)\n");
    RandomStream rng(2);
    auto specs = pts_probabilistic(c, 50, 10, rng);
    ASSERT_EQ(specs.size(), 1u);
    EXPECT_TRUE(specs[0].selections.empty());
    EXPECT_DOUBLE_EQ(*specs[0].joint_prob, 1.0);
}

TEST(pts, probabilistic_collects_all_sets) {
    auto c = three_bit_flips(0.5);
    RandomStream rng(3);
    auto specs = pts_probabilistic(c, 10000, 1, rng);
    ASSERT_EQ(specs.size(), 8u);
    std::set<Selections> seen;
    for (const auto &s : specs) {
        EXPECT_TRUE(seen.insert(s.selections).second);
        EXPECT_TRUE(is_canonical(s.selections));
        EXPECT_NEAR(*s.joint_prob, 0.125, 1e-15);
    }
}

TEST(pts, provenance_tags_describe_errors) {
    auto c = three_bit_flips(0.5);
    auto tags = provenance_tags({{0, 1}, {2, 1}}, c, "probabilistic");
    EXPECT_EQ(tags.at("strategy"), "probabilistic");
    EXPECT_EQ(tags.at("n_errors"), "2");
    EXPECT_EQ(tags.at("errors"),
              "site=0 gate=x qubits=0 moment=0 channel=bit_flip(0.5) kraus=1; "
              "site=2 gate=x qubits=2 moment=0 channel=bit_flip(0.5) kraus=1");
}

TEST(pts, per_site_marginals_before_dedup) {
    auto c = test::load_demo("demo4.circ", "demo4.noise");
    RandomStream rng(4);
    std::vector<std::vector<std::uint64_t>> hist(c.sites.size());
    for (std::size_t s = 0; s < c.sites.size(); ++s) {
        hist[s].assign(c.channel_of(c.sites[s]).site_probs.size(), 0);
    }
    std::vector<std::size_t> raw;
    for (int i = 0; i < 50000; ++i) {
        draw_kraus_sample(c, rng, {}, &raw);
        for (std::size_t s = 0; s < raw.size(); ++s) {
            ++hist[s][raw[s]];
        }
    }
    for (std::size_t s = 0; s < c.sites.size(); ++s) {
        EXPECT_GT(test::chi_square_gof(hist[s], c.channel_of(c.sites[s]).site_probs), 1e-4) << "site " << s;
    }
}

TEST(pts, proportional_examples) {
    auto make = [](std::vector<double> ps) {
        std::vector<TrajectorySpec> specs;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            TrajectorySpec s;
            s.selections = {{i, 1}};
            s.joint_prob = ps[i];
            specs.push_back(s);
        }
        return specs;
    };
    auto shots = [](const std::vector<TrajectorySpec> &specs) {
        std::vector<std::uint64_t> v;
        for (const auto &s : specs) {
            v.push_back(s.shots);
        }
        return v;
    };
    EXPECT_EQ(shots(pts_proportional(make({0.8, 0.2}), 1000)), (std::vector<std::uint64_t>{800, 200}));
    EXPECT_EQ(shots(pts_proportional(make({1.0 / 3, 1.0 / 3, 1.0 / 3}), 10)),
              (std::vector<std::uint64_t>{4, 3, 3}));
    EXPECT_EQ(shots(pts_proportional(make({0.01}), 12345)), (std::vector<std::uint64_t>{12345}));
    auto missing = make({0.5, 0.5});
    missing[1].joint_prob.reset();
    EXPECT_THROW(pts_proportional(missing, 10), ValidationError);
}

TEST(pts, proportional_preserves_order_and_total) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.001, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TrajectorySpec> specs(1 + rng() % 40);
        for (std::size_t i = 0; i < specs.size(); ++i) {
            specs[i].selections = {{i, 1}};
            specs[i].joint_prob = u(rng);
        }
        const std::uint64_t total = rng() % 100000;
        auto out = pts_proportional(specs, total);
        std::uint64_t sum = 0;
        for (const auto &s : out) {
            sum += s.shots;
        }
        EXPECT_EQ(sum, total);
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (std::size_t j = 0; j < out.size(); ++j) {
                if (*out[i].joint_prob < *out[j].joint_prob) {
                    EXPECT_LE(out[i].shots, out[j].shots + 1);
                }
            }
        }
    }
}

TEST(pts, band_examples) {
    auto c = three_bit_flips(0.1);
    RandomStream a(6), b(6);
    auto full = pts_band(c, 0.0, 1.0, 2000, 5, a);
    auto prob = pts_probabilistic(c, 2000, 5, b);
    ASSERT_EQ(full.size(), prob.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
        EXPECT_EQ(full[i].selections, prob[i].selections);
    }
    RandomStream r2(7);
    auto top = pts_band(c, 0.7, 1.0, 2000, 5, r2);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_TRUE(top[0].selections.empty());
    RandomStream r3(8);
    EXPECT_TRUE(pts_band(c, 0.9, 1.0, 2000, 5, r3).empty());
    RandomStream r4(9);
    EXPECT_THROW(pts_band(c, 0.5, 0.4, 10, 5, r4), ValidationError);
    auto ad = noisy("qubits 1\ngate x 0", "rule gate=x qubits=* channel=amplitude_damping(0.1)\n");
    EXPECT_THROW(pts_band(ad, 0.0, 1.0, 10, 5, r4), ValidationError);
}

TEST(pts, cutoff_examples) {
    auto c = noisy("qubits 2\ngate x 0\ngate x 1", "rule gate=x qubits=* channel=bit_flip(0.1)\n");
    auto specs = pts_cutoff(c, 0.05, 100);
    ASSERT_EQ(specs.size(), 3u);
    EXPECT_TRUE(specs[0].selections.empty());
    EXPECT_NEAR(*specs[0].joint_prob, 0.81, 1e-15);
    EXPECT_EQ(specs[1].selections, (Selections{{0, 1}}));
    EXPECT_EQ(specs[2].selections, (Selections{{1, 1}}));
    EXPECT_NEAR(*specs[1].joint_prob, 0.09, 1e-15);
    EXPECT_EQ(specs[2].shots, 100u);
    EXPECT_EQ(pts_cutoff(c, 0.0, 1, 4).size(), 4u);
    EXPECT_THROW(pts_cutoff(c, 0.0, 1, 3), ValidationError);
    auto clean = parse_circuit("qubits 1\ngate h 0");
    auto one = pts_cutoff(clean, 1.0, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_DOUBLE_EQ(*one[0].joint_prob, 1.0);
}

TEST(pts, cutoff_matches_brute_force) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 60; ++trial) {
        auto c = test::random_noisy_circuit(rng, {static_cast<int>(1 + rng() % 4), 14, 8, false});
        const double cutoff = trial % 3 == 0 ? 0.0 : std::pow(10.0, -static_cast<double>(1 + rng() % 5));
        auto expected = test::brute_force_sets(c, cutoff);
        auto specs = pts_cutoff(c, cutoff, 1);
        ASSERT_EQ(specs.size(), expected.size()) << "trial " << trial;
        std::map<Selections, double> want(expected.begin(), expected.end());
        for (std::size_t i = 0; i < specs.size(); ++i) {
            ASSERT_TRUE(want.count(specs[i].selections));
            EXPECT_NEAR(*specs[i].joint_prob, want[specs[i].selections], 1e-14);
            if (i > 0) {
                EXPECT_GE(*specs[i - 1].joint_prob, *specs[i].joint_prob);
            }
        }
    }
}

TEST(pts, site_filter_restricts_errors) {
    auto c = test::load_demo("demo4.circ", "demo4.noise");
    SiteFilter only_t{{"t"}, {}, {}};
    RandomStream rng(11);
    auto specs = pts_probabilistic(c, 3000, 1, rng, only_t);
    EXPECT_EQ(specs.size(), 4u);
    for (const auto &s : specs) {
        for (const auto &sel : s.selections) {
            EXPECT_EQ(c.ops[c.sites[sel.site].position].name, "t");
        }
    }
    auto cut = pts_cutoff(c, 0.0, 1, kDefaultEnumerationBound, SiteFilter{{}, {2}, {}});
    EXPECT_EQ(cut.size(), 2u);
}

TEST(pts, generate_specs_dispatch) {
    auto c = test::load_demo("demo4.circ", "demo4.noise");
    PtsConfig cfg;
    cfg.strategy = Strategy::proportional;
    cfg.nsamples = 2000;
    cfg.total_shots = 5000;
    cfg.seed = 3;
    auto specs = generate_specs(c, cfg);
    std::uint64_t total = 0;
    for (const auto &s : specs) {
        total += s.shots;
        EXPECT_EQ(s.tags.at("strategy"), "probabilistic");
        EXPECT_EQ(s.tags.at("allocation"), "proportional");
    }
    EXPECT_EQ(total, 5000u);
    EXPECT_EQ(generate_specs(c, cfg).size(), specs.size());
    cfg.p_min = 0.6;
    cfg.p_max = 0.5;
    EXPECT_THROW(generate_specs(c, cfg), ValidationError);
    EXPECT_EQ(parse_strategy("band"), Strategy::band);
    EXPECT_THROW(parse_strategy("greedy"), ValidationError);
}
