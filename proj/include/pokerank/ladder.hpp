#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pokerank/btfit.hpp"
#include "pokerank/core.hpp"

namespace pokerank::ladder {

struct SyntheticAgent {
    AgentId id;
    double true_strength;  // Bradley-Terry latent, positive
};

struct MatchmakingPolicy {
    enum class Kind { Uniform, Proximity, BaselineMix };

    Kind kind = Kind::Uniform;
    double proximity_window = 100.0;  // Elo points
    int max_widenings = 4;            // window doublings before uniform fallback
    double baseline_prob = 0.0;       // BaselineMix: chance the game involves the baseline
    std::size_t baseline_index = 0;   // into the agents list

    static MatchmakingPolicy uniform();
    static MatchmakingPolicy proximity(double window);
    static MatchmakingPolicy baseline_mix(double prob, std::size_t index);
};

struct SimStats {
    std::size_t window_widenings = 0;
    std::size_t uniform_fallbacks = 0;  // proximity games with no eligible pair at any width
};

// Samples `games` matches: pairings per the policy (proximity tracks a live
// internal Elo table), outcomes with P(i beats j) = pi_i/(pi_i + pi_j).
// Deterministic given the seed; timestamps increase monotonically; output
// always passes ingestion validation.
std::vector<MatchRecord> simulate_ladder(const std::vector<SyntheticAgent>& agents,
                                         const MatchmakingPolicy& policy, std::size_t games,
                                         std::uint64_t seed,
                                         const std::string& format = "synthetic",
                                         SimStats* stats = nullptr);

// --- qualification ----------------------------------------------------------

struct Qualifier {
    AgentId agent;
    int seed;          // 1-based
    std::string slot;  // "elo" or "fhbt"
};

// Picks the top n_elo agents by Elo, then the top n_fhbt by FH-BT display
// rating among the rest with at least min_battles. Seeds follow FH-BT order
// (ties: more battles, then name); qualifiers without an FH-BT rating seed
// last, ordered by Elo. Throws when the field falls short, naming the gap.
std::vector<Qualifier> select_qualifiers(const std::vector<LeaderboardEntry>& leaderboard,
                                         int n_elo = 2, int n_fhbt = 6,
                                         std::int64_t min_battles = 250);

// --- brackets ----------------------------------------------------------------

// Plays one full series between a and b; returns (wins_a, wins_b). One side
// must reach the win target (ceil(match_length / 2)), the other stay below.
using SeriesOracle = std::function<std::pair<int, int>(const AgentId&, const AgentId&)>;

struct SeriesResult {
    AgentId a;
    AgentId b;
    int wins_a;
    int wins_b;
    AgentId winner;
};

struct Bracket {
    std::vector<AgentId> seeds;  // seed 1 first
    int match_length = 99;
    std::vector<std::vector<SeriesResult>> rounds;
    AgentId champion;
};

// Single elimination with standard seeding: with 8 seeds, round one is
// 1v8, 4v5, 2v7, 3v6, so the top two seeds can only meet in the final.
// Throws on a series result inconsistent with first-to-target.
Bracket run_bracket(const std::vector<AgentId>& seeds, int match_length,
                    const SeriesOracle& outcome_source);

// Oracle over recorded series scores; pairs may be given in either order.
// A pairing with no recorded series is an error.
SeriesOracle recorded_series(
    const std::vector<std::tuple<AgentId, AgentId, int, int>>& series);

// Oracle that samples each game at the fixed probability
// strength_a/(strength_a + strength_b) until one side reaches the target.
// Deterministic given the seed; successive series draw independent streams.
SeriesOracle sampled_series(const std::map<AgentId, double>& strengths, int match_length,
                            std::uint64_t seed);
SeriesOracle sampled_series(const bt::BTFit& fit, int match_length, std::uint64_t seed);

// Loads a recorded bracket (JSON: match_length, seeds, series with a/b/
// wins_a/wins_b) and replays it.
Bracket replay_bracket_file(const std::string& path);

// Round-by-round text report: seed, name, games won, advancing side.
std::string render_bracket(const Bracket& bracket);

}  // namespace pokerank::ladder
