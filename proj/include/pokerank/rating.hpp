#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pokerank/core.hpp"

namespace pokerank::rating {

// K bands keyed by rating: the first band whose upper bound exceeds the
// player's rating applies; ratings above every band use fallback_k.
struct KBand {
    double below_rating;
    double k;
};

struct EloConfig {
    double initial = 1500.0;
    double fallback_k = 32.0;
    std::vector<KBand> k_schedule;  // empty = constant fallback_k; bounds strictly increasing

    double k_for(double current_rating) const;
    void validate() const;  // throws std::invalid_argument on a bad schedule
};

struct GlickoConfig {
    double initial_rating = 1500.0;
    double initial_rd = 350.0;
    double rd_floor = 25.0;
    double rd_ceiling = 350.0;
    double c = 0.0;  // per-period RD inflation

    void validate() const;
};

struct GxeConfig {
    double reference_rating = 1500.0;
    // Deviation of the reference opponent. When unset the reference mirrors
    // the player's own deviation.
    std::optional<double> reference_rd;
};

// Outcome of one rating period's games, from the updated player's side.
struct Opponent {
    double rating;
    double rd;
    double score;  // 1 win, 0 loss, 0.5 tie
};

// Returns both post-match ratings. Zero-sum when both sides resolve to the
// same K.
std::pair<double, double> elo_update(double ra, double rb, MatchResult result,
                                     const EloConfig& config = {});

// Glicko-1 rating-period update. An empty opponent list only applies the
// pre-period RD inflation (a no-op when c = 0).
RatingState glicko_update(const RatingState& player, const std::vector<Opponent>& opponents,
                          const GlickoConfig& config = {});

// 1/sqrt(1 + 3 q^2 rd^2 / pi^2), q = ln(10)/400.
double glicko_g(double rd);

// Expected score against a reference opponent at config.reference_rating,
// attenuated by g applied to the combined deviation of both sides.
double gxe(double rating_value, double rd, const GxeConfig& config = {});

struct LadderConfigs {
    EloConfig elo;
    GlickoConfig glicko;
    GxeConfig gxe;
};

struct TrajectoryRow {
    std::int64_t match_index;  // 1-based position in the replayed log
    AgentId agent;
    std::string metric;  // "elo", "glicko", "gxe"
    double rating;
    double deviation;  // 0 for metrics that define none
};

struct LadderReplay {
    std::map<AgentId, RatingState> elo;
    std::map<AgentId, RatingState> glicko;
    std::vector<TrajectoryRow> trajectory;
};

// Applies one match to both sides' Elo and Glicko-1 states, creating initial
// states for unseen agents. replay_ladder is a fold over this, so an
// incremental consumer stepping match-by-match lands on identical states.
void step_states(std::map<AgentId, RatingState>& elo, std::map<AgentId, RatingState>& glicko,
                 const MatchRecord& m, const LadderConfigs& configs);

// Applies Elo and Glicko-1 match-by-match (rating period = one game) in the
// given order and records the trajectory of every touched agent. Pure:
// identical input yields bit-identical output.
LadderReplay replay_ladder(const std::vector<MatchRecord>& matches,
                           const LadderConfigs& configs = {});

// Header plus one tab-separated row per trajectory entry.
std::string render_trajectory(const std::vector<TrajectoryRow>& rows);

}  // namespace pokerank::rating
