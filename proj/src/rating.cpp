#include "pokerank/rating.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pokerank::rating {

namespace {

constexpr double kQ = 0.00575646273248511421;  // ln(10)/400
constexpr double kPi = 3.14159265358979323846;

double expected_score(double ra, double rb) {
    return 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
}

double score_for_a(MatchResult r) {
    switch (r) {
        case MatchResult::AWins: return 1.0;
        case MatchResult::BWins: return 0.0;
        case MatchResult::Tie: return 0.5;
    }
    throw std::logic_error("unreachable");
}

}  // namespace

double EloConfig::k_for(double current_rating) const {
    for (const auto& band : k_schedule) {
        if (current_rating < band.below_rating) return band.k;
    }
    return fallback_k;
}

void EloConfig::validate() const {
    if (!(fallback_k > 0)) throw std::invalid_argument("Elo K must be positive");
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& band : k_schedule) {
        if (!(band.k > 0)) throw std::invalid_argument("Elo K must be positive");
        if (!(band.below_rating > prev))
            throw std::invalid_argument("Elo K schedule bounds must be strictly increasing");
        prev = band.below_rating;
    }
}

void GlickoConfig::validate() const {
    if (!(0 <= rd_floor && rd_floor <= initial_rd && initial_rd <= rd_ceiling))
        throw std::invalid_argument("require 0 <= rd_floor <= initial_rd <= rd_ceiling");
    if (c < 0) throw std::invalid_argument("RD inflation c must be nonnegative");
}

std::pair<double, double> elo_update(double ra, double rb, MatchResult result,
                                     const EloConfig& config) {
    if (!std::isfinite(ra) || !std::isfinite(rb))
        throw std::invalid_argument("Elo ratings must be finite");
    const double sa = score_for_a(result);
    const double ea = expected_score(ra, rb);
    const double ka = config.k_for(ra);
    const double kb = config.k_for(rb);
    // B's surprise is the exact negation of A's, so shared K cancels to zero.
    const double surprise = sa - ea;
    return {ra + ka * surprise, rb - kb * surprise};
}

double glicko_g(double rd) {
    return 1.0 / std::sqrt(1.0 + 3.0 * kQ * kQ * rd * rd / (kPi * kPi));
}

RatingState glicko_update(const RatingState& player, const std::vector<Opponent>& opponents,
                          const GlickoConfig& config) {
    config.validate();
    RatingState out = player;
    double rd = std::min(std::sqrt(player.deviation * player.deviation + config.c * config.c),
                         config.initial_rd);
    if (opponents.empty()) {
        out.deviation = std::clamp(rd, config.rd_floor, config.rd_ceiling);
        return out;
    }

    double d2_inv = 0.0;
    double delta_sum = 0.0;
    for (const auto& opp : opponents) {
        if (opp.rd < 0) throw std::invalid_argument("opponent RD must be nonnegative");
        if (opp.score != 0.0 && opp.score != 0.5 && opp.score != 1.0)
            throw std::invalid_argument("score must be 0, 0.5, or 1");
        const double g = glicko_g(opp.rd);
        const double e = 1.0 / (1.0 + std::pow(10.0, -g * (player.rating - opp.rating) / 400.0));
        d2_inv += kQ * kQ * g * g * e * (1.0 - e);
        delta_sum += g * (opp.score - e);

        out.games += 1;
        if (opp.score == 1.0)
            out.wins += 1;
        else if (opp.score == 0.0)
            out.losses += 1;
        else
            out.ties += 1;
    }

    const double denom = 1.0 / (rd * rd) + d2_inv;
    out.rating = player.rating + (kQ / denom) * delta_sum;
    out.deviation = std::clamp(std::sqrt(1.0 / denom), config.rd_floor, config.rd_ceiling);
    return out;
}

double gxe(double rating_value, double rd, const GxeConfig& config) {
    if (rd < 0) throw std::invalid_argument("RD must be nonnegative");
    const double ref_rd = config.reference_rd.value_or(rd);
    const double combined = std::sqrt(rd * rd + ref_rd * ref_rd);
    const double g = glicko_g(combined);
    return 1.0 / (1.0 + std::pow(10.0, -g * (rating_value - config.reference_rating) / 400.0));
}

void step_states(std::map<AgentId, RatingState>& elo, std::map<AgentId, RatingState>& glicko,
                 const MatchRecord& m, const LadderConfigs& configs) {
    auto elo_state = [&](const AgentId& id) -> RatingState& {
        auto [it, inserted] = elo.try_emplace(id);
        if (inserted) it->second.rating = configs.elo.initial;
        return it->second;
    };
    auto glicko_state = [&](const AgentId& id) -> RatingState& {
        auto [it, inserted] = glicko.try_emplace(id);
        if (inserted) {
            it->second.rating = configs.glicko.initial_rating;
            it->second.deviation = configs.glicko.initial_rd;
        }
        return it->second;
    };
    auto bump = [](RatingState& s, double score) {
        s.games += 1;
        if (score == 1.0)
            s.wins += 1;
        else if (score == 0.0)
            s.losses += 1;
        else
            s.ties += 1;
    };

    const double sa = score_for_a(m.result);

    RatingState& ea = elo_state(m.a);
    RatingState& eb = elo_state(m.b);
    auto [ra, rb] = elo_update(ea.rating, eb.rating, m.result, configs.elo);
    ea.rating = ra;
    eb.rating = rb;
    bump(ea, sa);
    bump(eb, 1.0 - sa);

    RatingState& ga = glicko_state(m.a);
    RatingState& gb = glicko_state(m.b);
    const RatingState ga_before = ga;
    const RatingState gb_before = gb;
    ga = glicko_update(ga_before, {{gb_before.rating, gb_before.deviation, sa}}, configs.glicko);
    gb = glicko_update(gb_before, {{ga_before.rating, ga_before.deviation, 1.0 - sa}},
                       configs.glicko);
}

LadderReplay replay_ladder(const std::vector<MatchRecord>& matches, const LadderConfigs& configs) {
    configs.elo.validate();
    configs.glicko.validate();
    LadderReplay replay;

    std::int64_t index = 0;
    for (const auto& m : matches) {
        ++index;
        step_states(replay.elo, replay.glicko, m, configs);
        for (const AgentId* id : {&m.a, &m.b}) {
            const RatingState& e = replay.elo.at(*id);
            const RatingState& g = replay.glicko.at(*id);
            replay.trajectory.push_back({index, *id, "elo", e.rating, 0.0});
            replay.trajectory.push_back({index, *id, "glicko", g.rating, g.deviation});
            replay.trajectory.push_back(
                {index, *id, "gxe", gxe(g.rating, g.deviation, configs.gxe), 0.0});
        }
    }
    return replay;
}

std::string render_trajectory(const std::vector<TrajectoryRow>& rows) {
    std::ostringstream out;
    out << "match_index\tagent\tmetric\trating\tdeviation\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.match_index << '\t' << r.agent << '\t' << r.metric << '\t' << r.rating << '\t'
            << r.deviation << '\n';
    }
    return out.str();
}

}  // namespace pokerank::rating
