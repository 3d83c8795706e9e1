#include "pokerank/leaderboard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pokerank {

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::Elo: return "elo";
        case Metric::Glicko: return "glicko";
        case Metric::Gxe: return "gxe";
        case Metric::Fhbt: return "fhbt";
        case Metric::WinRate: return "winrate";
    }
    throw std::logic_error("unreachable");
}

Metric metric_from_name(const std::string& name) {
    if (name == "elo") return Metric::Elo;
    if (name == "glicko") return Metric::Glicko;
    if (name == "gxe") return Metric::Gxe;
    if (name == "fhbt") return Metric::Fhbt;
    if (name == "winrate") return Metric::WinRate;
    throw std::invalid_argument("unknown metric '" + name +
                                "' (expected elo, glicko, gxe, fhbt, or winrate)");
}

double metric_value(const LeaderboardEntry& e, Metric m) {
    switch (m) {
        case Metric::Elo: return e.elo;
        case Metric::Glicko: return e.glicko_rating;
        case Metric::Gxe: return e.gxe;
        case Metric::Fhbt:
            return e.fhbt ? e.fhbt->display_rating : -std::numeric_limits<double>::infinity();
        case Metric::WinRate: return e.win_rate;
    }
    throw std::logic_error("unreachable");
}

std::vector<MatchRecord> filter_format(const std::vector<MatchRecord>& matches,
                                       const std::string& format) {
    std::vector<MatchRecord> out;
    for (const auto& m : matches)
        if (m.format == format) out.push_back(m);
    return out;
}

std::vector<LeaderboardEntry> build_leaderboard(const std::vector<MatchRecord>& matches,
                                                const LeaderboardConfig& config) {
    if (matches.empty()) return {};
    for (const auto& m : matches) {
        if (m.format != matches.front().format)
            throw std::invalid_argument("leaderboard spans formats '" + matches.front().format +
                                        "' and '" + m.format + "'; rate each ladder separately");
    }

    const rating::LadderConfigs ladder_configs{config.elo, config.glicko, config.gxe};
    rating::LadderReplay replay = rating::replay_ladder(matches, ladder_configs);

    bt::BTFit fit = config.bootstrap_replicates > 0
                        ? bt::bt_bootstrap(matches, config.bt, config.bootstrap_replicates,
                                           config.bootstrap_seed)
                        : bt::bt_fit(matches, config.bt);

    return assemble_leaderboard(replay.elo, replay.glicko, fit, config);
}

std::vector<LeaderboardEntry> assemble_leaderboard(
    const std::map<AgentId, RatingState>& elo_states,
    const std::map<AgentId, RatingState>& glicko_states, const bt::BTFit& fit,
    const LeaderboardConfig& config) {
    std::vector<LeaderboardEntry> entries;
    for (const auto& [agent, glicko_state] : glicko_states) {
        LeaderboardEntry e;
        e.agent = agent;
        e.elo = elo_states.at(agent).rating;
        e.glicko_rating = glicko_state.rating;
        e.glicko_rd = glicko_state.deviation;
        e.gxe = rating::gxe(glicko_state.rating, glicko_state.deviation, config.gxe);
        e.battles = glicko_state.games;
        e.wins = glicko_state.wins;
        e.losses = glicko_state.losses;
        e.ties = glicko_state.ties;
        e.win_rate = glicko_state.games > 0
                         ? (static_cast<double>(e.wins) + static_cast<double>(e.ties) / 2.0) /
                               static_cast<double>(e.battles)
                         : 0.0;
        auto strength = fit.strengths.find(agent);
        if (e.battles >= config.bt_min_battles && strength != fit.strengths.end()) {
            FhbtEstimate est;
            est.strength = strength->second;
            est.display_rating = fit.display_rating.at(agent);
            est.ci_low = est.display_rating;
            est.ci_high = est.display_rating;
            if (fit.ci) {
                auto ci = fit.ci->find(agent);
                if (ci != fit.ci->end()) {
                    est.ci_low = ci->second.low;
                    est.ci_high = ci->second.high;
                    est.has_ci = true;
                }
            }
            e.fhbt = est;
        }
        entries.push_back(std::move(e));
    }

    std::sort(entries.begin(), entries.end(),
              [&](const LeaderboardEntry& x, const LeaderboardEntry& y) {
                  const double vx = metric_value(x, config.primary);
                  const double vy = metric_value(y, config.primary);
                  if (vx != vy) return vx > vy;
                  if (x.glicko_rating != y.glicko_rating) return x.glicko_rating > y.glicko_rating;
                  return x.agent < y.agent;
              });
    return entries;
}

std::string render_leaderboard(const std::vector<LeaderboardEntry>& entries) {
    std::ostringstream out;
    out << "rank\tagent\telo\tglicko\trd\tgxe\tfhbt\tfhbt_low\tfhbt_high\twin_rate\tbattles\n";
    out.precision(17);
    int rank = 0;
    for (const auto& e : entries) {
        out << ++rank << '\t' << e.agent << '\t' << e.elo << '\t' << e.glicko_rating << '\t'
            << e.glicko_rd << '\t' << e.gxe << '\t';
        if (e.fhbt)
            out << e.fhbt->display_rating << '\t' << e.fhbt->ci_low << '\t' << e.fhbt->ci_high;
        else
            out << "-\t-\t-";
        out << '\t' << e.win_rate << '\t' << e.battles << '\n';
    }
    return out.str();
}

}  // namespace pokerank
