#include "pokerank/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "pokerank/rating.hpp"

namespace pokerank::ladder {

namespace {

// 2025-01-01T00:00:00Z; simulated matches are spaced one second apart.
constexpr std::int64_t kSimEpochMs = 1735689600000;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

int win_target(int match_length) { return (match_length + 1) / 2; }

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

// Bracket positions for 2^n seeds such that seeds 1 and 2 can only meet in
// the final: each expansion pairs s with (2k + 1 - s).
std::vector<std::size_t> seeding_order(std::size_t n) {
    std::vector<std::size_t> order{1};
    while (order.size() < n) {
        std::vector<std::size_t> next;
        next.reserve(order.size() * 2);
        const std::size_t doubled = order.size() * 2;
        for (std::size_t s : order) {
            next.push_back(s);
            next.push_back(doubled + 1 - s);
        }
        order = std::move(next);
    }
    return order;
}

std::string round_label(std::size_t series_in_round) {
    switch (series_in_round) {
        case 1: return "final";
        case 2: return "semifinals";
        case 4: return "quarterfinals";
        default: return "round of " + std::to_string(series_in_round * 2);
    }
}

}  // namespace

MatchmakingPolicy MatchmakingPolicy::uniform() { return {}; }

MatchmakingPolicy MatchmakingPolicy::proximity(double window) {
    MatchmakingPolicy p;
    p.kind = Kind::Proximity;
    p.proximity_window = window;
    return p;
}

MatchmakingPolicy MatchmakingPolicy::baseline_mix(double prob, std::size_t index) {
    MatchmakingPolicy p;
    p.kind = Kind::BaselineMix;
    p.baseline_prob = prob;
    p.baseline_index = index;
    return p;
}

std::vector<MatchRecord> simulate_ladder(const std::vector<SyntheticAgent>& agents,
                                         const MatchmakingPolicy& policy, std::size_t games,
                                         std::uint64_t seed, const std::string& format,
                                         SimStats* stats) {
    if (agents.size() < 2) throw std::invalid_argument("need at least two agents");
    for (const auto& a : agents) {
        if (a.id.empty()) throw std::invalid_argument("empty agent id");
        if (!(a.true_strength > 0)) throw std::invalid_argument("strengths must be positive");
    }
    {
        std::vector<AgentId> ids;
        for (const auto& a : agents) ids.push_back(a.id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw std::invalid_argument("duplicate agent id");
    }
    if (policy.kind == MatchmakingPolicy::Kind::BaselineMix &&
        policy.baseline_index >= agents.size())
        throw std::invalid_argument("baseline index out of range");

    std::mt19937_64 rng(splitmix64(seed));
    const std::size_t n = agents.size();
    std::vector<double> elo(n, 1500.0);
    const rating::EloConfig elo_config;

    auto uniform_pair = [&]() {
        const std::size_t i = uniform_below(rng, n);
        std::size_t j = uniform_below(rng, n - 1);
        if (j >= i) ++j;
        return std::make_pair(i, j);
    };

    std::vector<MatchRecord> out;
    out.reserve(games);
    std::vector<std::size_t> eligible;
    for (std::size_t g = 0; g < games; ++g) {
        std::size_t i = 0, j = 0;
        switch (policy.kind) {
            case MatchmakingPolicy::Kind::Uniform:
                std::tie(i, j) = uniform_pair();
                break;
            case MatchmakingPolicy::Kind::Proximity: {
                i = uniform_below(rng, n);
                double window = policy.proximity_window;
                bool paired = false;
                for (int widen = 0; widen <= policy.max_widenings; ++widen) {
                    if (widen > 0) {
                        window *= 2.0;
                        if (stats) stats->window_widenings += 1;
                    }
                    eligible.clear();
                    for (std::size_t k = 0; k < n; ++k) {
                        if (k != i && std::abs(elo[k] - elo[i]) <= window) eligible.push_back(k);
                    }
                    if (!eligible.empty()) {
                        j = eligible[uniform_below(rng, eligible.size())];
                        paired = true;
                        break;
                    }
                }
                if (!paired) {
                    if (stats) stats->uniform_fallbacks += 1;
                    std::tie(i, j) = uniform_pair();
                }
                break;
            }
            case MatchmakingPolicy::Kind::BaselineMix: {
                if (uniform_double(rng) < policy.baseline_prob) {
                    i = policy.baseline_index;
                    j = uniform_below(rng, n - 1);
                    if (j >= i) ++j;
                } else {
                    std::tie(i, j) = uniform_pair();
                }
                break;
            }
        }

        const double p_i = agents[i].true_strength /
                           (agents[i].true_strength + agents[j].true_strength);
        const bool i_wins = uniform_double(rng) < p_i;

        MatchRecord m;
        char id[24];
        std::snprintf(id, sizeof id, "sim-%010zu", g);
        m.id = id;
        m.ts_ms = kSimEpochMs + static_cast<std::int64_t>(g) * 1000;
        m.format = format;
        m.a = agents[i].id;
        m.b = agents[j].id;
        m.result = i_wins ? MatchResult::AWins : MatchResult::BWins;
        out.push_back(std::move(m));

        auto [ra, rb] = rating::elo_update(elo[i], elo[j],
                                           i_wins ? MatchResult::AWins : MatchResult::BWins,
                                           elo_config);
        elo[i] = ra;
        elo[j] = rb;
    }
    return out;
}

std::vector<Qualifier> select_qualifiers(const std::vector<LeaderboardEntry>& leaderboard,
                                         int n_elo, int n_fhbt, std::int64_t min_battles) {
    if (n_elo < 0 || n_fhbt < 0 || n_elo + n_fhbt < 2)
        throw std::invalid_argument("need at least two qualifier slots");

    const double neg_inf = -std::numeric_limits<double>::infinity();
    auto fhbt_of = [&](const LeaderboardEntry& e) {
        return e.fhbt ? e.fhbt->display_rating : neg_inf;
    };
    auto fhbt_less = [&](const LeaderboardEntry* x, const LeaderboardEntry* y) {
        if (fhbt_of(*x) != fhbt_of(*y)) return fhbt_of(*x) > fhbt_of(*y);
        if (x->battles != y->battles) return x->battles > y->battles;
        return x->agent < y->agent;
    };

    std::vector<const LeaderboardEntry*> by_elo;
    for (const auto& e : leaderboard) by_elo.push_back(&e);
    std::sort(by_elo.begin(), by_elo.end(),
              [&](const LeaderboardEntry* x, const LeaderboardEntry* y) {
                  if (x->elo != y->elo) return x->elo > y->elo;
                  return fhbt_less(x, y);
              });

    if (static_cast<int>(by_elo.size()) < n_elo + n_fhbt)
        throw std::runtime_error("qualification needs " + std::to_string(n_elo + n_fhbt) +
                                 " agents, leaderboard has " + std::to_string(by_elo.size()));

    std::vector<const LeaderboardEntry*> picked(by_elo.begin(), by_elo.begin() + n_elo);

    std::vector<const LeaderboardEntry*> fhbt_pool;
    for (const auto* e : by_elo) {
        if (std::find(picked.begin(), picked.end(), e) != picked.end()) continue;
        if (e->fhbt && e->battles >= min_battles) fhbt_pool.push_back(e);
    }
    if (static_cast<int>(fhbt_pool.size()) < n_fhbt)
        throw std::runtime_error(
            "only " + std::to_string(fhbt_pool.size()) + " agents eligible for " +
            std::to_string(n_fhbt) + " FH-BT slots (need a rating and at least " +
            std::to_string(min_battles) + " battles)");
    std::sort(fhbt_pool.begin(), fhbt_pool.end(), fhbt_less);
    picked.insert(picked.end(), fhbt_pool.begin(), fhbt_pool.begin() + n_fhbt);

    // Seed by FH-BT standing; qualifiers without one go last, by Elo.
    std::vector<std::pair<const LeaderboardEntry*, std::string>> seeded;
    for (std::size_t k = 0; k < picked.size(); ++k)
        seeded.emplace_back(picked[k], k < static_cast<std::size_t>(n_elo) ? "elo" : "fhbt");
    std::stable_sort(seeded.begin(), seeded.end(), [&](const auto& x, const auto& y) {
        const bool x_rated = x.first->fhbt.has_value();
        const bool y_rated = y.first->fhbt.has_value();
        if (x_rated != y_rated) return x_rated;
        if (x_rated) return fhbt_less(x.first, y.first);
        return x.first->elo > y.first->elo;
    });

    std::vector<Qualifier> out;
    for (std::size_t k = 0; k < seeded.size(); ++k)
        out.push_back({seeded[k].first->agent, static_cast<int>(k) + 1, seeded[k].second});
    return out;
}

Bracket run_bracket(const std::vector<AgentId>& seeds, int match_length,
                    const SeriesOracle& outcome_source) {
    if (!is_power_of_two(seeds.size()))
        throw std::invalid_argument("seed count must be a power of two, at least 2");
    if (match_length < 1) throw std::invalid_argument("match length must be positive");
    {
        std::vector<AgentId> unique = seeds;
        std::sort(unique.begin(), unique.end());
        if (std::adjacent_find(unique.begin(), unique.end()) != unique.end())
            throw std::invalid_argument("duplicate seed");
    }

    Bracket bracket;
    bracket.seeds = seeds;
    bracket.match_length = match_length;
    const int target = win_target(match_length);

    std::vector<AgentId> alive;
    for (std::size_t pos : seeding_order(seeds.size())) alive.push_back(seeds[pos - 1]);

    while (alive.size() > 1) {
        std::vector<SeriesResult> round;
        std::vector<AgentId> winners;
        for (std::size_t k = 0; k + 1 < alive.size(); k += 2) {
            const AgentId& a = alive[k];
            const AgentId& b = alive[k + 1];
            auto [wins_a, wins_b] = outcome_source(a, b);
            const bool a_won = wins_a == target && wins_b < target && wins_b >= 0;
            const bool b_won = wins_b == target && wins_a < target && wins_a >= 0;
            if (a_won == b_won)
                throw std::runtime_error("series " + a + " vs " + b + " scored " +
                                         std::to_string(wins_a) + "-" + std::to_string(wins_b) +
                                         ", not a first-to-" + std::to_string(target) + " result");
            round.push_back({a, b, wins_a, wins_b, a_won ? a : b});
            winners.push_back(round.back().winner);
        }
        bracket.rounds.push_back(std::move(round));
        alive = std::move(winners);
    }
    bracket.champion = alive.front();
    return bracket;
}

SeriesOracle recorded_series(
    const std::vector<std::tuple<AgentId, AgentId, int, int>>& series) {
    auto table = std::make_shared<std::map<std::pair<AgentId, AgentId>, std::pair<int, int>>>();
    for (const auto& [a, b, wa, wb] : series) {
        if (!table->emplace(std::make_pair(a, b), std::make_pair(wa, wb)).second)
            throw std::invalid_argument("duplicate recorded series " + a + " vs " + b);
    }
    return [table](const AgentId& a, const AgentId& b) {
        auto it = table->find({a, b});
        if (it != table->end()) return it->second;
        it = table->find({b, a});
        if (it != table->end()) return std::make_pair(it->second.second, it->second.first);
        throw std::runtime_error("no recorded series for " + a + " vs " + b);
    };
}

SeriesOracle sampled_series(const std::map<AgentId, double>& strengths, int match_length,
                            std::uint64_t seed) {
    for (const auto& [id, s] : strengths)
        if (!(s > 0)) throw std::invalid_argument("strength of '" + id + "' must be positive");
    const int target = win_target(match_length);
    auto counter = std::make_shared<std::uint64_t>(0);
    auto table = std::make_shared<std::map<AgentId, double>>(strengths);
    return [table, counter, target, seed](const AgentId& a, const AgentId& b) {
        auto sa = table->find(a);
        auto sb = table->find(b);
        if (sa == table->end()) throw std::out_of_range("unknown agent '" + a + "'");
        if (sb == table->end()) throw std::out_of_range("unknown agent '" + b + "'");
        const double p = sa->second / (sa->second + sb->second);
        std::mt19937_64 rng(splitmix64(seed + (*counter)++));
        int wins_a = 0, wins_b = 0;
        while (wins_a < target && wins_b < target) {
            if (uniform_double(rng) < p)
                ++wins_a;
            else
                ++wins_b;
        }
        return std::make_pair(wins_a, wins_b);
    };
}

SeriesOracle sampled_series(const bt::BTFit& fit, int match_length, std::uint64_t seed) {
    return sampled_series(fit.strengths, match_length, seed);
}

Bracket replay_bracket_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open bracket file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("invalid bracket JSON in '" + path + "': " + e.what());
    }
    if (!j.contains("seeds") || !j.contains("series"))
        throw std::runtime_error("bracket file needs 'seeds' and 'series'");
    const int match_length = j.value("match_length", 99);
    std::vector<AgentId> seeds = j.at("seeds").get<std::vector<AgentId>>();
    std::vector<std::tuple<AgentId, AgentId, int, int>> series;
    for (const auto& s : j.at("series")) {
        series.emplace_back(s.at("a").get<AgentId>(), s.at("b").get<AgentId>(),
                            s.at("wins_a").get<int>(), s.at("wins_b").get<int>());
    }
    return run_bracket(seeds, match_length, recorded_series(series));
}

std::string render_bracket(const Bracket& bracket) {
    std::map<AgentId, int> seed_of;
    for (std::size_t k = 0; k < bracket.seeds.size(); ++k)
        seed_of[bracket.seeds[k]] = static_cast<int>(k) + 1;

    std::ostringstream out;
    out << "best-of-" << bracket.match_length << ", first to "
        << win_target(bracket.match_length) << " wins\n";
    for (const auto& round : bracket.rounds) {
        out << round_label(round.size()) << ":\n";
        for (const auto& s : round) {
            out << "  [" << seed_of.at(s.a) << "] " << s.a << " " << s.wins_a << "-" << s.wins_b
                << " [" << seed_of.at(s.b) << "] " << s.b << "  -> " << s.winner << "\n";
        }
    }
    out << "champion: " << bracket.champion << " (seed " << seed_of.at(bracket.champion) << ")\n";
    return out.str();
}

}  // namespace pokerank::ladder
