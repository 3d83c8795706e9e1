// Acceptance gate: one line per criterion, nonzero exit if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <httplib.h>

#include "pokerank/analysis.hpp"
#include "pokerank/btfit.hpp"
#include "pokerank/core.hpp"
#include "pokerank/ladder.hpp"
#include "pokerank/leaderboard.hpp"
#include "pokerank/rating.hpp"
#include "pokerank/service.hpp"
#include "pokerank/statespace.hpp"

#ifndef FIXTURE_DIR
#error "FIXTURE_DIR must point at tests/fixtures"
#endif
#ifndef CLI_PATH
#error "CLI_PATH must point at the built command-line binary"
#endif

using namespace pokerank;

namespace {

namespace fs = std::filesystem;

int failures = 0;

void require(bool condition, const std::string& what) {
    if (!condition) throw std::runtime_error(what);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void criterion(int number, const std::string& label, double budget_seconds,
               const std::function<std::string()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    try {
        detail = body();
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && budget_seconds > 0 && elapsed > budget_seconds) {
        ok = false;
        detail += " [over the " + num(budget_seconds) + "s budget]";
    }
    std::printf("%s  criterion %d  %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", number, label.c_str(),
                elapsed, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::vector<ladder::SyntheticAgent> spread_agents(int count, std::vector<double>* displays) {
    std::vector<ladder::SyntheticAgent> agents;
    for (int i = 0; i < count; ++i) {
        const double display = 1200.0 + 600.0 * i / (count - 1);
        char id[32];
        std::snprintf(id, sizeof id, "agent-%02d", i + 1);
        agents.push_back({id, std::pow(10.0, (display - 1500.0) / 400.0)});
        if (displays) displays->push_back(display);
    }
    return agents;
}

void pair_matches(std::vector<MatchRecord>& out, const AgentId& a, const AgentId& b, int wins_a,
                  int wins_b) {
    auto push = [&](const AgentId& winner_side_a, const AgentId& loser_side_b) {
        MatchRecord m;
        m.id = "m" + std::to_string(out.size());
        m.ts_ms = 1000 * static_cast<std::int64_t>(out.size() + 1);
        m.format = "synthetic";
        m.a = winner_side_a;
        m.b = loser_side_b;
        m.result = MatchResult::AWins;
        out.push_back(m);
    };
    for (int k = 0; k < wins_a; ++k) push(a, b);
    for (int k = 0; k < wins_b; ++k) push(b, a);
}

// Exhaustive search over centered log-strengths (the last coordinate is the
// negated sum), refined coarse-to-fine down to the 1e-3 step.
std::vector<double> grid_mle(const bt::PairCounts& counts) {
    const std::size_t n = counts.agents.size();
    std::vector<double> best(n - 1, 0.0);
    auto loglik_at = [&](const std::vector<double>& free_logs) {
        std::vector<double> strengths(n);
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            strengths[i] = std::exp(free_logs[i]);
            sum += free_logs[i];
        }
        strengths[n - 1] = std::exp(-sum);
        return bt_loglik(counts, strengths);
    };

    const double widths[] = {5.0, 0.15, 0.015};
    const double steps[] = {0.1, 0.01, 0.001};
    for (int level = 0; level < 3; ++level) {
        const int radius = static_cast<int>(std::lround(widths[level] / steps[level]));
        std::vector<int> offset(n - 1, -radius);
        std::vector<double> probe(n - 1);
        std::vector<double> center = best;
        double best_ll = -std::numeric_limits<double>::infinity();
        while (true) {
            for (std::size_t i = 0; i + 1 < n; ++i)
                probe[i] = center[i] + offset[i] * steps[level];
            const double ll = loglik_at(probe);
            if (ll > best_ll) {
                best_ll = ll;
                best = probe;
            }
            std::size_t dim = 0;
            while (dim + 1 < n && ++offset[dim] > radius) offset[dim++] = -radius;
            if (dim + 1 >= n) break;
        }
    }
    std::vector<double> logs(best);
    double sum = 0.0;
    for (double v : best) sum += v;
    logs.push_back(-sum);
    return logs;
}

std::string run_cli(const std::string& args, int* exit_code) {
    const std::string command = std::string(CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot spawn: " + command);
    std::string output;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
    const int status = pclose(pipe);
    *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return output;
}

LeaderboardEntry board_entry(const AgentId& agent, double elo, double fhbt_display,
                             std::int64_t battles) {
    LeaderboardEntry e;
    e.agent = agent;
    e.elo = elo;
    e.battles = battles;
    if (fhbt_display > 0) {
        FhbtEstimate est;
        est.display_rating = fhbt_display;
        est.strength = std::pow(10.0, (fhbt_display - 1500.0) / 400.0);
        est.ci_low = fhbt_display;
        est.ci_high = fhbt_display;
        e.fhbt = est;
    }
    return e;
}

std::string exact_counts() {
    using namespace pokerank::statespace;
    require(ev_spread_count().value == 6137312896LL, "ev spread count");
    require(choose(133, 6).value == 6856577728LL, "C(133,6)");
    require(choose(69, 6).value == 119877472LL, "C(69,6)");
    require(choose(1329, 6).value == 7566741017135560LL, "C(1329,6)");
    require(choose(375, 4).value == 810855375LL, "C(375,4)");
    require(choose(151, 6).value == 14888600755LL, "C(151,6)");
    require(choose(164, 4).value == 29051001LL, "C(164,4)");

    const StateSpaceReport gen9 = team_space(FormatParameters::gen9());
    auto factor = [](const std::vector<NamedFactor>& factors, const std::string& name) {
        for (const auto& f : factors)
            if (f.name == name) return f.count.value;
        throw std::runtime_error("factor '" + name + "' missing");
    };
    require(factor(gen9.team_factors, "natures") == 85766121LL, "natures");
    require(factor(gen9.team_factors, "items") == 232653764952064LL, "items");
    require(factor(gen9.team_factors, "tera") == 47045881LL, "tera");

    require(volatile_count(Ruleset::Gen1OU).total.value == 142540800LL, "volatile total");
    require(side_condition_count(Ruleset::Gen9OU).value == 6298560LL, "side conditions");
    require(pseudo_weather_count().value == 3888, "pseudo-weather");
    return "13 integer identities";
}

std::string log10_totals() {
    using namespace pokerank::statespace;
    const double team1 = team_space(FormatParameters::gen1()).team_space_log10;
    const double team9 = team_space(FormatParameters::gen9()).team_space_log10;
    const double battle1 = battle_space(FormatParameters::gen1(), Ruleset::Gen1OU)
                               .battle_space_log10;
    const double battle9 = battle_space(FormatParameters::gen9(), Ruleset::Gen9OU)
                               .battle_space_log10;
    const double vgc = battle_space(FormatParameters::gen9(), Ruleset::Gen9VGC)
                           .battle_space_log10;
    require(std::abs(team1 - 57.0) <= 1.0, "team space ~10^57, got 10^" + num(team1));
    require(std::abs(team9 - 215.0) <= 1.0, "team space ~10^215, got 10^" + num(team9));
    require(std::abs(battle1 - 192.0) <= 1.0, "battle space ~10^192, got 10^" + num(battle1));
    require(std::abs(battle9 - 564.0) <= 1.0, "battle space ~10^564, got 10^" + num(battle9));
    require(std::abs(vgc - 622.0) <= 1.0, "battle space ~10^622, got 10^" + num(vgc));
    return "log10 totals " + num(team1) + " / " + num(team9) + " / " + num(battle1) + " / " +
           num(battle9) + " / " + num(vgc);
}

std::string bt_oracles() {
    bt::FitConfig pure;
    pure.phantom_regularization = false;

    std::vector<MatchRecord> two;
    pair_matches(two, "A", "B", 3, 1);
    const bt::BTFit closed = bt_fit(two, pure);
    require(std::abs(closed.strengths.at("A") / closed.strengths.at("B") - 3.0) <= 1e-9,
            "two-player strength ratio");
    require(std::abs(closed.strengths.at("A") - std::sqrt(3.0)) <= 1e-9,
            "two-player centered strength");

    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const std::size_t agents = seed <= 2 ? 3 : 4;
        std::mt19937_64 rng(seed * 7919);
        std::uniform_int_distribution<int> wins(1, 8);
        std::vector<MatchRecord> matches;
        std::vector<AgentId> names;
        for (std::size_t i = 0; i < agents; ++i) names.push_back(std::string(1, char('A' + i)));
        for (std::size_t i = 0; i < agents; ++i)
            for (std::size_t j = i + 1; j < agents; ++j)
                pair_matches(matches, names[i], names[j], wins(rng), wins(rng));

        const bt::BTFit fit = bt_fit(matches, pure);
        const bt::PairCounts counts = bt::PairCounts::from_matches(matches);
        const std::vector<double> grid_logs = grid_mle(counts);
        for (std::size_t i = 0; i < counts.agents.size(); ++i) {
            const double diff =
                std::abs(std::log(fit.strengths.at(counts.agents[i])) - grid_logs[i]);
            worst = std::max(worst, diff);
        }
    }
    require(worst <= 1e-2, "grid disagreement " + num(worst));

    bt::FitConfig traced;
    traced.track_loglik = true;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> n_agents(3, 8);
        std::uniform_int_distribution<int> n_games(60, 160);
        std::uniform_real_distribution<double> strength(0.5, 4.0);
        std::vector<ladder::SyntheticAgent> agents;
        const int n = n_agents(rng);
        for (int i = 0; i < n; ++i)
            agents.push_back({"agent-" + std::to_string(i), strength(rng)});
        const auto matches = ladder::simulate_ladder(
            agents, ladder::MatchmakingPolicy::uniform(), n_games(rng), seed + 500);
        const bt::BTFit fit = bt_fit(matches, traced);
        require(fit.loglik_trace.size() >= 1, "missing trace");
        for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
            const double prev = fit.loglik_trace[k - 1];
            require(fit.loglik_trace[k] >= prev - 1e-9 * std::max(1.0, std::abs(prev)),
                    "objective decreased on seed " + std::to_string(seed));
        }
    }
    return "closed form, grid search (worst " + num(worst) + "), 100 monotone traces";
}

std::string rating_recovery() {
    std::vector<double> true_displays;
    const auto agents = spread_agents(20, &true_displays);
    // 500 games per agent: each of the 5,000 sampled games involves two.
    const auto matches = ladder::simulate_ladder(agents, ladder::MatchmakingPolicy::uniform(),
                                                 5000, 2026);

    const rating::LadderReplay replay = rating::replay_ladder(matches);
    const bt::BTFit fit = bt::bt_bootstrap(matches, {}, 1000, 2027);

    std::vector<double> truth, glicko_values, gxe_values, fhbt_values;
    int covered = 0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const RatingState& state = replay.glicko.at(agents[i].id);
        truth.push_back(true_displays[i]);
        glicko_values.push_back(state.rating);
        gxe_values.push_back(rating::gxe(state.rating, state.deviation));
        fhbt_values.push_back(fit.display_rating.at(agents[i].id));
        const bt::ConfidenceInterval ci = fit.ci->at(agents[i].id);
        if (ci.low <= true_displays[i] && true_displays[i] <= ci.high) ++covered;
    }
    const double rho_glicko = analysis::spearman(glicko_values, truth);
    const double rho_gxe = analysis::spearman(gxe_values, truth);
    const double rho_fhbt = analysis::spearman(fhbt_values, truth);
    require(rho_glicko >= 0.9, "glicko spearman " + num(rho_glicko));
    require(rho_gxe >= 0.9, "gxe spearman " + num(rho_gxe));
    require(rho_fhbt >= 0.9, "fhbt spearman " + num(rho_fhbt));
    require(covered >= 16, "interval coverage " + std::to_string(covered) + "/20");
    return "spearman glicko " + num(rho_glicko) + ", gxe " + num(rho_gxe) + ", fhbt " +
           num(rho_fhbt) + "; coverage " + std::to_string(covered) + "/20";
}

std::string proximity_comparison() {
    const auto agents = spread_agents(20, nullptr);
    const auto matches = ladder::simulate_ladder(
        agents, ladder::MatchmakingPolicy::proximity(100.0), 5000, 2028);

    LeaderboardConfig config;
    config.bt_min_battles = 100;
    config.bootstrap_replicates = 100;
    config.bootstrap_seed = 2029;
    const auto reports = analysis::compare_raters(matches, config, {5000});
    require(reports.size() == 1 && reports[0].fhbt_available, "fhbt unavailable at 5000");

    double elo_bt = std::numeric_limits<double>::quiet_NaN();
    double glicko_bt = std::numeric_limits<double>::quiet_NaN();
    for (const auto& c : reports[0].correlations) {
        require(std::isfinite(c.rho) && std::abs(c.rho) <= 1.0, "correlation out of range");
        if (c.first == Metric::Elo && c.second == Metric::Fhbt) elo_bt = c.rho;
        if (c.first == Metric::Glicko && c.second == Metric::Fhbt) glicko_bt = c.rho;
    }
    require(std::isfinite(elo_bt), "elo/fhbt pair missing");
    require(std::isfinite(glicko_bt), "glicko/fhbt pair missing");

    const std::string text = analysis::render_comparison(reports);
    require(text.find("metric_a\tmetric_b\tspearman") != std::string::npos,
            "correlation table missing");
    require(text.find("elo\tfhbt") != std::string::npos, "elo/fhbt row missing");
    require(text.find("glicko\tfhbt") != std::string::npos, "glicko/fhbt row missing");
    require(text.find("band_low\tband_high") != std::string::npos, "trajectory bands missing");
    return "reported elo-vs-bt " + num(elo_bt) + ", glicko-vs-bt " + num(glicko_bt) +
           " (no threshold)";
}

std::string competition_mechanics() {
    const ladder::Bracket gen1 =
        ladder::replay_bracket_file(std::string(FIXTURE_DIR) + "/gen1-bracket.json");
    require(gen1.champion == "PA-Agent", "expected champion PA-Agent");
    const ladder::SeriesResult& final1 = gen1.rounds.back().front();
    require(final1.wins_a == 50 && final1.wins_b == 28, "expected a 50-28 championship");

    const ladder::Bracket gen9 =
        ladder::replay_bracket_file(std::string(FIXTURE_DIR) + "/gen9-bracket.json");
    require(gen9.champion == "FoulPlay", "expected champion FoulPlay");
    const ladder::SeriesResult& final9 = gen9.rounds.back().front();
    require(final9.wins_a == 50 && final9.wins_b == 14, "expected a 50-14 championship");

    std::vector<LeaderboardEntry> board;
    for (int k = 0; k < 8; ++k)
        board.push_back(board_entry("agent-" + std::to_string(k), 1700.0 - 10 * k,
                                    1600.0 - 10 * k, 400));
    board.push_back(board_entry("undersampled", 1500.0, 1950.0, 249));
    auto qualifiers = ladder::select_qualifiers(board);
    require(qualifiers.size() == 8, "field size");
    for (const auto& q : qualifiers)
        require(q.agent != "undersampled", "249-battle agent must not qualify");
    int elo_slots = 0;
    for (const auto& q : qualifiers) elo_slots += q.slot == "elo" ? 1 : 0;
    require(elo_slots == 2, "elo slot count");

    board.back().battles = 250;
    qualifiers = ladder::select_qualifiers(board);
    require(qualifiers[0].agent == "undersampled" && qualifiers[0].slot == "fhbt",
            "250-battle batch leader must seed first");
    return "both recorded brackets replay; qualification rule verified";
}

std::string svd_properties() {
    std::mt19937_64 rng(4051);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto randn = [&](int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
        return m;
    };

    analysis::ScoreMatrix exact;
    for (int r = 0; r < 83; ++r) exact.row_names.push_back("model-" + std::to_string(r));
    for (int c = 0; c < 49; ++c) exact.col_names.push_back("bench-" + std::to_string(c));
    const Eigen::MatrixXd left = randn(83, 3);
    const Eigen::MatrixXd right = randn(3, 49);
    exact.values = left * right;

    const analysis::SvdVariance at_rank = analysis::svd_variance(exact, 3);
    require(std::abs(at_rank.total_variance_explained - 1.0) <= 1e-9,
            "rank-3 matrix not fully explained at k=3");
    for (const auto& [name, r2] : at_rank.per_column_r2)
        require(std::abs(r2 - 1.0) <= 1e-9, "column " + name + " not fully explained");

    analysis::ScoreMatrix noisy = exact;
    noisy.values = left * right + 0.05 * randn(83, 49);
    double previous = 0.0;
    for (int k = 1; k <= 8; ++k) {
        const analysis::SvdVariance v = analysis::svd_variance(noisy, k);
        require(v.total_variance_explained >= previous - 1e-12, "not monotone in k");
        require(v.total_variance_explained >= 0.0 && v.total_variance_explained <= 1.0,
                "total outside [0,1]");
        previous = v.total_variance_explained;
    }

    const analysis::SvdVariance v3 = analysis::svd_variance(noisy, 3);
    double weighted = 0.0, weight = 0.0;
    for (std::size_t c = 0; c < noisy.col_names.size(); ++c) {
        const double norm2 = noisy.values.col(static_cast<int>(c)).squaredNorm();
        weighted += norm2 * v3.per_column_r2.at(noisy.col_names[c]);
        weight += norm2;
    }
    require(std::abs(weighted / weight - v3.total_variance_explained) <= 1e-9,
            "per-column r2 does not aggregate to the total");

    // The published benchmark matrix is proprietary; the pipeline runs on a
    // synthetic stand-in of the same shape, so these numbers are only
    // reported, never compared against the published ones.
    std::vector<double> extra(83);
    const Eigen::MatrixXd mix = randn(3, 1);
    const Eigen::VectorXd column = left * mix + 0.05 * randn(83, 1);
    for (int r = 0; r < 83; ++r) extra[static_cast<std::size_t>(r)] = column(r);
    const analysis::ColumnProjection projection =
        analysis::project_new_column(noisy, 3, extra);
    require(projection.r2 >= 0.0 && projection.r2 <= 1.0, "projection r2 outside [0,1]");
    require(projection.predictions.size() == 83, "projection length");
    const double rho = analysis::spearman(projection.predictions, extra);
    require(std::isfinite(rho), "projection correlation not finite");
    return "rank identities hold; 83x49+1 stand-in: r2 " + num(projection.r2) + ", rho " +
           num(rho) + " (data-dependent)";
}

std::string service_durability() {
    const fs::path root = fs::temp_directory_path() /
                          ("pokerank-acceptance-" + std::to_string(::getpid()));
    struct Cleanup {
        fs::path path;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(path, ec);
        }
    } cleanup{root};

    service::ServiceConfig base;
    base.fhbt_refit_every = 0;
    base.snapshot_interval = 250;
    base.raters.bootstrap_replicates = 20;
    base.raters.bootstrap_seed = 77;
    base.raters.bt_min_battles = 1;

    const auto agents = spread_agents(8, nullptr);
    const auto matches = ladder::simulate_ladder(agents, ladder::MatchmakingPolicy::uniform(),
                                                 1000, 2030, "gen1ou");

    service::ServiceConfig config_a = base;
    config_a.data_dir = (root / "uninterrupted").string();
    service::LeaderboardService uninterrupted(config_a);
    for (const auto& m : matches)
        require(uninterrupted.submit(m).status ==
                    service::LeaderboardService::AcceptStatus::Accepted,
                "rejected " + m.id);
    const std::string render_a = render_leaderboard(uninterrupted.leaderboard("gen1ou"));

    service::ServiceConfig config_b = base;
    config_b.data_dir = (root / "interrupted").string();
    {
        service::LeaderboardService first(config_b);
        for (std::size_t k = 0; k < 473; ++k)
            require(first.submit(matches[k]).status ==
                        service::LeaderboardService::AcceptStatus::Accepted,
                    "rejected " + matches[k].id);
    }  // restart boundary: the log is flushed per accepted match

    service::LeaderboardService second(config_b);
    require(second.match_count("gen1ou") == 473, "recovered count");
    for (std::size_t k = 473; k < matches.size(); ++k)
        require(second.submit(matches[k]).status ==
                    service::LeaderboardService::AcceptStatus::Accepted,
                "rejected " + matches[k].id);

    const auto server = service::start_server(second, "127.0.0.1", 0);
    httplib::Client client("127.0.0.1", server->port());
    for (std::size_t k = 100; k < 1000; k += 37) {
        const auto res = client.Post("/matches", format_match_line(matches[k]), "text/plain");
        require(res && res->status == 200 &&
                    res->body.find("\"duplicate\"") != std::string::npos,
                "resubmission of " + matches[k].id + " was not idempotent");
    }
    require(second.match_count("gen1ou") == 1000, "duplicates changed the count");

    const std::string render_b = render_leaderboard(second.leaderboard("gen1ou"));
    require(render_a == render_b, "interrupted and uninterrupted runs diverge");

    int exit_code = -1;
    const std::string cli = run_cli("rate --input " + (fs::path(config_b.data_dir) /
                                                       "gen1ou.log").string() +
                                        " --min-battles 1 --replicates 20 --seed 77",
                                    &exit_code);
    require(exit_code == 0, "rate exited " + std::to_string(exit_code));
    require(cli == render_b, "offline rate differs from the served leaderboard");
    return "1000 matches, restart at 473, 25 duplicate posts, offline/online byte equality";
}

}  // namespace

int main() {
    criterion(1, "exact combinatorial counts", 1.0, exact_counts);
    criterion(2, "team and battle log10 totals", 1.0, log10_totals);
    criterion(3, "bradley-terry oracle equivalence", 0.0, bt_oracles);
    criterion(4, "rating recovery on a seeded ladder", 60.0, rating_recovery);
    criterion(5, "proximity-pairing comparison report", 0.0, proximity_comparison);
    criterion(6, "qualification and bracket replay", 0.0, competition_mechanics);
    criterion(7, "svd variance properties and stand-in pipeline", 0.0, svd_properties);
    criterion(8, "service durability and offline equality", 0.0, service_durability);
    std::printf(
        "DECLARED  criterion 9  real-ladder results need the proprietary match histories; "
        "this artifact ships the machinery, synthetic fixtures, and recorded brackets only\n");
    return failures == 0 ? 0 : 1;
}
