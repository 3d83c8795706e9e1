#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pokerank/analysis.hpp"
#include "pokerank/btfit.hpp"
#include "pokerank/core.hpp"
#include "pokerank/ladder.hpp"
#include "pokerank/leaderboard.hpp"
#include "pokerank/rating.hpp"
#include "pokerank/service.hpp"
#include "pokerank/statespace.hpp"

namespace {

using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("short write to " + path);
}

json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return json::parse(in);
}

std::vector<pokerank::MatchRecord> load_matches(const std::string& path) {
    pokerank::IngestResult result = pokerank::ingest_matches_file(path);
    for (const auto& d : result.rejected)
        std::fprintf(stderr, "%s:%zu: %s\n", path.c_str(), d.line_no, d.message.c_str());
    return std::move(result.matches);
}

void apply_raters_json(const json& j, pokerank::LeaderboardConfig& c) {
    if (j.contains("elo")) {
        const json& e = j.at("elo");
        if (e.contains("initial")) c.elo.initial = e.at("initial").get<double>();
        if (e.contains("k")) c.elo.fallback_k = e.at("k").get<double>();
        if (e.contains("k_schedule")) {
            c.elo.k_schedule.clear();
            for (const json& band : e.at("k_schedule"))
                c.elo.k_schedule.push_back(
                    {band.at("below").get<double>(), band.at("k").get<double>()});
        }
    }
    if (j.contains("glicko")) {
        const json& g = j.at("glicko");
        if (g.contains("initial_rating")) c.glicko.initial_rating = g.at("initial_rating");
        if (g.contains("initial_rd")) c.glicko.initial_rd = g.at("initial_rd");
        if (g.contains("rd_floor")) c.glicko.rd_floor = g.at("rd_floor");
        if (g.contains("rd_ceiling")) c.glicko.rd_ceiling = g.at("rd_ceiling");
        if (g.contains("c")) c.glicko.c = g.at("c");
    }
    if (j.contains("gxe")) {
        const json& g = j.at("gxe");
        if (g.contains("reference_rating")) c.gxe.reference_rating = g.at("reference_rating");
        if (g.contains("reference_rd")) {
            if (g.at("reference_rd").is_null())
                c.gxe.reference_rd.reset();
            else
                c.gxe.reference_rd = g.at("reference_rd").get<double>();
        }
    }
    if (j.contains("bt")) {
        const json& b = j.at("bt");
        if (b.contains("phantom_regularization"))
            c.bt.phantom_regularization = b.at("phantom_regularization");
        if (b.contains("phantom_weight")) c.bt.phantom_weight = b.at("phantom_weight");
        if (b.contains("tie_weight")) c.bt.tie_weight = b.at("tie_weight");
        if (b.contains("tol")) c.bt.tol = b.at("tol");
        if (b.contains("max_iter")) c.bt.max_iter = b.at("max_iter");
    }
    if (j.contains("bt_min_battles")) c.bt_min_battles = j.at("bt_min_battles");
    if (j.contains("bootstrap_replicates")) c.bootstrap_replicates = j.at("bootstrap_replicates");
    if (j.contains("bootstrap_seed")) c.bootstrap_seed = j.at("bootstrap_seed");
    if (j.contains("primary"))
        c.primary = pokerank::metric_from_name(j.at("primary").get<std::string>());
}

void apply_service_json(const json& j, pokerank::service::ServiceConfig& c) {
    apply_raters_json(j, c.raters);
    if (!j.contains("service")) return;
    const json& s = j.at("service");
    if (s.contains("listen")) c.listen = s.at("listen").get<std::string>();
    if (s.contains("port")) c.port = s.at("port");
    if (s.contains("data_dir")) c.data_dir = s.at("data_dir").get<std::string>();
    if (s.contains("fhbt_refit_every")) c.fhbt_refit_every = s.at("fhbt_refit_every");
    if (s.contains("snapshot_interval")) c.snapshot_interval = s.at("snapshot_interval");
}

// Shared per-subcommand rater knobs; flags override the config file, which
// overrides the defaults.
struct RaterFlags {
    std::string config_path;
    int replicates = -1;
    long long seed = -1;
    long long min_battles = -1;
    std::string primary;
    bool no_phantom = false;
};

void add_rater_flags(CLI::App* sub, RaterFlags& f) {
    sub->add_option("--config", f.config_path, "JSON config file");
    sub->add_option("--replicates", f.replicates,
                    "bootstrap replicates for FH-BT intervals (0 = point estimates)");
    sub->add_option("--seed", f.seed, "bootstrap seed");
    sub->add_option("--min-battles", f.min_battles, "minimum battles for an FH-BT entry");
    sub->add_option("--primary", f.primary, "primary sort metric (elo|glicko|gxe|fhbt|winrate)");
    sub->add_flag("--no-phantom", f.no_phantom, "disable phantom regularization");
}

pokerank::LeaderboardConfig make_raters(const RaterFlags& f) {
    pokerank::LeaderboardConfig c;
    if (!f.config_path.empty()) apply_raters_json(load_json(f.config_path), c);
    if (f.replicates >= 0) c.bootstrap_replicates = f.replicates;
    if (f.seed >= 0) c.bootstrap_seed = static_cast<std::uint64_t>(f.seed);
    if (f.min_battles >= 0) c.bt_min_battles = f.min_battles;
    if (!f.primary.empty()) c.primary = pokerank::metric_from_name(f.primary);
    if (f.no_phantom) c.bt.phantom_regularization = false;
    return c;
}

std::map<pokerank::AgentId, std::int64_t> games_per_agent(
    const std::vector<pokerank::MatchRecord>& matches) {
    std::map<pokerank::AgentId, std::int64_t> games;
    for (const auto& m : matches) {
        ++games[m.a];
        ++games[m.b];
    }
    return games;
}

std::vector<pokerank::ladder::SyntheticAgent> load_strengths(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<pokerank::ladder::SyntheticAgent> agents;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected <agent>\\t<strength>");
        agents.push_back({line.substr(0, tab), std::stod(line.substr(tab + 1))});
    }
    return agents;
}

// Evenly spaced display ratings over [1200, 1800], converted to strengths.
std::vector<pokerank::ladder::SyntheticAgent> default_agents(int n) {
    std::vector<pokerank::ladder::SyntheticAgent> agents;
    for (int i = 0; i < n; ++i) {
        const double display = n <= 1 ? 1500.0 : 1200.0 + 600.0 * i / (n - 1);
        char id[32];
        std::snprintf(id, sizeof id, "agent-%02d", i + 1);
        agents.push_back({id, std::pow(10.0, (display - 1500.0) / 400.0)});
    }
    return agents;
}

std::vector<std::pair<std::string, double>> load_usage(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<std::pair<std::string, double>> usage;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected <name>\\t<share>");
        usage.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
    }
    return usage;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"ladder analytics: online raters, Bradley-Terry fits, brackets, state spaces"};
    app.require_subcommand(1);
    int exit_code = 0;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate and canonicalize a match log");
    std::string ingest_input, ingest_output;
    ingest->add_option("--input", ingest_input, "match log")->required();
    ingest->add_option("--output", ingest_output, "output path (default stdout)");
    ingest->callback([&] {
        std::string out;
        for (const auto& m : load_matches(ingest_input)) out += format_match_line(m) + "\n";
        write_text(ingest_output, out);
    });

    // rate
    auto* rate = app.add_subcommand("rate", "leaderboard from an offline match log");
    std::string rate_input, rate_output, rate_format;
    RaterFlags rate_flags;
    rate->add_option("--input", rate_input, "match log")->required();
    rate->add_option("--output", rate_output, "output path (default stdout)");
    rate->add_option("--format", rate_format, "keep only this format's matches");
    add_rater_flags(rate, rate_flags);
    rate->callback([&] {
        auto matches = load_matches(rate_input);
        if (!rate_format.empty()) matches = pokerank::filter_format(matches, rate_format);
        const auto entries = pokerank::build_leaderboard(matches, make_raters(rate_flags));
        write_text(rate_output, pokerank::render_leaderboard(entries));
    });

    // leaderboard
    auto* board = app.add_subcommand("leaderboard",
                                     "recover a service data directory and print its leaderboard");
    std::string board_dir, board_format, board_metric, board_output, board_config;
    int board_replicates = -1, board_refit = -1;
    long long board_seed = -1;
    board->add_option("--data-dir", board_dir, "service data directory")->required();
    board->add_option("--format", board_format, "format to print")->required();
    board->add_option("--metric", board_metric, "sort metric (elo|glicko|gxe|fhbt|winrate)");
    board->add_option("--output", board_output, "output path (default stdout)");
    board->add_option("--config", board_config, "JSON config file");
    board->add_option("--replicates", board_replicates, "bootstrap replicates for served CIs");
    board->add_option("--seed", board_seed, "bootstrap seed");
    board->add_option("--refit-every", board_refit, "FH-BT refit interval (0 = on demand)");
    board->callback([&] {
        pokerank::service::ServiceConfig config;
        if (!board_config.empty()) apply_service_json(load_json(board_config), config);
        config.data_dir = board_dir;
        if (board_replicates >= 0) config.raters.bootstrap_replicates = board_replicates;
        if (board_seed >= 0) config.raters.bootstrap_seed = static_cast<std::uint64_t>(board_seed);
        if (board_refit >= 0) config.fhbt_refit_every = board_refit;
        config.snapshot_interval = 0;  // reading must not touch the data directory
        pokerank::service::LeaderboardService service(config);
        std::optional<pokerank::Metric> order;
        if (!board_metric.empty()) order = pokerank::metric_from_name(board_metric);
        write_text(board_output,
                   pokerank::render_leaderboard(service.leaderboard(board_format, order)));
    });

    // compare
    auto* compare = app.add_subcommand("compare", "cross-metric correlations at log checkpoints");
    std::string compare_input, compare_output;
    std::vector<std::size_t> compare_checkpoints;
    RaterFlags compare_flags;
    compare->add_option("--input", compare_input, "match log")->required();
    compare->add_option("--checkpoints", compare_checkpoints, "prefix sizes (default: full log)")
        ->delimiter(',');
    compare->add_option("--output", compare_output, "output path (default stdout)");
    add_rater_flags(compare, compare_flags);
    compare->callback([&] {
        const auto matches = load_matches(compare_input);
        auto checkpoints = compare_checkpoints;
        if (checkpoints.empty() && !matches.empty()) checkpoints.push_back(matches.size());
        const auto reports =
            pokerank::analysis::compare_raters(matches, make_raters(compare_flags), checkpoints);
        write_text(compare_output, pokerank::analysis::render_comparison(reports));
    });

    // bootstrap
    auto* boot = app.add_subcommand("bootstrap", "FH-BT fit with bootstrap intervals");
    std::string boot_input, boot_output;
    int boot_replicates = 1000;
    std::uint64_t boot_seed = 0;
    RaterFlags boot_flags;
    boot->add_option("--input", boot_input, "match log")->required();
    boot->add_option("--output", boot_output, "output path (default stdout)");
    add_rater_flags(boot, boot_flags);
    boot->callback([&] {
        const auto matches = load_matches(boot_input);
        auto raters = make_raters(boot_flags);
        const int replicates =
            boot_flags.replicates >= 0 ? boot_flags.replicates : boot_replicates;
        const std::uint64_t seed =
            boot_flags.seed >= 0 ? static_cast<std::uint64_t>(boot_flags.seed) : boot_seed;
        const auto fit = pokerank::bt::bt_bootstrap(matches, raters.bt, replicates, seed);
        write_text(boot_output, pokerank::bt::render_fit(fit, games_per_agent(matches)));
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "synthetic ladder match log");
    std::string sim_output, sim_strengths, sim_policy = "uniform", sim_format = "synthetic";
    int sim_agents = 20;
    std::size_t sim_games = 5000;
    std::uint64_t sim_seed = 0;
    double sim_window = 100.0, sim_baseline_prob = 0.5;
    std::size_t sim_baseline_index = 0;
    sim->add_option("--agents", sim_agents, "synthetic agent count (ignored with --strengths)");
    sim->add_option("--strengths", sim_strengths, "agent strengths file (<agent>\\t<strength>)");
    sim->add_option("--games", sim_games, "total matches to sample");
    sim->add_option("--seed", sim_seed, "simulation seed");
    sim->add_option("--policy", sim_policy, "uniform|proximity|baseline");
    sim->add_option("--window", sim_window, "proximity window in Elo points");
    sim->add_option("--baseline-prob", sim_baseline_prob, "baseline game probability");
    sim->add_option("--baseline-index", sim_baseline_index, "baseline agent index");
    sim->add_option("--format", sim_format, "format label on emitted matches");
    sim->add_option("--output", sim_output, "output path (default stdout)");
    sim->callback([&] {
        const auto agents =
            sim_strengths.empty() ? default_agents(sim_agents) : load_strengths(sim_strengths);
        pokerank::ladder::MatchmakingPolicy policy;
        if (sim_policy == "uniform")
            policy = pokerank::ladder::MatchmakingPolicy::uniform();
        else if (sim_policy == "proximity")
            policy = pokerank::ladder::MatchmakingPolicy::proximity(sim_window);
        else if (sim_policy == "baseline")
            policy = pokerank::ladder::MatchmakingPolicy::baseline_mix(sim_baseline_prob,
                                                                       sim_baseline_index);
        else
            throw std::runtime_error("unknown policy '" + sim_policy + "'");
        pokerank::ladder::SimStats stats;
        const auto matches = pokerank::ladder::simulate_ladder(agents, policy, sim_games,
                                                               sim_seed, sim_format, &stats);
        std::string out;
        for (const auto& m : matches) out += format_match_line(m) + "\n";
        write_text(sim_output, out);
        if (policy.kind == pokerank::ladder::MatchmakingPolicy::Kind::Proximity)
            std::fprintf(stderr, "window widenings: %zu, uniform fallbacks: %zu\n",
                         stats.window_widenings, stats.uniform_fallbacks);
    });

    // qualify
    auto* qualify = app.add_subcommand("qualify", "tournament qualification from a match log");
    std::string qualify_input, qualify_output;
    int qualify_elo = 2, qualify_fhbt = 6;
    RaterFlags qualify_flags;
    qualify->add_option("--input", qualify_input, "match log")->required();
    qualify->add_option("--n-elo", qualify_elo, "Elo qualification slots");
    qualify->add_option("--n-fhbt", qualify_fhbt, "FH-BT qualification slots");
    qualify->add_option("--output", qualify_output, "output path (default stdout)");
    add_rater_flags(qualify, qualify_flags);
    qualify->callback([&] {
        const auto matches = load_matches(qualify_input);
        const auto raters = make_raters(qualify_flags);
        const auto entries = pokerank::build_leaderboard(matches, raters);
        const auto qualifiers = pokerank::ladder::select_qualifiers(
            entries, qualify_elo, qualify_fhbt, raters.bt_min_battles);
        std::string out = "seed\tagent\tslot\n";
        for (const auto& q : qualifiers)
            out += std::to_string(q.seed) + "\t" + q.agent + "\t" + q.slot + "\n";
        write_text(qualify_output, out);
    });

    // bracket
    auto* bracket = app.add_subcommand("bracket", "replay a recorded elimination bracket");
    std::string bracket_replay, bracket_output;
    bracket->add_option("--replay", bracket_replay, "recorded bracket JSON")->required();
    bracket->add_option("--output", bracket_output, "output path (default stdout)");
    bracket->callback([&] {
        const auto result = pokerank::ladder::replay_bracket_file(bracket_replay);
        write_text(bracket_output, pokerank::ladder::render_bracket(result));
    });

    // statespace
    auto* space = app.add_subcommand("statespace", "team and battle state-space report");
    std::string space_format, space_output;
    bool space_pp = false;
    space->add_option("--format", space_format, "gen1ou|gen9ou|gen9vgc")->required();
    space->add_flag("--pp", space_pp, "track per-move PP as a binary factor");
    space->add_option("--output", space_output, "output path (default stdout)");
    space->callback([&] {
        const auto ruleset = pokerank::statespace::ruleset_from_name(space_format);
        const auto params = ruleset == pokerank::statespace::Ruleset::Gen1OU
                                ? pokerank::statespace::FormatParameters::gen1()
                                : pokerank::statespace::FormatParameters::gen9();
        const auto report = pokerank::statespace::battle_space(params, ruleset, space_pp);
        write_text(space_output, pokerank::statespace::render_report(report));
    });

    // svd
    auto* svd = app.add_subcommand("svd", "truncated-SVD variance decomposition of a score matrix");
    std::string svd_matrix, svd_project, svd_output;
    int svd_k = 1;
    bool svd_center = false, svd_standardize = false;
    svd->add_option("--matrix", svd_matrix, "score matrix (models x benchmarks)")->required();
    svd->add_option("--k", svd_k, "retained components")->required();
    svd->add_flag("--center", svd_center, "subtract column means");
    svd->add_flag("--standardize", svd_standardize, "center and scale columns to unit variance");
    svd->add_option("--project", svd_project, "hold out this column and project it");
    svd->add_option("--output", svd_output, "output path (default stdout)");
    svd->callback([&] {
        const auto m = pokerank::analysis::ScoreMatrix::from_file(svd_matrix);
        const pokerank::analysis::SvdOptions options{svd_center, svd_standardize};
        std::ostringstream out;
        out.precision(17);
        if (svd_project.empty()) {
            const auto variance = pokerank::analysis::svd_variance(m, svd_k, options);
            out << "total_variance_explained\t" << variance.total_variance_explained << "\n";
            out << "column\tr2\n";
            for (const auto& [column, r2] : variance.per_column_r2)
                out << column << "\t" << r2 << "\n";
        } else {
            const std::size_t held = m.col_index(svd_project);
            pokerank::analysis::ScoreMatrix rest;
            rest.row_names = m.row_names;
            rest.values.resize(m.values.rows(), m.values.cols() - 1);
            std::vector<double> target(m.row_names.size());
            for (Eigen::Index r = 0; r < m.values.rows(); ++r)
                target[static_cast<std::size_t>(r)] = m.values(r, held);
            Eigen::Index w = 0;
            for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
                if (static_cast<std::size_t>(c) == held) continue;
                rest.col_names.push_back(m.col_names[static_cast<std::size_t>(c)]);
                rest.values.col(w++) = m.values.col(c);
            }
            const auto projection =
                pokerank::analysis::project_new_column(rest, svd_k, target, options);
            out << "column\t" << svd_project << "\n";
            out << "r2\t" << projection.r2 << "\n";
            out << "model\tprediction\n";
            for (std::size_t r = 0; r < projection.predictions.size(); ++r)
                out << m.row_names[r] << "\t" << projection.predictions[r] << "\n";
        }
        write_text(svd_output, out.str());
    });

    // usage-cdf
    auto* cdf = app.add_subcommand("usage-cdf", "cumulative usage share of the top-k entries");
    std::string cdf_input, cdf_output;
    cdf->add_option("--input", cdf_input, "usage file (<name>\\t<share>)")->required();
    cdf->add_option("--output", cdf_output, "output path (default stdout)");
    cdf->callback([&] {
        const auto rows = pokerank::statespace::usage_cdf(load_usage(cdf_input));
        std::ostringstream out;
        out.precision(17);
        out << "rank\tname\tcumulative_share\n";
        for (std::size_t i = 0; i < rows.size(); ++i)
            out << i + 1 << "\t" << rows[i].first << "\t" << rows[i].second << "\n";
        write_text(cdf_output, out.str());
    });

    // serve
    auto* serve = app.add_subcommand("serve", "run the leaderboard HTTP service");
    std::string serve_dir, serve_listen, serve_config;
    int serve_port = -1, serve_refit = -1, serve_snapshot = -1, serve_replicates = -1;
    long long serve_seed = -1;
    serve->add_option("--data-dir", serve_dir, "service data directory");
    serve->add_option("--listen", serve_listen, "listen address");
    serve->add_option("--port", serve_port, "listen port (0 = auto-pick)");
    serve->add_option("--config", serve_config, "JSON config file");
    serve->add_option("--refit-every", serve_refit, "FH-BT refit interval (0 = on demand)");
    serve->add_option("--snapshot-interval", serve_snapshot, "snapshot interval (0 = never)");
    serve->add_option("--replicates", serve_replicates, "bootstrap replicates for served CIs");
    serve->add_option("--seed", serve_seed, "bootstrap seed");
    serve->callback([&] {
        pokerank::service::ServiceConfig config;
        if (!serve_config.empty()) apply_service_json(load_json(serve_config), config);
        if (!serve_dir.empty()) config.data_dir = serve_dir;
        if (!serve_listen.empty()) config.listen = serve_listen;
        if (serve_port >= 0) config.port = serve_port;
        if (serve_refit >= 0) config.fhbt_refit_every = serve_refit;
        if (serve_snapshot >= 0) config.snapshot_interval = serve_snapshot;
        if (serve_replicates >= 0) config.raters.bootstrap_replicates = serve_replicates;
        if (serve_seed >= 0) config.raters.bootstrap_seed = static_cast<std::uint64_t>(serve_seed);
        exit_code = pokerank::service::run_server(config);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
