#include "pokerank/service.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>

#include <httplib.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace pokerank::service {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kFnvPrime = 0x00000100000001b3ULL;
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr int kSnapshotVersion = 1;

// Format names double as log file names, so they are restricted to
// filesystem-safe characters.
bool format_name_ok(const std::string& format) {
    if (format.empty()) return false;
    for (char c : format) {
        const bool ok = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') ||
                        (c >= 'a' && c <= 'z') || c == '-' || c == '_';
        if (!ok) return false;
    }
    return true;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

bool key_less(const MatchRecord& x, const MatchRecord& y) {
    return std::tie(x.ts_ms, x.id) < std::tie(y.ts_ms, y.id);
}

// The log stores the TSV form; a record whose fields TSV cannot carry falls
// back to the JSON form, which ingestion also accepts line by line.
std::string log_line(const MatchRecord& m) {
    try {
        return format_match_line(m);
    } catch (const std::exception&) {
        return format_match_json(m);
    }
}

std::optional<std::string> record_problem(const MatchRecord& m) {
    if (m.id.empty()) return "match id must be nonempty";
    if (!format_name_ok(m.format)) return "format '" + m.format + "' must match [A-Za-z0-9_-]+";
    if (m.a.empty() || m.b.empty()) return "agent names must be nonempty";
    if (m.a == m.b) return "a match needs two distinct agents";
    return std::nullopt;
}

ordered_json state_to_json(const RatingState& s) {
    ordered_json j;
    j["rating"] = s.rating;
    j["deviation"] = s.deviation;
    j["games"] = s.games;
    j["wins"] = s.wins;
    j["losses"] = s.losses;
    j["ties"] = s.ties;
    return j;
}

RatingState state_from_json(const ordered_json& j) {
    RatingState s;
    s.rating = j.at("rating").get<double>();
    s.deviation = j.at("deviation").get<double>();
    s.games = j.at("games").get<std::int64_t>();
    s.wins = j.at("wins").get<std::int64_t>();
    s.losses = j.at("losses").get<std::int64_t>();
    s.ties = j.at("ties").get<std::int64_t>();
    return s;
}

ordered_json states_to_json(const std::map<AgentId, RatingState>& states) {
    ordered_json j = ordered_json::object();
    for (const auto& [agent, state] : states) j[agent] = state_to_json(state);
    return j;
}

std::map<AgentId, RatingState> states_from_json(const ordered_json& j) {
    std::map<AgentId, RatingState> states;
    for (auto it = j.begin(); it != j.end(); ++it) states[it.key()] = state_from_json(it.value());
    return states;
}

// A degenerate ladder (too few rateable agents, or a bootstrap with too many
// failed replicates) serves entries without the FH-BT column rather than
// failing the write path.
bt::BTFit run_fit(const ServiceConfig& config, const std::vector<MatchRecord>& matches) {
    try {
        if (config.raters.bootstrap_replicates > 0)
            return bt::bt_bootstrap(matches, config.raters.bt, config.raters.bootstrap_replicates,
                                    config.raters.bootstrap_seed);
        return bt::bt_fit(matches, config.raters.bt);
    } catch (const std::exception&) {
        return {};
    }
}

std::vector<LeaderboardEntry> ordered_entries(const std::map<AgentId, RatingState>& elo,
                                              const std::map<AgentId, RatingState>& glicko,
                                              const bt::BTFit& fit,
                                              const LeaderboardConfig& raters,
                                              std::optional<Metric> order) {
    std::vector<LeaderboardEntry> entries = assemble_leaderboard(elo, glicko, fit, raters);
    if (order && *order != raters.primary) {
        const Metric by = *order;
        std::sort(entries.begin(), entries.end(),
                  [by](const LeaderboardEntry& x, const LeaderboardEntry& y) {
                      const double vx = metric_value(x, by);
                      const double vy = metric_value(y, by);
                      if (vx != vy) return vx > vy;
                      if (x.glicko_rating != y.glicko_rating)
                          return x.glicko_rating > y.glicko_rating;
                      return x.agent < y.agent;
                  });
    }
    return entries;
}

}  // namespace

std::uint64_t fnv1a64(const char* data, std::size_t size, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= static_cast<unsigned char>(data[i]);
        hash *= kFnvPrime;
    }
    return hash;
}

struct LeaderboardService::FormatLadder {
    std::string format;
    fs::path log_path;
    fs::path snapshot_path;
    std::ofstream log;
    std::uint64_t log_hash = kFnvOffset;
    std::size_t accepted = 0;
    std::map<std::string, MatchRecord> by_id;
    std::vector<MatchRecord> sorted;  // ascending (ts_ms, id)
    std::map<AgentId, RatingState> elo;
    std::map<AgentId, RatingState> glicko;
    bt::BTFit fit;              // empty until the first refit boundary
    std::size_t fit_count = 0;  // accepted count the fit was computed at
};

LeaderboardService::LeaderboardService(ServiceConfig config) : config_(std::move(config)) {
    if (config_.data_dir.empty()) throw std::invalid_argument("data_dir must be set");
    if (config_.fhbt_refit_every < 0 || config_.snapshot_interval < 0)
        throw std::invalid_argument("refit and snapshot intervals must be >= 0");
    config_.raters.elo.validate();
    config_.raters.glicko.validate();
    fs::create_directories(config_.data_dir);

    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".log")
            logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& path : logs) {
        const std::string format = path.stem().string();
        if (!format_name_ok(format))
            throw std::runtime_error("log file " + path.string() +
                                     " does not name a format ([A-Za-z0-9_-]+)");
        recover(format, path.string());
    }
}

LeaderboardService::~LeaderboardService() = default;

LeaderboardService::FormatLadder& LeaderboardService::ladder_for(const std::string& format) {
    for (const auto& ladder : ladders_)
        if (ladder->format == format) return *ladder;
    auto ladder = std::make_unique<FormatLadder>();
    ladder->format = format;
    ladder->log_path = fs::path(config_.data_dir) / (format + ".log");
    ladder->snapshot_path = fs::path(config_.data_dir) / (format + ".snapshot.json");
    ladder->log.open(ladder->log_path, std::ios::binary | std::ios::app);
    if (!ladder->log)
        throw std::runtime_error("cannot open " + ladder->log_path.string() + " for append");
    ladders_.push_back(std::move(ladder));
    return *ladders_.back();
}

const LeaderboardService::FormatLadder& LeaderboardService::existing_ladder(
    const std::string& format) const {
    for (const auto& ladder : ladders_)
        if (ladder->format == format) return *ladder;
    throw std::out_of_range("unknown format '" + format + "'");
}

void LeaderboardService::recover(const std::string& format, const std::string& log_path) {
    RecoveryNote note;
    note.format = format;

    std::string content;
    {
        std::ifstream in(log_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + log_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        content = buf.str();
    }

    // Bytes after the last newline are a torn final write; drop them from
    // the file so the next append starts on a line boundary.
    const std::size_t last_newline = content.find_last_of('\n');
    const std::size_t complete = last_newline == std::string::npos ? 0 : last_newline + 1;
    if (complete < content.size()) {
        note.warnings.push_back("dropped " + std::to_string(content.size() - complete) +
                                " torn byte(s) after the last complete line");
        content.resize(complete);
        fs::resize_file(log_path, complete);
    }

    std::vector<MatchRecord> records;    // file order
    std::vector<std::size_t> line_ends;  // byte offset just past each line's newline
    std::size_t line_start = 0;
    std::size_t line_no = 0;
    while (line_start < content.size()) {
        const std::size_t nl = content.find('\n', line_start);
        const std::string line = content.substr(line_start, nl - line_start);
        ++line_no;
        try {
            records.push_back(parse_match_line(line));
        } catch (const std::exception& e) {
            // An unparseable final line is a torn write that happened to end
            // in a newline; anything earlier means the log itself is damaged
            // and silently dropping it would rewrite history.
            if (nl + 1 == content.size()) {
                note.warnings.push_back("dropped unparseable final line " +
                                        std::to_string(line_no) + ": " + e.what());
                content.resize(line_start);
                fs::resize_file(log_path, line_start);
                break;
            }
            throw std::runtime_error(log_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        line_ends.push_back(nl + 1);
        line_start = nl + 1;
    }

    auto ladder = std::make_unique<FormatLadder>();
    ladder->format = format;
    ladder->log_path = log_path;
    ladder->snapshot_path = fs::path(config_.data_dir) / (format + ".snapshot.json");
    ladder->log_hash = fnv1a64(content.data(), content.size());
    ladder->accepted = records.size();

    for (std::size_t i = 0; i < records.size(); ++i) {
        const MatchRecord& m = records[i];
        if (m.format != format)
            throw std::runtime_error(log_path + ": line " + std::to_string(i + 1) +
                                     " belongs to format '" + m.format + "'");
        if (!ladder->by_id.emplace(m.id, m).second)
            throw std::runtime_error(log_path + ": duplicate match id '" + m.id + "'");
    }

    ladder->sorted = records;
    std::sort(ladder->sorted.begin(), ladder->sorted.end(), key_less);

    const rating::LadderConfigs configs{config_.raters.elo, config_.raters.glicko,
                                        config_.raters.gxe};

    bool folded = false;
    if (fs::exists(ladder->snapshot_path)) {
        try {
            std::ifstream in(ladder->snapshot_path, std::ios::binary);
            const ordered_json j = ordered_json::parse(in);
            const std::size_t n = j.at("match_count").get<std::size_t>();
            if (j.at("version").get<int>() != kSnapshotVersion ||
                j.at("format").get<std::string>() != format) {
                note.warnings.push_back("ignored snapshot: wrong version or format");
            } else if (n > records.size()) {
                note.warnings.push_back("ignored snapshot: ahead of the log (" +
                                        std::to_string(n) + " > " +
                                        std::to_string(records.size()) + " matches)");
            } else {
                const std::size_t prefix_bytes = n == 0 ? 0 : line_ends[n - 1];
                if (hex64(fnv1a64(content.data(), prefix_bytes)) !=
                    j.at("log_hash").get<std::string>()) {
                    note.warnings.push_back("ignored snapshot: log prefix hash mismatch");
                } else {
                    // The snapshot states are the fold over the sorted prefix.
                    // Folding the suffix on top reproduces the full fold only
                    // when every suffix key sorts after the whole prefix.
                    std::vector<MatchRecord> suffix(records.begin() + n, records.end());
                    std::sort(suffix.begin(), suffix.end(), key_less);
                    bool clean_suffix = true;
                    if (n > 0 && !suffix.empty()) {
                        const auto max_prefix =
                            std::max_element(records.begin(), records.begin() + n, key_less);
                        clean_suffix = key_less(*max_prefix, suffix.front());
                    }
                    if (!clean_suffix) {
                        note.warnings.push_back(
                            "snapshot verified but unusable: suffix matches sort before its "
                            "horizon; replaying the full log");
                    } else {
                        auto elo = states_from_json(j.at("elo"));
                        auto glicko = states_from_json(j.at("glicko"));
                        ladder->elo = std::move(elo);
                        ladder->glicko = std::move(glicko);
                        for (const auto& m : suffix)
                            rating::step_states(ladder->elo, ladder->glicko, m, configs);
                        folded = true;
                        note.used_snapshot = true;
                    }
                }
            }
        } catch (const std::exception& e) {
            note.warnings.push_back(std::string("ignored snapshot: ") + e.what());
        }
    }

    if (!folded) {
        rating::LadderReplay replay = rating::replay_ladder(ladder->sorted, configs);
        ladder->elo = std::move(replay.elo);
        ladder->glicko = std::move(replay.glicko);
        note.full_replay = !records.empty();
    }

    // Reproduce the fit the live service had at the last refit boundary; the
    // bootstrap is seeded, so refitting the same prefix gives the same CIs.
    const std::size_t every =
        config_.fhbt_refit_every > 0 ? static_cast<std::size_t>(config_.fhbt_refit_every) : 0;
    const std::size_t boundary =
        every > 0 ? (ladder->accepted / every) * every : ladder->accepted;
    if (boundary > 0) {
        std::vector<MatchRecord> upto(records.begin(), records.begin() + boundary);
        std::sort(upto.begin(), upto.end(), key_less);
        ladder->fit = run_fit(config_, upto);
        ladder->fit_count = boundary;
    }

    ladder->log.open(ladder->log_path, std::ios::binary | std::ios::app);
    if (!ladder->log) throw std::runtime_error("cannot append to " + log_path);

    note.matches = ladder->accepted;
    recovery_.push_back(std::move(note));
    ladders_.push_back(std::move(ladder));
}

void LeaderboardService::refit(FormatLadder& ladder) const {
    ladder.fit = run_fit(config_, ladder.sorted);
    ladder.fit_count = ladder.accepted;
}

void LeaderboardService::write_snapshot(const FormatLadder& ladder) const {
    ordered_json j;
    j["version"] = kSnapshotVersion;
    j["format"] = ladder.format;
    j["match_count"] = ladder.accepted;
    j["log_hash"] = hex64(ladder.log_hash);
    j["elo"] = states_to_json(ladder.elo);
    j["glicko"] = states_to_json(ladder.glicko);

    fs::path tmp = ladder.snapshot_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
        out.flush();
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, ladder.snapshot_path);
}

LeaderboardService::AcceptResult LeaderboardService::submit(const MatchRecord& m) {
    if (auto problem = record_problem(m)) return {AcceptStatus::Invalid, *problem};

    std::unique_lock lock(mutex_);
    FormatLadder& ladder = ladder_for(m.format);
    if (auto it = ladder.by_id.find(m.id); it != ladder.by_id.end()) {
        if (it->second == m) return {AcceptStatus::Duplicate, {}};
        return {AcceptStatus::Conflict,
                "match id '" + m.id + "' is already recorded with a different payload"};
    }

    const std::string line = log_line(m) + '\n';
    ladder.log << line;
    ladder.log.flush();
    if (!ladder.log)
        throw std::runtime_error("append to " + ladder.log_path.string() + " failed");
    ladder.log_hash = fnv1a64(line.data(), line.size(), ladder.log_hash);

    ladder.by_id.emplace(m.id, m);
    const rating::LadderConfigs configs{config_.raters.elo, config_.raters.glicko,
                                        config_.raters.gxe};
    if (ladder.sorted.empty() || key_less(ladder.sorted.back(), m)) {
        ladder.sorted.push_back(m);
        rating::step_states(ladder.elo, ladder.glicko, m, configs);
    } else {
        // The fold order is (ts, id), not arrival order; a match landing
        // behind already-folded ones invalidates the incremental states.
        ladder.sorted.insert(
            std::upper_bound(ladder.sorted.begin(), ladder.sorted.end(), m, key_less), m);
        rating::LadderReplay replay = rating::replay_ladder(ladder.sorted, configs);
        ladder.elo = std::move(replay.elo);
        ladder.glicko = std::move(replay.glicko);
    }
    ++ladder.accepted;

    if (config_.fhbt_refit_every > 0 &&
        ladder.accepted % static_cast<std::size_t>(config_.fhbt_refit_every) == 0)
        refit(ladder);
    if (config_.snapshot_interval > 0 &&
        ladder.accepted % static_cast<std::size_t>(config_.snapshot_interval) == 0)
        write_snapshot(ladder);

    return {AcceptStatus::Accepted, {}};
}

LeaderboardService::AcceptResult LeaderboardService::submit_body(const std::string& body) {
    std::string line = body;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    MatchRecord m;
    try {
        m = parse_match_line(line);
    } catch (const std::exception& e) {
        return {AcceptStatus::Invalid, e.what()};
    }
    return submit(m);
}

std::vector<std::string> LeaderboardService::formats() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    out.reserve(ladders_.size());
    for (const auto& ladder : ladders_) out.push_back(ladder->format);
    std::sort(out.begin(), out.end());
    return out;
}

bool LeaderboardService::has_format(const std::string& format) const {
    std::shared_lock lock(mutex_);
    for (const auto& ladder : ladders_)
        if (ladder->format == format) return true;
    return false;
}

std::size_t LeaderboardService::match_count(const std::string& format) const {
    std::shared_lock lock(mutex_);
    return existing_ladder(format).accepted;
}

std::vector<LeaderboardEntry> LeaderboardService::leaderboard(const std::string& format,
                                                              std::optional<Metric> order) {
    {
        std::shared_lock lock(mutex_);
        const FormatLadder& ladder = existing_ladder(format);
        const bool stale = config_.fhbt_refit_every == 0 && ladder.fit_count != ladder.accepted;
        if (!stale)
            return ordered_entries(ladder.elo, ladder.glicko, ladder.fit, config_.raters, order);
    }
    std::unique_lock lock(mutex_);
    FormatLadder& ladder = ladder_for(format);
    if (config_.fhbt_refit_every == 0 && ladder.fit_count != ladder.accepted) refit(ladder);
    return ordered_entries(ladder.elo, ladder.glicko, ladder.fit, config_.raters, order);
}

std::vector<rating::TrajectoryRow> LeaderboardService::trajectory(const std::string& format,
                                                                  const AgentId& agent) const {
    std::shared_lock lock(mutex_);
    const FormatLadder& ladder = existing_ladder(format);
    if (ladder.elo.find(agent) == ladder.elo.end())
        throw std::out_of_range("unknown agent '" + agent + "' in format '" + format + "'");
    const rating::LadderConfigs configs{config_.raters.elo, config_.raters.glicko,
                                        config_.raters.gxe};
    rating::LadderReplay replay = rating::replay_ladder(ladder.sorted, configs);
    std::vector<rating::TrajectoryRow> rows;
    for (auto& row : replay.trajectory)
        if (row.agent == agent) rows.push_back(std::move(row));
    return rows;
}

HeadToHead LeaderboardService::h2h(const std::string& format) const {
    std::shared_lock lock(mutex_);
    const FormatLadder& ladder = existing_ladder(format);
    return head_to_head(ladder.sorted, agents_in(ladder.sorted));
}

void LeaderboardService::snapshot_now() {
    std::unique_lock lock(mutex_);
    for (const auto& ladder : ladders_) write_snapshot(*ladder);
}

namespace {

void send_json(httplib::Response& res, const ordered_json& body) {
    res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    send_json(res, ordered_json{{"error", message}});
}

ordered_json entry_to_json(const LeaderboardEntry& e) {
    ordered_json j;
    j["agent"] = e.agent;
    j["elo"] = e.elo;
    j["glicko_rating"] = e.glicko_rating;
    j["glicko_rd"] = e.glicko_rd;
    j["gxe"] = e.gxe;
    if (e.fhbt) {
        ordered_json f;
        f["strength"] = e.fhbt->strength;
        f["display_rating"] = e.fhbt->display_rating;
        f["ci_low"] = e.fhbt->ci_low;
        f["ci_high"] = e.fhbt->ci_high;
        f["has_ci"] = e.fhbt->has_ci;
        j["fhbt"] = std::move(f);
    } else {
        j["fhbt"] = nullptr;
    }
    j["win_rate"] = e.win_rate;
    j["battles"] = e.battles;
    j["wins"] = e.wins;
    j["losses"] = e.losses;
    j["ties"] = e.ties;
    return j;
}

void attach_routes(httplib::Server& srv, LeaderboardService& service) {
    srv.Post("/matches", [&service](const httplib::Request& req, httplib::Response& res) {
        LeaderboardService::AcceptResult outcome;
        try {
            outcome = service.submit_body(req.body);
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
            return;
        }
        using Status = LeaderboardService::AcceptStatus;
        switch (outcome.status) {
            case Status::Accepted: send_json(res, {{"status", "accepted"}}); return;
            case Status::Duplicate: send_json(res, {{"status", "duplicate"}}); return;
            case Status::Conflict: send_error(res, 409, outcome.diagnostic); return;
            case Status::Invalid: send_error(res, 400, outcome.diagnostic); return;
        }
    });

    srv.Get(R"(/formats/([^/]+)/leaderboard)",
            [&service](const httplib::Request& req, httplib::Response& res) {
                const std::string format = req.matches[1];
                if (!service.has_format(format)) {
                    send_error(res, 404, "unknown format '" + format + "'");
                    return;
                }
                std::optional<Metric> order;
                if (req.has_param("metric")) {
                    try {
                        order = metric_from_name(req.get_param_value("metric"));
                    } catch (const std::exception& e) {
                        send_error(res, 400, e.what());
                        return;
                    }
                }
                ordered_json body;
                body["format"] = format;
                body["match_count"] = service.match_count(format);
                body["entries"] = ordered_json::array();
                for (const auto& entry : service.leaderboard(format, order))
                    body["entries"].push_back(entry_to_json(entry));
                send_json(res, body);
            });

    srv.Get(R"(/formats/([^/]+)/agents/(.+)/trajectory)",
            [&service](const httplib::Request& req, httplib::Response& res) {
                const std::string format = req.matches[1];
                const std::string agent = req.matches[2];
                std::vector<rating::TrajectoryRow> rows;
                try {
                    rows = service.trajectory(format, agent);
                } catch (const std::out_of_range& e) {
                    send_error(res, 404, e.what());
                    return;
                }
                ordered_json body;
                body["format"] = format;
                body["agent"] = agent;
                body["rows"] = ordered_json::array();
                for (const auto& row : rows) {
                    ordered_json r;
                    r["match_index"] = row.match_index;
                    r["metric"] = row.metric;
                    r["rating"] = row.rating;
                    r["deviation"] = row.deviation;
                    body["rows"].push_back(std::move(r));
                }
                send_json(res, body);
            });

    srv.Get(R"(/formats/([^/]+)/h2h)",
            [&service](const httplib::Request& req, httplib::Response& res) {
                const std::string format = req.matches[1];
                if (!service.has_format(format)) {
                    send_error(res, 404, "unknown format '" + format + "'");
                    return;
                }
                const HeadToHead table = service.h2h(format);
                ordered_json body;
                body["format"] = format;
                body["agents"] = table.agents();
                ordered_json cells = ordered_json::object();
                for (const auto& row : table.agents()) {
                    ordered_json row_cells = ordered_json::object();
                    for (const auto& col : table.agents()) {
                        if (row == col) continue;
                        const H2HCell& cell = table.cell(row, col);
                        ordered_json c;
                        c["wins"] = cell.wins;
                        c["losses"] = cell.losses;
                        c["ties"] = cell.ties;
                        row_cells[col] = std::move(c);
                    }
                    cells[row] = std::move(row_cells);
                }
                body["cells"] = std::move(cells);
                send_json(res, body);
            });

    srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, {{"status", "ok"}});
    });
}

}  // namespace

struct ServerHandle::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

ServerHandle::ServerHandle() = default;

ServerHandle::~ServerHandle() { stop(); }

void ServerHandle::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int ServerHandle::port() const { return impl_ ? impl_->port : 0; }

std::unique_ptr<ServerHandle> start_server(LeaderboardService& service, const std::string& listen,
                                           int port) {
    std::unique_ptr<ServerHandle> handle(new ServerHandle());
    handle->impl_ = std::make_unique<ServerHandle::Impl>();
    ServerHandle::Impl& impl = *handle->impl_;
    attach_routes(impl.server, service);
    if (port == 0) {
        impl.port = impl.server.bind_to_any_port(listen);
        if (impl.port <= 0)
            throw std::runtime_error("cannot bind " + listen + " on an ephemeral port");
    } else {
        if (!impl.server.bind_to_port(listen, port))
            throw std::runtime_error("cannot bind " + listen + ":" + std::to_string(port));
        impl.port = port;
    }
    impl.thread = std::thread([&impl] { impl.server.listen_after_bind(); });
    impl.server.wait_until_ready();
    return handle;
}

int run_server(const ServiceConfig& config) {
    LeaderboardService service(config);
    for (const auto& note : service.recovery_notes()) {
        std::fprintf(stderr, "recovered %s: %zu matches%s\n", note.format.c_str(), note.matches,
                     note.used_snapshot ? " (snapshot + suffix)"
                                        : (note.full_replay ? " (full replay)" : ""));
        for (const auto& warning : note.warnings)
            std::fprintf(stderr, "  %s: %s\n", note.format.c_str(), warning.c_str());
    }

    httplib::Server server;
    attach_routes(server, service);
    int port = config.port;
    if (port == 0) {
        port = server.bind_to_any_port(config.listen);
        if (port <= 0) {
            std::fprintf(stderr, "cannot bind %s on an ephemeral port\n", config.listen.c_str());
            return 1;
        }
    } else if (!server.bind_to_port(config.listen, port)) {
        std::fprintf(stderr, "cannot bind %s:%d\n", config.listen.c_str(), port);
        return 1;
    }
    std::printf("listening on http://%s:%d\n", config.listen.c_str(), port);
    std::fflush(stdout);
    return server.listen_after_bind() ? 0 : 1;
}

}  // namespace pokerank::service
