#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pokerank/btfit.hpp"
#include "pokerank/core.hpp"
#include "pokerank/leaderboard.hpp"
#include "pokerank/rating.hpp"

namespace pokerank::service {

struct ServiceConfig {
    std::string listen = "127.0.0.1";
    int port = 8787;
    std::string data_dir;
    LeaderboardConfig raters;     // bootstrap_replicates here sizes the served CIs
    int fhbt_refit_every = 100;   // accepted matches between FH-BT refits; 0 = refit on read
    int snapshot_interval = 1000; // accepted matches between snapshots; 0 = never

    ServiceConfig() { raters.bootstrap_replicates = 200; }
};

std::uint64_t fnv1a64(const char* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

struct RecoveryNote {
    std::string format;
    std::size_t matches = 0;
    bool used_snapshot = false;
    bool full_replay = false;
    std::vector<std::string> warnings;  // torn-line truncation, discarded snapshots
};

// Append-only per-format match store with online Elo/Glicko folding, periodic
// FH-BT refits, and snapshot/recovery. Served state is a pure function of the
// accepted matches: exactly what build_leaderboard computes on the log.
// Thread-safe: writes serialize per service, reads run concurrently.
class LeaderboardService {
public:
    explicit LeaderboardService(ServiceConfig config);
    ~LeaderboardService();
    LeaderboardService(const LeaderboardService&) = delete;
    LeaderboardService& operator=(const LeaderboardService&) = delete;

    enum class AcceptStatus { Accepted, Duplicate, Conflict, Invalid };
    struct AcceptResult {
        AcceptStatus status;
        std::string diagnostic;  // empty on Accepted/Duplicate
    };

    // Appends to the format's log (flushed before returning), then updates
    // online state. A resubmitted id with an identical payload is a no-op;
    // with a different payload it is a conflict.
    AcceptResult submit(const MatchRecord& m);
    AcceptResult submit_body(const std::string& body);  // parses, then submits

    std::vector<std::string> formats() const;
    bool has_format(const std::string& format) const;
    std::size_t match_count(const std::string& format) const;

    // Entries ordered by `order` (the configured primary metric when absent).
    // May run a pending on-demand refit. Throws std::out_of_range on an
    // unknown format.
    std::vector<LeaderboardEntry> leaderboard(const std::string& format,
                                              std::optional<Metric> order = std::nullopt);

    std::vector<rating::TrajectoryRow> trajectory(const std::string& format,
                                                  const AgentId& agent) const;
    HeadToHead h2h(const std::string& format) const;

    void snapshot_now();  // atomic write-temp-rename per format

    const std::vector<RecoveryNote>& recovery_notes() const { return recovery_; }
    const ServiceConfig& config() const { return config_; }

private:
    struct FormatLadder;

    FormatLadder& ladder_for(const std::string& format);        // creates if absent
    const FormatLadder& existing_ladder(const std::string& format) const;
    void recover(const std::string& format, const std::string& log_path);
    void refit(FormatLadder& ladder) const;
    void write_snapshot(const FormatLadder& ladder) const;

    ServiceConfig config_;
    std::vector<RecoveryNote> recovery_;
    std::vector<std::unique_ptr<FormatLadder>> ladders_;
    mutable std::shared_mutex mutex_;
};

// HTTP front end over a LeaderboardService:
//   POST /matches                                   submit one record
//   GET  /formats/{format}/leaderboard?metric=...   elo|glicko|gxe|fhbt|winrate
//   GET  /formats/{format}/agents/{id}/trajectory
//   GET  /formats/{format}/h2h
//   GET  /healthz
class ServerHandle {
public:
    ~ServerHandle();
    void stop();
    int port() const;  // actual bound port (useful with port 0 = auto-pick)

private:
    friend std::unique_ptr<ServerHandle> start_server(LeaderboardService&, const std::string&,
                                                      int);
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ServerHandle();
};

// Binds and serves in a background thread; throws if the bind fails.
std::unique_ptr<ServerHandle> start_server(LeaderboardService& service,
                                           const std::string& listen, int port);

// Blocking convenience wrapper: construct, bind, serve until interrupted.
int run_server(const ServiceConfig& config);

}  // namespace pokerank::service
