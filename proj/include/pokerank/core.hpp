#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pokerank {

// Agent names are exact byte strings; case is significant.
using AgentId = std::string;

enum class MatchResult { AWins, BWins, Tie };

// One decided game between two agents on a format ladder.
struct MatchRecord {
    std::string id;        // globally unique
    std::int64_t ts_ms;    // UTC milliseconds since the Unix epoch
    std::string format;    // ladder label, e.g. "gen1ou"
    AgentId a;
    AgentId b;
    MatchResult result;

    bool operator==(const MatchRecord&) const = default;
};

// Per-agent rating snapshot for one metric. deviation is 0 for metrics
// that define none (Elo, GXE, win rate).
struct RatingState {
    double rating = 0.0;
    double deviation = 0.0;
    std::int64_t games = 0;
    std::int64_t wins = 0;
    std::int64_t losses = 0;
    std::int64_t ties = 0;
};

struct FhbtEstimate {
    double strength;        // pi, sum of log-strengths is 0 across the fit
    double display_rating;  // 1500 + 400*log10(pi)
    double ci_low;          // display scale; equals display_rating when no CI
    double ci_high;
    bool has_ci = false;
};

struct LeaderboardEntry {
    AgentId agent;
    double elo = 0.0;
    double glicko_rating = 0.0;
    double glicko_rd = 0.0;
    double gxe = 0.0;                 // in [0,1]
    std::optional<FhbtEstimate> fhbt; // present iff battles >= configured minimum
    double win_rate = 0.0;            // (wins + ties/2) / games
    std::int64_t battles = 0;
    std::int64_t wins = 0;
    std::int64_t losses = 0;
    std::int64_t ties = 0;
};

struct H2HCell {
    std::int64_t wins = 0;
    std::int64_t losses = 0;
    std::int64_t ties = 0;
};

// Square win/loss/tie matrix; cell(i, j) is i's record against j.
// cell(i,j).wins == cell(j,i).losses, ties symmetric, diagonal empty.
class HeadToHead {
public:
    HeadToHead() = default;
    explicit HeadToHead(std::vector<AgentId> agents);

    const std::vector<AgentId>& agents() const { return agents_; }
    const H2HCell& cell(const AgentId& row, const AgentId& col) const;
    H2HCell& cell(const AgentId& row, const AgentId& col);
    bool has_agent(const AgentId& id) const { return index_.count(id) > 0; }

private:
    std::vector<AgentId> agents_;
    std::map<AgentId, std::size_t> index_;
    std::vector<std::vector<H2HCell>> cells_;
};

// --- timestamps ---------------------------------------------------------

// RFC3339 UTC, e.g. "2025-10-01T12:34:56Z" or "...56.123Z". Offsets other
// than Z / +00:00 / -00:00 and fractions finer than milliseconds are
// rejected so that serialization round-trips exactly. Throws std::runtime_error.
std::int64_t parse_rfc3339_utc(const std::string& text);

// Canonical form: no fraction when the millisecond part is zero.
std::string format_rfc3339_utc(std::int64_t ts_ms);

// --- match log line format ----------------------------------------------

// One record per line, either tab-separated
//   id <TAB> ts <TAB> format <TAB> a <TAB> b <TAB> result
// or a flat JSON object {"id","ts","format","a","b","result"},
// with result one of "a", "b", "tie". Lines starting with '{' are JSON.
MatchRecord parse_match_line(const std::string& line);
std::string format_match_line(const MatchRecord& m);  // canonical TSV
std::string format_match_json(const MatchRecord& m);

std::string to_token(MatchResult r);            // "a" / "b" / "tie"
MatchResult result_from_token(const std::string& token);

// --- ingestion ------------------------------------------------------------

struct IngestDiagnostic {
    std::size_t line_no = 0;  // 1-based position in the source
    std::string message;
};

struct IngestResult {
    std::vector<MatchRecord> matches;           // sorted by (ts, id), ids unique
    std::vector<IngestDiagnostic> rejected;     // malformed or invalid records
};

// Parses, validates, sorts by (timestamp, id) and collapses duplicate ids.
// Malformed records are rejected with per-line diagnostics; a duplicate id
// carrying a different payload is a hard error (std::runtime_error).
IngestResult ingest_matches(const std::vector<std::string>& lines);
IngestResult ingest_matches(std::istream& in);
IngestResult ingest_matches_file(const std::string& path);

// Same ordering/dedup/validation pass over already-parsed records.
IngestResult ingest_records(std::vector<MatchRecord> records);

// --- head to head ---------------------------------------------------------

// Counts matches among the given agents; pairs with no mutual matches keep
// empty cells. Matches involving agents outside the set are ignored.
HeadToHead head_to_head(const std::vector<MatchRecord>& matches,
                        const std::vector<AgentId>& agents);

// Convenience: every agent appearing in the match list.
std::vector<AgentId> agents_in(const std::vector<MatchRecord>& matches);

}  // namespace pokerank
