#include "pokerank/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pokerank {

namespace {

using ordered_json = nlohmann::ordered_json;

// Days from 1970-01-01 to y-m-d in the proleptic Gregorian calendar
// (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool is_leap(std::int64_t y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
    static const unsigned lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

[[noreturn]] void bad_timestamp(const std::string& text, const char* why) {
    throw std::runtime_error("invalid timestamp '" + text + "': " + why);
}

unsigned parse_digits(const std::string& s, std::size_t pos, std::size_t count,
                      const std::string& whole, const char* what) {
    unsigned value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = pos + i < s.size() ? s[pos + i] : '\0';
        if (c < '0' || c > '9') bad_timestamp(whole, what);
        value = value * 10 + static_cast<unsigned>(c - '0');
    }
    return value;
}

bool has_forbidden_tsv_chars(const std::string& field) {
    return field.find('\t') != std::string::npos || field.find('\n') != std::string::npos;
}

MatchRecord match_from_fields(const std::string& id, const std::string& ts,
                              const std::string& format, const std::string& a,
                              const std::string& b, const std::string& result) {
    if (id.empty()) throw std::runtime_error("empty match id");
    if (format.empty()) throw std::runtime_error("empty format");
    if (a.empty() || b.empty()) throw std::runtime_error("empty agent id");
    if (a == b) throw std::runtime_error("agent '" + a + "' matched against itself");
    MatchRecord m;
    m.id = id;
    m.ts_ms = parse_rfc3339_utc(ts);
    m.format = format;
    m.a = a;
    m.b = b;
    m.result = result_from_token(result);
    return m;
}

std::string json_string_field(const ordered_json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw std::runtime_error(std::string("missing field '") + key + "'");
    if (!it->is_string()) throw std::runtime_error(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

// --- timestamps -----------------------------------------------------------

std::int64_t parse_rfc3339_utc(const std::string& text) {
    // YYYY-MM-DDTHH:MM:SS[.fff](Z|+00:00|-00:00)
    if (text.size() < 20) bad_timestamp(text, "too short");
    const std::int64_t year = parse_digits(text, 0, 4, text, "bad year");
    if (text[4] != '-') bad_timestamp(text, "expected '-' after year");
    const unsigned month = parse_digits(text, 5, 2, text, "bad month");
    if (text[7] != '-') bad_timestamp(text, "expected '-' after month");
    const unsigned day = parse_digits(text, 8, 2, text, "bad day");
    if (text[10] != 'T' && text[10] != 't') bad_timestamp(text, "expected 'T' date/time separator");
    const unsigned hour = parse_digits(text, 11, 2, text, "bad hour");
    if (text[13] != ':') bad_timestamp(text, "expected ':' after hour");
    const unsigned minute = parse_digits(text, 14, 2, text, "bad minute");
    if (text[16] != ':') bad_timestamp(text, "expected ':' after minute");
    const unsigned second = parse_digits(text, 17, 2, text, "bad second");

    std::size_t pos = 19;
    unsigned millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        unsigned frac = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            frac = frac * 10 + static_cast<unsigned>(text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) bad_timestamp(text, "empty fractional second");
        if (digits > 3) bad_timestamp(text, "fractional seconds finer than milliseconds");
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        millis = frac;
    }

    const std::string offset = text.substr(pos);
    if (offset != "Z" && offset != "z" && offset != "+00:00" && offset != "-00:00")
        bad_timestamp(text, "offset must be Z or +00:00");

    if (month < 1 || month > 12) bad_timestamp(text, "month out of range");
    if (day < 1 || day > days_in_month(year, month)) bad_timestamp(text, "day out of range");
    if (hour > 23) bad_timestamp(text, "hour out of range");
    if (minute > 59) bad_timestamp(text, "minute out of range");
    if (second > 59) bad_timestamp(text, "second out of range");  // leap seconds not representable

    const std::int64_t days = days_from_civil(year, month, day);
    return ((days * 24 + hour) * 60 + minute) * 60000 + second * 1000 + millis;
}

std::string format_rfc3339_utc(std::int64_t ts_ms) {
    std::int64_t total_seconds = ts_ms / 1000;
    std::int64_t ms = ts_ms % 1000;
    if (ms < 0) {
        ms += 1000;
        total_seconds -= 1;
    }
    std::int64_t days = total_seconds / 86400;
    std::int64_t sod = total_seconds % 86400;
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    std::int64_t year;
    unsigned month, day;
    civil_from_days(days, year, month, day);

    char buf[32];
    const unsigned hour = static_cast<unsigned>(sod / 3600);
    const unsigned minute = static_cast<unsigned>(sod / 60 % 60);
    const unsigned second = static_cast<unsigned>(sod % 60);
    if (ms == 0) {
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02uZ",
                      static_cast<long long>(year), month, day, hour, minute, second);
    } else {
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02u.%03uZ",
                      static_cast<long long>(year), month, day, hour, minute, second,
                      static_cast<unsigned>(ms));
    }
    return buf;
}

// --- result tokens ----------------------------------------------------------

std::string to_token(MatchResult r) {
    switch (r) {
        case MatchResult::AWins: return "a";
        case MatchResult::BWins: return "b";
        case MatchResult::Tie: return "tie";
    }
    throw std::logic_error("unreachable");
}

MatchResult result_from_token(const std::string& token) {
    if (token == "a") return MatchResult::AWins;
    if (token == "b") return MatchResult::BWins;
    if (token == "tie") return MatchResult::Tie;
    throw std::runtime_error("invalid result '" + token + "' (expected a, b, or tie)");
}

// --- line format ------------------------------------------------------------

MatchRecord parse_match_line(const std::string& line) {
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start != std::string::npos && line[start] == '{') {
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw std::runtime_error("JSON record must be an object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            if (k != "id" && k != "ts" && k != "format" && k != "a" && k != "b" && k != "result")
                throw std::runtime_error("unknown field '" + k + "'");
        }
        return match_from_fields(json_string_field(j, "id"), json_string_field(j, "ts"),
                                 json_string_field(j, "format"), json_string_field(j, "a"),
                                 json_string_field(j, "b"), json_string_field(j, "result"));
    }

    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t tab = line.find('\t', pos);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
        fields.back().pop_back();
    if (fields.size() != 6)
        throw std::runtime_error("expected 6 tab-separated fields, got " +
                                 std::to_string(fields.size()));
    return match_from_fields(fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]);
}

std::string format_match_line(const MatchRecord& m) {
    for (const std::string* f : {&m.id, &m.format, &m.a, &m.b}) {
        if (has_forbidden_tsv_chars(*f))
            throw std::runtime_error("field contains tab or newline; use the JSON form");
    }
    std::string out;
    out += m.id;
    out += '\t';
    out += format_rfc3339_utc(m.ts_ms);
    out += '\t';
    out += m.format;
    out += '\t';
    out += m.a;
    out += '\t';
    out += m.b;
    out += '\t';
    out += to_token(m.result);
    return out;
}

std::string format_match_json(const MatchRecord& m) {
    ordered_json j;
    j["id"] = m.id;
    j["ts"] = format_rfc3339_utc(m.ts_ms);
    j["format"] = m.format;
    j["a"] = m.a;
    j["b"] = m.b;
    j["result"] = to_token(m.result);
    return j.dump();
}

// --- ingestion ----------------------------------------------------------------

IngestResult ingest_records(std::vector<MatchRecord> records) {
    IngestResult out;
    out.matches = std::move(records);
    std::stable_sort(out.matches.begin(), out.matches.end(),
                     [](const MatchRecord& x, const MatchRecord& y) {
                         if (x.ts_ms != y.ts_ms) return x.ts_ms < y.ts_ms;
                         return x.id < y.id;
                     });
    std::vector<MatchRecord> unique;
    unique.reserve(out.matches.size());
    std::map<std::string, std::size_t> seen;  // id -> index into unique
    for (auto& m : out.matches) {
        auto [it, inserted] = seen.emplace(m.id, unique.size());
        if (inserted) {
            unique.push_back(std::move(m));
        } else if (!(unique[it->second] == m)) {
            throw std::runtime_error("conflicting duplicate match id '" + m.id + "'");
        }
        // identical duplicate: keep the first copy
    }
    out.matches = std::move(unique);
    return out;
}

IngestResult ingest_matches(const std::vector<std::string>& lines) {
    std::vector<MatchRecord> records;
    IngestResult out;
    std::map<std::string, std::pair<std::size_t, MatchRecord>> by_id;  // id -> (line_no, record)
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        std::size_t content = line.find_first_not_of(" \t\r");
        if (content == std::string::npos) continue;  // blank line
        MatchRecord m;
        try {
            m = parse_match_line(line);
        } catch (const std::exception& e) {
            out.rejected.push_back({i + 1, e.what()});
            continue;
        }
        auto it = by_id.find(m.id);
        if (it != by_id.end()) {
            if (!(it->second.second == m)) {
                throw std::runtime_error(
                    "conflicting duplicate match id '" + m.id + "' at lines " +
                    std::to_string(it->second.first) + " and " + std::to_string(i + 1));
            }
            continue;
        }
        by_id.emplace(m.id, std::make_pair(i + 1, m));
        records.push_back(std::move(m));
    }
    IngestResult sorted = ingest_records(std::move(records));
    out.matches = std::move(sorted.matches);
    return out;
}

IngestResult ingest_matches(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return ingest_matches(lines);
}

IngestResult ingest_matches_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open match log '" + path + "'");
    return ingest_matches(in);
}

// --- head to head ---------------------------------------------------------------

HeadToHead::HeadToHead(std::vector<AgentId> agents) : agents_(std::move(agents)) {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        auto [it, inserted] = index_.emplace(agents_[i], i);
        if (!inserted) throw std::runtime_error("duplicate agent '" + agents_[i] + "'");
    }
    cells_.assign(agents_.size(), std::vector<H2HCell>(agents_.size()));
}

const H2HCell& HeadToHead::cell(const AgentId& row, const AgentId& col) const {
    auto r = index_.find(row);
    auto c = index_.find(col);
    if (r == index_.end()) throw std::out_of_range("unknown agent '" + row + "'");
    if (c == index_.end()) throw std::out_of_range("unknown agent '" + col + "'");
    return cells_[r->second][c->second];
}

H2HCell& HeadToHead::cell(const AgentId& row, const AgentId& col) {
    return const_cast<H2HCell&>(static_cast<const HeadToHead&>(*this).cell(row, col));
}

HeadToHead head_to_head(const std::vector<MatchRecord>& matches,
                        const std::vector<AgentId>& agents) {
    HeadToHead table(agents);
    for (const auto& m : matches) {
        if (!table.has_agent(m.a) || !table.has_agent(m.b)) continue;
        H2HCell& ab = table.cell(m.a, m.b);
        H2HCell& ba = table.cell(m.b, m.a);
        switch (m.result) {
            case MatchResult::AWins:
                ab.wins += 1;
                ba.losses += 1;
                break;
            case MatchResult::BWins:
                ab.losses += 1;
                ba.wins += 1;
                break;
            case MatchResult::Tie:
                ab.ties += 1;
                ba.ties += 1;
                break;
        }
    }
    return table;
}

std::vector<AgentId> agents_in(const std::vector<MatchRecord>& matches) {
    std::vector<AgentId> out;
    std::map<AgentId, bool> seen;
    for (const auto& m : matches) {
        if (seen.emplace(m.a, true).second) out.push_back(m.a);
        if (seen.emplace(m.b, true).second) out.push_back(m.b);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace pokerank
