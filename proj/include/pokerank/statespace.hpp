#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace pokerank::statespace {

using BigInt = boost::multiprecision::cpp_int;

// Exact count paired with its base-10 logarithm (derived from the exact
// value, accurate to well under 1e-9 relative).
struct BigCount {
    BigInt value;
    double log10 = 0.0;
};

BigCount big_count(BigInt value);  // throws on value <= 0
double big_log10(const BigInt& value);

BigCount choose(long long n, long long k);  // throws unless 0 <= k <= n

// Counts nonnegative integer solutions of x_1 + ... + x_stats <= budget with
// each x_i <= cap, by stars-and-bars with inclusion-exclusion over cap
// violations.
BigCount ev_spread_count(int stats = 6, int budget_units = 127, int cap_units = 63);

struct FormatParameters {
    enum class Family { Gen9, Gen1 };
    Family family = Family::Gen9;

    int species_pool = 0;
    int max_movepool = 0;
    int moves_per_set = 4;
    int abilities_per_species = 0;  // Gen 9 only
    int iv_values = 0;              // Gen 9 only; Gen 1 uses dv_choices
    int ev_budget_units = 0;
    int ev_cap_units = 0;
    int natures_effective = 0;
    int held_items = 0;
    int tera_types = 0;
    int dv_choices = 0;  // Gen 1 only
    int team_size = 6;
    int hp_states = 301;  // representative max HP 300, plus zero
    int stat_stages = 13;
    int modifiable_stats = 0;  // 7 in Gen 9 (incl. accuracy/evasion), 6 in Gen 1
    int status_states = 0;     // 9 in Gen 9, 27 in Gen 1

    static FormatParameters gen9();
    static FormatParameters gen1();
};

enum class Ruleset { Gen1OU, Gen9OU, Gen9VGC };

std::string ruleset_name(Ruleset r);
Ruleset ruleset_from_name(const std::string& name);  // gen1ou / gen9ou / gen9vgc

struct NamedFactor {
    std::string name;
    BigCount count;
};

struct StateSpaceReport {
    std::string format_label;
    std::vector<NamedFactor> team_factors;
    std::vector<NamedFactor> battle_factors;  // excludes the two team-space copies
    std::optional<BigCount> team_space;
    std::optional<BigCount> battle_space;
    double team_space_log10 = 0.0;
    double battle_space_log10 = 0.0;
};

// Team configuration space: all distinct full teams under the format's
// build rules, every factor reported by name.
StateSpaceReport team_space(const FormatParameters& format);

// Team space squared times the ruleset's in-battle factors (actives, HP,
// stat stages, status, field, side/slot conditions, Tera, pseudo-weather,
// volatiles, item/ability state). Move PP is excluded unless include_pp is
// set, which adds one binary tracker per carried move.
StateSpaceReport battle_space(const FormatParameters& format, Ruleset ruleset,
                              bool include_pp = false);

// Per-active volatile status combinations, one named factor per volatile or
// mutual-exclusion group.
struct VolatileBreakdown {
    std::vector<NamedFactor> factors;
    BigCount total;
};
VolatileBreakdown volatile_count(Ruleset ruleset);

BigCount side_condition_count(Ruleset ruleset);  // per side
BigCount pseudo_weather_count();
BigCount field_condition_count();  // weather x terrain

// --- effective metagame -----------------------------------------------------

// Average per-species option counts among options seen on at least 1% of
// teams; absent dimensions are treated as a single choice.
struct UsageSummary {
    double species_pool = 0.0;  // S
    std::optional<double> moves;
    std::optional<double> items;
    std::optional<double> abilities;
    std::optional<double> spreads;
    int team_size = 6;
    int moves_per_set = 4;
};

struct EffectiveSpaceEstimate {
    double total_log10 = 0.0;
    std::vector<std::pair<std::string, double>> terms;  // per-term log10
};

// log10 C(S,6) + 6*(log10 C(m,4) + log10 i + log10 a + log10 s) with
// real-valued binomials, so fractional average pool sizes are usable.
EffectiveSpaceEstimate effective_team_space(const UsageSummary& usage);

// Generalized binomial: n may be fractional, n >= k >= 0.
double real_choose(double n, int k);

// --- usage concentration ------------------------------------------------------

// Sorts by usage descending and returns the normalized cumulative share of
// the top k entries at each k. Throws if every fraction is zero.
std::vector<std::pair<std::string, double>> usage_cdf(
    const std::vector<std::pair<std::string, double>>& usage);

// Structured text: every named factor with its exact value (when at most 60
// digits) and log10, then the team/battle totals.
std::string render_report(const StateSpaceReport& report);

}  // namespace pokerank::statespace
