#include "pokerank/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pokerank::statespace {

namespace {

// IV/EV slots per Pokémon (HP, Atk, Def, SpA, SpD, Spe).
constexpr int kStatSlots = 6;

BigInt ipow(const BigInt& base, int exp) {
    if (exp < 0) throw std::invalid_argument("negative exponent");
    BigInt result = 1;
    BigInt b = base;
    int e = exp;
    while (e > 0) {
        if (e & 1) result *= b;
        b *= b;
        e >>= 1;
    }
    return result;
}

void require_positive(int value, const char* name) {
    if (value <= 0) throw std::invalid_argument(std::string(name) + " must be positive");
}

struct FactorProduct {
    std::vector<NamedFactor> factors;
    BigInt total = 1;

    void add(std::string name, BigInt value) {
        total *= value;
        factors.push_back({std::move(name), big_count(std::move(value))});
    }
};

FactorProduct gen9_volatile_factors() {
    FactorProduct p;
    // Independent binary/counter volatiles; all can coexist on one active.
    p.add("confusion", 5);
    p.add("attract", 2);
    p.add("leech_seed", 2);
    p.add("substitute", 2);
    p.add("taunt", 5);
    p.add("encore", 4);
    p.add("disable", 5);
    p.add("torment", 2);
    p.add("perish_song", 4);
    p.add("aqua_ring", 2);
    p.add("ingrain", 2);
    p.add("focus_energy", 2);
    p.add("yawn", 3);
    p.add("curse", 2);
    p.add("no_retreat", 2);
    p.add("tar_shot", 2);
    p.add("salt_cure", 2);
    p.add("syrup_bomb", 4);
    p.add("imprison", 2);
    p.add("charge", 2);
    p.add("minimize", 2);
    p.add("defense_curl", 2);
    p.add("stockpile", 4);
    p.add("glaive_rush", 2);
    p.add("gastro_acid", 2);
    p.add("power_trick", 2);
    p.add("transform", 2);
    p.add("trapped", 2);
    p.add("throat_chop", 3);
    p.add("lock_on", 2);
    // Mutually exclusive groups: at most one member state applies at a time.
    p.add("move_locks", 19);
    p.add("protection", 9);
    p.add("grounding", 7);
    p.add("ability_volatiles", 10);
    p.add("one_turn_effects", 3);
    p.add("type_override", 20);
    p.add("type_addition", 3);
    p.add("choice_lock", 5);
    // Other per-active trackers.
    p.add("stall_counter", 2);
    p.add("partial_trapping", 8);
    p.add("flinch", 2);
    p.add("powder", 2);
    p.add("electrify", 2);
    return p;
}

FactorProduct gen1_volatile_factors() {
    FactorProduct p;
    p.add("confusion", 5);
    p.add("leech_seed", 2);
    p.add("substitute", 2);
    p.add("focus_energy", 2);
    p.add("disable", 29);
    p.add("reflect", 2);
    p.add("light_screen", 2);
    p.add("mist", 2);
    p.add("minimize", 2);
    p.add("transform", 2);
    p.add("rage", 2);
    p.add("move_locks", 12);
    p.add("partial_trapping", 5);
    p.add("residual_damage_counter", 16);
    p.add("flinch", 2);
    return p;
}

}  // namespace

double big_log10(const BigInt& value) {
    if (value <= 0) throw std::invalid_argument("log10 of a nonpositive count");
    const std::string digits = value.str();
    const std::size_t take = std::min<std::size_t>(digits.size(), 17);
    double leading = 0.0;
    for (std::size_t k = 0; k < take; ++k) leading = leading * 10.0 + (digits[k] - '0');
    return std::log10(leading) + static_cast<double>(digits.size() - take);
}

BigCount big_count(BigInt value) {
    const double lg = big_log10(value);
    return {std::move(value), lg};
}

BigCount choose(long long n, long long k) {
    if (n < 0 || k < 0 || k > n) throw std::invalid_argument("choose requires 0 <= k <= n");
    k = std::min(k, n - k);
    BigInt result = 1;
    for (long long t = 1; t <= k; ++t) {
        result *= n - k + t;
        result /= t;  // exact: t consecutive factors are divisible by t!
    }
    return big_count(std::move(result));
}

BigCount ev_spread_count(int stats, int budget_units, int cap_units) {
    require_positive(stats, "stats");
    if (budget_units < 0 || cap_units < 0)
        throw std::invalid_argument("budget and cap must be nonnegative");
    BigInt total = 0;
    for (int j = 0; j <= stats; ++j) {
        const long long remaining =
            static_cast<long long>(budget_units) - static_cast<long long>(j) * (cap_units + 1);
        if (remaining < 0) break;
        const BigInt term = choose(stats, j).value * choose(remaining + stats, stats).value;
        total += (j % 2 == 0) ? term : -term;
    }
    return big_count(std::move(total));
}

FormatParameters FormatParameters::gen9() {
    FormatParameters p;
    p.family = Family::Gen9;
    p.species_pool = 1329;
    p.max_movepool = 375;
    p.abilities_per_species = 3;
    p.iv_values = 32;
    p.ev_budget_units = 127;
    p.ev_cap_units = 63;
    p.natures_effective = 21;
    p.held_items = 248;
    p.tera_types = 19;
    p.modifiable_stats = 7;
    p.status_states = 9;
    return p;
}

FormatParameters FormatParameters::gen1() {
    FormatParameters p;
    p.family = Family::Gen1;
    p.species_pool = 151;
    p.max_movepool = 164;
    p.dv_choices = 2;
    p.modifiable_stats = 6;
    p.status_states = 27;
    return p;
}

std::string ruleset_name(Ruleset r) {
    switch (r) {
        case Ruleset::Gen1OU: return "gen1ou";
        case Ruleset::Gen9OU: return "gen9ou";
        case Ruleset::Gen9VGC: return "gen9vgc";
    }
    throw std::logic_error("unreachable");
}

Ruleset ruleset_from_name(const std::string& name) {
    if (name == "gen1ou") return Ruleset::Gen1OU;
    if (name == "gen9ou") return Ruleset::Gen9OU;
    if (name == "gen9vgc") return Ruleset::Gen9VGC;
    throw std::invalid_argument("unknown ruleset '" + name +
                                "' (expected gen1ou, gen9ou, or gen9vgc)");
}

StateSpaceReport team_space(const FormatParameters& format) {
    require_positive(format.species_pool, "species_pool");
    require_positive(format.max_movepool, "max_movepool");
    require_positive(format.team_size, "team_size");
    require_positive(format.moves_per_set, "moves_per_set");

    FactorProduct p;
    StateSpaceReport report;
    p.add("species", choose(format.species_pool, format.team_size).value);
    p.add("movesets",
          ipow(choose(format.max_movepool, format.moves_per_set).value, format.team_size));
    if (format.family == FormatParameters::Family::Gen9) {
        require_positive(format.abilities_per_species, "abilities_per_species");
        require_positive(format.iv_values, "iv_values");
        require_positive(format.natures_effective, "natures_effective");
        require_positive(format.held_items, "held_items");
        require_positive(format.tera_types, "tera_types");
        p.add("abilities", ipow(format.abilities_per_species, format.team_size));
        p.add("ivs", ipow(format.iv_values, kStatSlots * format.team_size));
        p.add("evs", ipow(ev_spread_count(kStatSlots, format.ev_budget_units,
                                          format.ev_cap_units)
                              .value,
                          format.team_size));
        p.add("natures", ipow(format.natures_effective, format.team_size));
        p.add("items", ipow(format.held_items, format.team_size));
        p.add("tera", ipow(format.tera_types, format.team_size));
        report.format_label = "gen9-team";
    } else {
        require_positive(format.dv_choices, "dv_choices");
        p.add("dvs", ipow(format.dv_choices, format.team_size));
        report.format_label = "gen1-team";
    }
    report.team_factors = std::move(p.factors);
    report.team_space = big_count(std::move(p.total));
    report.team_space_log10 = report.team_space->log10;
    return report;
}

VolatileBreakdown volatile_count(Ruleset ruleset) {
    FactorProduct p;
    switch (ruleset) {
        case Ruleset::Gen1OU:
            p = gen1_volatile_factors();
            break;
        case Ruleset::Gen9OU:
            p = gen9_volatile_factors();
            break;
        case Ruleset::Gen9VGC:
            p = gen9_volatile_factors();
            p.add("helping_hand", 2);
            p.add("redirection", 4);
            p.add("dragon_cheer", 2);
            p.add("ally_switch", 2);
            break;
    }
    VolatileBreakdown out;
    out.total = big_count(p.total);
    out.factors = std::move(p.factors);
    return out;
}

BigCount side_condition_count(Ruleset ruleset) {
    if (ruleset == Ruleset::Gen1OU) return big_count(1);  // no entry hazards or screens
    FactorProduct p;
    p.add("hazards", 2 * 4 * 3 * 2);  // Stealth Rock, Spikes 0-3, Toxic Spikes 0-2, Sticky Web
    p.add("screens", ipow(9, 3));     // Reflect / Light Screen / Aurora Veil, 0-8 turns each
    p.add("tailwind", 5);
    p.add("safeguard", 6);
    p.add("mist", 6);
    if (ruleset == Ruleset::Gen9VGC) {
        p.add("pledges", ipow(5, 3));  // Fire/Water/Grass Pledge, turn-counted
        p.add("quick_guard", 2);
        p.add("wide_guard", 2);
        p.add("crafty_shield", 2);
        p.add("mat_block", 2);
    }
    return big_count(p.total);
}

BigCount pseudo_weather_count() {
    // Trick Room, Gravity, Magic Room, Wonder Room (6 states each), Fairy Lock (3).
    return big_count(ipow(6, 4) * 3);
}

BigCount field_condition_count() {
    const int weather = 1 + 4 * 8 + 3;  // none; 4 turn-counted weathers; 3 permanent
    const int terrain = 1 + 4 * 8;
    return big_count(BigInt(weather) * terrain);
}

StateSpaceReport battle_space(const FormatParameters& format, Ruleset ruleset, bool include_pp) {
    const bool gen1 = format.family == FormatParameters::Family::Gen1;
    if (gen1 != (ruleset == Ruleset::Gen1OU))
        throw std::invalid_argument("format parameters do not match ruleset " +
                                    ruleset_name(ruleset));
    require_positive(format.hp_states, "hp_states");
    require_positive(format.stat_stages, "stat_stages");
    require_positive(format.modifiable_stats, "modifiable_stats");
    require_positive(format.status_states, "status_states");

    StateSpaceReport report = team_space(format);
    report.format_label = ruleset_name(ruleset);

    // VGC brings 4 of 6 (team preview); singles brings the full team.
    const int brought = ruleset == Ruleset::Gen9VGC ? 4 : format.team_size;
    const int actives_per_side = ruleset == Ruleset::Gen9VGC ? 2 : 1;
    const int pool = 2 * brought;               // both sides' brought Pokémon
    const int actives = 2 * actives_per_side;   // total active slots

    FactorProduct p;
    if (ruleset == Ruleset::Gen9VGC) {
        p.add("team_preview", ipow(choose(format.team_size, brought).value, 2));
        p.add("active_positions", ipow(brought * (brought - 1), 2));  // ordered left/right
    } else {
        p.add("active_positions", BigInt(format.team_size) * format.team_size);
    }
    p.add("hp", ipow(format.hp_states, pool));
    p.add("stat_stages", ipow(format.stat_stages, format.modifiable_stats * actives));
    p.add("status", ipow(format.status_states, pool));
    if (!gen1) {
        p.add("field", field_condition_count().value);
        p.add("side_conditions", ipow(side_condition_count(ruleset).value, 2));
        p.add("tera_state", ipow(1 + brought, 2));
        p.add("pseudo_weather", pseudo_weather_count().value);
        const BigInt per_slot = 2 * 3 * 2;  // Wish, Future Sight, Healing Wish
        p.add("slot_conditions", ipow(per_slot, actives));
        p.add("volatiles", ipow(volatile_count(ruleset).total.value, actives));
        p.add("item_ability_state", ipow(3, pool) * ipow(2, pool));
    } else {
        p.add("volatiles", ipow(volatile_count(ruleset).total.value, actives));
    }
    if (include_pp) p.add("pp", ipow(2, format.moves_per_set * pool));

    BigInt total = report.team_space->value * report.team_space->value * p.total;
    report.battle_factors = std::move(p.factors);
    report.battle_space = big_count(std::move(total));
    report.battle_space_log10 = report.battle_space->log10;
    return report;
}

double real_choose(double n, int k) {
    if (k < 0 || n < k) throw std::invalid_argument("real_choose requires n >= k >= 0");
    double result = 1.0;
    for (int t = 1; t <= k; ++t) result *= (n - (k - t)) / t;
    return result;
}

EffectiveSpaceEstimate effective_team_space(const UsageSummary& usage) {
    if (usage.species_pool < usage.team_size)
        throw std::invalid_argument("species pool smaller than a full team");
    EffectiveSpaceEstimate est;
    auto add = [&](const std::string& name, double log10_term) {
        est.terms.emplace_back(name, log10_term);
        est.total_log10 += log10_term;
    };
    add("species", std::log10(real_choose(usage.species_pool, usage.team_size)));
    const double n = usage.team_size;
    if (usage.moves)
        add("movesets", n * std::log10(real_choose(*usage.moves, usage.moves_per_set)));
    if (usage.items) add("items", n * std::log10(*usage.items));
    if (usage.abilities) add("abilities", n * std::log10(*usage.abilities));
    if (usage.spreads) add("spreads", n * std::log10(*usage.spreads));
    return est;
}

std::vector<std::pair<std::string, double>> usage_cdf(
    const std::vector<std::pair<std::string, double>>& usage) {
    double total = 0.0;
    for (const auto& [name, share] : usage) {
        if (share < 0) throw std::invalid_argument("negative usage for '" + name + "'");
        total += share;
    }
    if (total <= 0) throw std::invalid_argument("all usage fractions are zero");
    std::vector<std::pair<std::string, double>> sorted = usage;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    double cumulative = 0.0;
    for (auto& [name, share] : sorted) {
        cumulative += share / total;
        share = cumulative;
    }
    return sorted;
}

std::string render_report(const StateSpaceReport& report) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    auto emit = [&](const std::vector<NamedFactor>& factors) {
        for (const auto& f : factors) {
            out << "  " << f.name << "\t";
            const std::string digits = f.count.value.str();
            if (digits.size() <= 61)
                out << digits;
            else
                out << "~10^" << f.count.log10;
            out << "\tlog10=" << f.count.log10 << "\n";
        }
    };
    out << report.format_label << "\n";
    out << "team factors:\n";
    emit(report.team_factors);
    out << "team_space_log10\t" << report.team_space_log10 << "\t~10^"
        << std::llround(report.team_space_log10) << "\n";
    if (report.battle_space) {
        out << "battle factors (applied to team_space^2):\n";
        emit(report.battle_factors);
        out << "battle_space_log10\t" << report.battle_space_log10 << "\t~10^"
            << std::llround(report.battle_space_log10) << "\n";
    }
    return out.str();
}

}  // namespace pokerank::statespace
