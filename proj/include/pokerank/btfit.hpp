#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pokerank/core.hpp"

namespace pokerank::bt {

// Effective win counts per unordered agent pair. With the default tie
// weight of 0.5, wi + wj equals the number of matches the pair played.
struct PairCounts {
    struct Entry {
        std::size_t i;
        std::size_t j;  // i < j, indices into agents
        double wi;      // effective wins of agents[i] over agents[j]
        double wj;
    };

    std::vector<AgentId> agents;  // sorted, unique
    std::vector<Entry> entries;

    static PairCounts from_matches(const std::vector<MatchRecord>& matches,
                                   double tie_weight = 0.5);
};

struct FitConfig {
    // One virtual win and one virtual loss against a strength-1 phantom
    // opponent per agent. Keeps the comparison graph connected and every
    // estimate finite; the phantom is dropped from the output.
    bool phantom_regularization = true;
    double phantom_weight = 1.0;
    double tie_weight = 0.5;  // effective win credited to each side of a tie
    double tol = 1e-10;       // max relative strength change per sweep
    int max_iter = 10000;
    bool track_loglik = false;
};

struct ConfidenceInterval {
    double low;
    double high;
};

struct BTFit {
    std::map<AgentId, double> strengths;       // pi > 0, sum of logs = 0
    std::map<AgentId, double> display_rating;  // 1500 + 400*log10(pi)
    bool converged = false;
    int iterations = 0;
    std::optional<std::map<AgentId, ConfidenceInterval>> ci;  // display scale
    std::vector<std::string> warnings;
    std::vector<double> loglik_trace;  // per sweep, when track_loglik
    int failed_replicates = 0;
};

// Maximizes the paired-comparison likelihood P(i beats j) = pi_i/(pi_i+pi_j)
// by minorization-maximization. Throws on fewer than two rateable agents or
// on a disconnected comparison graph when regularization is off (the message
// names the components); agents with zero effective games are excluded with
// a warning.
BTFit bt_fit(const std::vector<MatchRecord>& matches, const FitConfig& config = {});
BTFit bt_fit_counts(const PairCounts& counts, const FitConfig& config = {});

// Refits on i.i.d. match resamples (with replacement, same cardinality) and
// attaches percentile 95% intervals on the display scale, widened if needed
// to contain the point estimate. Replicate r draws its randomness from
// (seed, r) only, so results are identical regardless of evaluation order.
// Throws if more than 10% of replicates fail to converge.
BTFit bt_bootstrap(const std::vector<MatchRecord>& matches, const FitConfig& fit_config,
                   int replicates, std::uint64_t seed);

// pi_i / (pi_i + pi_j). Computed on the name-ordered pair and complemented,
// so bt_predict(f,i,j) + bt_predict(f,j,i) == 1 holds exactly.
double bt_predict(const BTFit& fit, const AgentId& i, const AgentId& j);

// Log-likelihood of the given strengths on these counts.
double bt_loglik(const PairCounts& counts, const std::vector<double>& strengths);

// Linear-interpolation quantile of a sample (R type 7); p in [0,1].
double quantile(std::vector<double> sample, double p);

// Header plus one tab-separated row per agent: agent, strength,
// display_rating, ci_low, ci_high, games.
std::string render_fit(const BTFit& fit, const std::map<AgentId, std::int64_t>& games);

}  // namespace pokerank::bt
