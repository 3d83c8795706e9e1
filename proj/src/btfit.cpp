#include "pokerank/btfit.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pokerank::bt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate_index) {
    return splitmix64(splitmix64(seed) + replicate_index);
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// Index space used by the solver: 0..n_real-1 are rateable agents, n_real is
// the phantom when regularization is on.
struct Problem {
    std::vector<AgentId> agents;
    std::vector<PairCounts::Entry> entries;
    std::size_t n_real = 0;
    bool phantom = false;
    std::size_t size() const { return n_real + (phantom ? 1 : 0); }
};

Problem build_problem(const PairCounts& counts, const FitConfig& config,
                      std::vector<std::string>& warnings) {
    std::vector<double> games(counts.agents.size(), 0.0);
    for (const auto& e : counts.entries) {
        games[e.i] += e.wi + e.wj;
        games[e.j] += e.wi + e.wj;
    }

    Problem p;
    std::vector<std::size_t> remap(counts.agents.size(), SIZE_MAX);
    for (std::size_t k = 0; k < counts.agents.size(); ++k) {
        if (games[k] > 0.0) {
            remap[k] = p.agents.size();
            p.agents.push_back(counts.agents[k]);
        } else {
            warnings.push_back("agent '" + counts.agents[k] +
                               "' has zero effective games and was excluded from the fit");
        }
    }
    if (p.agents.size() < 2)
        throw std::invalid_argument("Bradley-Terry fit needs at least two agents with games");

    for (const auto& e : counts.entries) {
        if (e.wi + e.wj <= 0.0) continue;
        p.entries.push_back({remap[e.i], remap[e.j], e.wi, e.wj});
    }
    p.n_real = p.agents.size();
    p.phantom = config.phantom_regularization;

    if (!p.phantom) {
        DisjointSet ds(p.n_real);
        for (const auto& e : p.entries) ds.unite(e.i, e.j);
        std::map<std::size_t, std::vector<AgentId>> components;
        for (std::size_t k = 0; k < p.n_real; ++k) components[ds.find(k)].push_back(p.agents[k]);
        if (components.size() > 1) {
            std::string msg =
                "comparison graph is disconnected and regularization is off; components:";
            for (const auto& [root, members] : components) {
                msg += " {";
                for (std::size_t k = 0; k < members.size(); ++k) {
                    if (k) msg += ", ";
                    msg += members[k];
                }
                msg += "}";
            }
            throw std::runtime_error(msg);
        }
    } else {
        const std::size_t ph = p.n_real;
        for (std::size_t k = 0; k < p.n_real; ++k)
            p.entries.push_back({k, ph, config.phantom_weight, config.phantom_weight});
    }
    return p;
}

double loglik(const std::vector<PairCounts::Entry>& entries, const std::vector<double>& pi) {
    double ll = 0.0;
    for (const auto& e : entries) {
        const double denom = pi[e.i] + pi[e.j];
        if (e.wi > 0) ll += e.wi * std::log(pi[e.i] / denom);
        if (e.wj > 0) ll += e.wj * std::log(pi[e.j] / denom);
    }
    return ll;
}

}  // namespace

PairCounts PairCounts::from_matches(const std::vector<MatchRecord>& matches, double tie_weight) {
    PairCounts out;
    out.agents = agents_in(matches);
    std::map<AgentId, std::size_t> index;
    for (std::size_t k = 0; k < out.agents.size(); ++k) index[out.agents[k]] = k;

    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> cells;
    for (const auto& m : matches) {
        std::size_t ia = index.at(m.a);
        std::size_t ib = index.at(m.b);
        const bool flipped = ia > ib;
        if (flipped) std::swap(ia, ib);
        auto& [wi, wj] = cells[{ia, ib}];
        switch (m.result) {
            case MatchResult::Tie:
                wi += tie_weight;
                wj += tie_weight;
                break;
            case MatchResult::AWins:
                (flipped ? wj : wi) += 1.0;
                break;
            case MatchResult::BWins:
                (flipped ? wi : wj) += 1.0;
                break;
        }
    }
    for (const auto& [key, w] : cells) out.entries.push_back({key.first, key.second, w.first, w.second});
    return out;
}

BTFit bt_fit_counts(const PairCounts& counts, const FitConfig& config) {
    if (config.tol <= 0) throw std::invalid_argument("tolerance must be positive");
    if (config.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");

    BTFit fit;
    Problem p = build_problem(counts, config, fit.warnings);
    const std::size_t n = p.size();

    std::vector<double> wins(n, 0.0);
    for (const auto& e : p.entries) {
        wins[e.i] += e.wi;
        wins[e.j] += e.wj;
    }

    std::vector<double> pi(n, 1.0), numer(n), denom(n), next(n);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int sweep = 1; sweep <= config.max_iter; ++sweep) {
        std::fill(denom.begin(), denom.end(), 0.0);
        for (const auto& e : p.entries) {
            const double games = e.wi + e.wj;
            const double inv = games / (pi[e.i] + pi[e.j]);
            denom[e.i] += inv;
            denom[e.j] += inv;
        }
        for (std::size_t k = 0; k < n; ++k) {
            // An agent with zero effective wins has no finite maximizer;
            // pin it just above zero so the sweep stays well defined.
            next[k] = wins[k] > 0.0 ? wins[k] / denom[k] : 1e-300;
        }

        // The likelihood is scale-invariant; renormalize each sweep to keep
        // the iterate bounded (phantom pinned at 1, else unit geometric mean).
        double scale;
        if (p.phantom) {
            scale = next[p.n_real];
        } else {
            double log_sum = 0.0;
            for (double v : next) log_sum += std::log(v);
            scale = std::exp(log_sum / static_cast<double>(n));
        }
        double max_rel_change = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            next[k] /= scale;
            max_rel_change = std::max(max_rel_change, std::abs(next[k] - pi[k]) / pi[k]);
        }
        pi.swap(next);
        fit.iterations = sweep;

        if (config.track_loglik) {
            const double ll = loglik(p.entries, pi);
            assert(ll >= prev_ll - 1e-9 * std::max(1.0, std::abs(prev_ll)));
            prev_ll = ll;
            fit.loglik_trace.push_back(ll);
        }
        if (max_rel_change < config.tol) {
            fit.converged = true;
            break;
        }
    }

    // Drop the phantom and renormalize so the real agents' logs sum to zero.
    std::vector<double> logs(p.n_real);
    double mean_log = 0.0;
    for (std::size_t k = 0; k < p.n_real; ++k) {
        logs[k] = std::log(pi[k]);
        mean_log += logs[k];
    }
    mean_log /= static_cast<double>(p.n_real);
    for (std::size_t k = 0; k < p.n_real; ++k) {
        const double centered = logs[k] - mean_log;
        fit.strengths[p.agents[k]] = std::exp(centered);
        fit.display_rating[p.agents[k]] = 1500.0 + 400.0 * centered / std::log(10.0);
    }
    return fit;
}

BTFit bt_fit(const std::vector<MatchRecord>& matches, const FitConfig& config) {
    return bt_fit_counts(PairCounts::from_matches(matches, config.tie_weight), config);
}

BTFit bt_bootstrap(const std::vector<MatchRecord>& matches, const FitConfig& fit_config,
                   int replicates, std::uint64_t seed) {
    if (replicates < 1) throw std::invalid_argument("bootstrap needs at least one replicate");
    if (matches.empty()) throw std::invalid_argument("bootstrap needs a nonempty match list");

    BTFit base = bt_fit(matches, fit_config);

    const std::size_t n = matches.size();
    std::map<AgentId, std::vector<double>> samples;
    int failed = 0;
    for (int r = 0; r < replicates; ++r) {
        std::mt19937_64 rng(replicate_seed(seed, static_cast<std::uint64_t>(r)));
        std::vector<MatchRecord> resample;
        resample.reserve(n);
        for (std::size_t k = 0; k < n; ++k) resample.push_back(matches[rng() % n]);
        try {
            BTFit rep = bt_fit(resample, fit_config);
            if (!rep.converged) {
                ++failed;
                continue;
            }
            for (const auto& [agent, display] : rep.display_rating) samples[agent].push_back(display);
        } catch (const std::exception&) {
            ++failed;
        }
    }
    if (failed * 10 > replicates)
        throw std::runtime_error(std::to_string(failed) + " of " + std::to_string(replicates) +
                                 " bootstrap replicates failed to converge");
    if (failed > 0)
        base.warnings.push_back(std::to_string(failed) + " of " + std::to_string(replicates) +
                                " bootstrap replicates failed and were excluded");
    base.failed_replicates = failed;

    std::map<AgentId, ConfidenceInterval> ci;
    for (const auto& [agent, point] : base.display_rating) {
        auto it = samples.find(agent);
        if (it == samples.end() || it->second.empty()) {
            base.warnings.push_back("agent '" + agent +
                                    "' appeared in no successful replicate; degenerate interval");
            ci[agent] = {point, point};
            continue;
        }
        double low = quantile(it->second, 0.025);
        double high = quantile(it->second, 0.975);
        // A percentile interval can exclude the full-sample point; widen so
        // ci_low <= point <= ci_high always holds.
        ci[agent] = {std::min(low, point), std::max(high, point)};
    }
    base.ci = std::move(ci);
    return base;
}

double bt_predict(const BTFit& fit, const AgentId& i, const AgentId& j) {
    auto pick = [&](const AgentId& id) {
        auto it = fit.strengths.find(id);
        if (it == fit.strengths.end()) throw std::out_of_range("unknown agent '" + id + "'");
        return it->second;
    };
    const double si = pick(i);
    const double sj = pick(j);
    if (i == j) throw std::invalid_argument("cannot predict an agent against itself");
    // Evaluate on the name-ordered pair and complement, so the two query
    // orders return p and 1-p built from the same division.
    const bool ordered = i < j;
    const double first = ordered ? si : sj;
    const double second = ordered ? sj : si;
    const double p = first / (first + second);
    return ordered ? p : 1.0 - p;
}

double bt_loglik(const PairCounts& counts, const std::vector<double>& strengths) {
    if (strengths.size() != counts.agents.size())
        throw std::invalid_argument("strength vector size mismatch");
    return loglik(counts.entries, strengths);
}

double quantile(std::vector<double> sample, double p) {
    if (sample.empty()) throw std::invalid_argument("quantile of empty sample");
    p = std::clamp(p, 0.0, 1.0);
    std::sort(sample.begin(), sample.end());
    const double h = p * static_cast<double>(sample.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sample.size()) return sample.back();
    const double frac = h - static_cast<double>(lo);
    return sample[lo] + frac * (sample[lo + 1] - sample[lo]);
}

std::string render_fit(const BTFit& fit, const std::map<AgentId, std::int64_t>& games) {
    std::ostringstream out;
    out << "agent\tstrength\tdisplay_rating\tci_low\tci_high\tgames\n";
    out.precision(17);
    for (const auto& [agent, strength] : fit.strengths) {
        const double display = fit.display_rating.at(agent);
        double low = display, high = display;
        if (fit.ci) {
            auto it = fit.ci->find(agent);
            if (it != fit.ci->end()) {
                low = it->second.low;
                high = it->second.high;
            }
        }
        auto g = games.find(agent);
        out << agent << '\t' << strength << '\t' << display << '\t' << low << '\t' << high << '\t'
            << (g == games.end() ? 0 : g->second) << '\n';
    }
    return out.str();
}

}  // namespace pokerank::bt
