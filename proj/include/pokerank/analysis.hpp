#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pokerank/core.hpp"
#include "pokerank/leaderboard.hpp"

namespace pokerank::analysis {

// Spearman rank correlation with average ranks for ties. Throws on length
// mismatch, fewer than two points, or a constant vector (undefined there).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Models in rows, benchmarks in columns, every cell present.
struct ScoreMatrix {
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    Eigen::MatrixXd values;

    // Delimited text (tab or comma): header row of benchmark names, then one
    // row per model starting with its name. A blank or non-numeric cell is an
    // error telling the caller to impute explicitly; this loader never does.
    static ScoreMatrix parse(std::istream& in);
    static ScoreMatrix from_file(const std::string& path);

    std::size_t col_index(const std::string& name) const;
};

struct SvdOptions {
    bool center = false;       // subtract column means first
    bool standardize = false;  // center and scale each column to unit variance
};

struct SvdVariance {
    double total_variance_explained = 0.0;          // 1 - |M - M_k|^2_F / |M|^2_F
    std::map<std::string, double> per_column_r2;    // by benchmark name, each in [0,1]
};

// Rank-k truncated SVD variance decomposition; k in [1, min(rows, cols)].
SvdVariance svd_variance(const ScoreMatrix& m, int k, const SvdOptions& options = {});

struct ColumnProjection {
    double r2 = 0.0;
    std::vector<double> predictions;  // fitted values in the column's original units
};

// Least-squares projection of a held-out column onto the span of the top-k
// left singular vectors of M. Throws when k exceeds the numerical rank.
ColumnProjection project_new_column(const ScoreMatrix& m, int k,
                                    const std::vector<double>& new_col,
                                    const SvdOptions& options = {});

// --- cross-metric comparison -------------------------------------------------

struct MetricCorrelation {
    Metric first;
    Metric second;
    double rho;
    std::size_t agents;  // sample size the correlation was computed on
};

struct CheckpointReport {
    std::size_t match_count = 0;
    bool fhbt_available = false;
    std::vector<LeaderboardEntry> entries;
    std::vector<MetricCorrelation> correlations;
};

// Replays growing prefixes of the match log and reports, per checkpoint, the
// leaderboard plus all pairwise Spearman correlations among Elo, Glicko-1,
// GXE, and FH-BT. Pairs involving FH-BT use only agents meeting the minimum
// sample; a checkpoint where fewer than two qualify has FH-BT marked
// unavailable. Bootstrap bands appear on entries when the config enables
// replicates.
std::vector<CheckpointReport> compare_raters(const std::vector<MatchRecord>& matches,
                                             const LeaderboardConfig& config,
                                             const std::vector<std::size_t>& checkpoints);

// Correlation table plus per-agent FH-BT trajectory rows with interval bands.
std::string render_comparison(const std::vector<CheckpointReport>& reports);

}  // namespace pokerank::analysis
