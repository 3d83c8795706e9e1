#include "pokerank/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace pokerank::analysis {

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx;
        const double dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("correlation of a constant vector is undefined");
    return sxy / std::sqrt(sxx * syy);
}

std::vector<std::string> split_row(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(delim, pos);
        if (next == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
        fields.back().pop_back();
    return fields;
}

// Applies the requested preprocessing in place; returns per-column (mean, scale).
std::vector<std::pair<double, double>> preprocess(Eigen::MatrixXd& m, const SvdOptions& options,
                                                  const std::vector<std::string>& col_names) {
    std::vector<std::pair<double, double>> transforms(m.cols(), {0.0, 1.0});
    if (!options.center && !options.standardize) return transforms;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double mean = m.col(c).mean();
        m.col(c).array() -= mean;
        double scale = 1.0;
        if (options.standardize) {
            const double var = m.col(c).squaredNorm() / static_cast<double>(m.rows());
            if (var <= 0.0)
                throw std::invalid_argument("column '" + col_names[c] +
                                            "' is constant and cannot be standardized");
            scale = std::sqrt(var);
            m.col(c) /= scale;
        }
        transforms[c] = {mean, scale};
    }
    return transforms;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("spearman needs at least two points");
    return pearson(average_ranks(x), average_ranks(y));
}

ScoreMatrix ScoreMatrix::parse(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
    }
    if (lines.size() < 2) throw std::runtime_error("score matrix needs a header and one row");
    const char delim = lines[0].find('\t') != std::string::npos ? '\t' : ',';

    ScoreMatrix m;
    std::vector<std::string> header = split_row(lines[0], delim);
    // The corner cell above the model-name column is optional.
    std::size_t first_col = header.empty() || header[0].empty() ? 1 : 0;
    if (!header.empty() && (header[0] == "model" || header[0] == "name")) first_col = 1;
    m.col_names.assign(header.begin() + static_cast<std::ptrdiff_t>(first_col), header.end());
    if (m.col_names.empty()) throw std::runtime_error("score matrix has no benchmark columns");

    m.values.resize(static_cast<Eigen::Index>(lines.size() - 1),
                    static_cast<Eigen::Index>(m.col_names.size()));
    for (std::size_t r = 1; r < lines.size(); ++r) {
        std::vector<std::string> fields = split_row(lines[r], delim);
        if (fields.size() != m.col_names.size() + 1)
            throw std::runtime_error("row " + std::to_string(r + 1) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(m.col_names.size() + 1));
        m.row_names.push_back(fields[0]);
        for (std::size_t c = 0; c < m.col_names.size(); ++c) {
            const std::string& cell = fields[c + 1];
            try {
                std::size_t consumed = 0;
                const double v = std::stod(cell, &consumed);
                if (consumed != cell.size()) throw std::invalid_argument(cell);
                if (!std::isfinite(v)) throw std::invalid_argument(cell);
                m.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = v;
            } catch (const std::exception&) {
                throw std::runtime_error("missing or non-numeric cell at row " +
                                         std::to_string(r + 1) + ", column '" + m.col_names[c] +
                                         "'; impute missing values explicitly before loading");
            }
        }
    }

    for (std::size_t k = 0; k < m.row_names.size(); ++k)
        for (std::size_t j = k + 1; j < m.row_names.size(); ++j)
            if (m.row_names[k] == m.row_names[j])
                throw std::runtime_error("duplicate model name '" + m.row_names[k] + "'");
    for (std::size_t k = 0; k < m.col_names.size(); ++k)
        for (std::size_t j = k + 1; j < m.col_names.size(); ++j)
            if (m.col_names[k] == m.col_names[j])
                throw std::runtime_error("duplicate benchmark name '" + m.col_names[k] + "'");
    return m;
}

ScoreMatrix ScoreMatrix::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open score matrix '" + path + "'");
    return parse(in);
}

std::size_t ScoreMatrix::col_index(const std::string& name) const {
    for (std::size_t c = 0; c < col_names.size(); ++c)
        if (col_names[c] == name) return c;
    throw std::out_of_range("unknown benchmark '" + name + "'");
}

SvdVariance svd_variance(const ScoreMatrix& m, int k, const SvdOptions& options) {
    const Eigen::Index rows = m.values.rows();
    const Eigen::Index cols = m.values.cols();
    if (k < 1 || k > std::min(rows, cols))
        throw std::invalid_argument("k must lie in [1, min(rows, cols)]");

    Eigen::MatrixXd work = m.values;
    preprocess(work, options, m.col_names);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(work, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd approx = svd.matrixU().leftCols(k) *
                                   svd.singularValues().head(k).asDiagonal() *
                                   svd.matrixV().leftCols(k).transpose();
    const Eigen::MatrixXd residual = work - approx;

    SvdVariance out;
    const double total_norm2 = work.squaredNorm();
    if (total_norm2 <= 0.0) throw std::invalid_argument("score matrix is identically zero");
    out.total_variance_explained = 1.0 - residual.squaredNorm() / total_norm2;
    for (Eigen::Index c = 0; c < cols; ++c) {
        const double col_norm2 = work.col(c).squaredNorm();
        const double r2 =
            col_norm2 > 0.0 ? 1.0 - residual.col(c).squaredNorm() / col_norm2 : 1.0;
        out.per_column_r2[m.col_names[static_cast<std::size_t>(c)]] = std::clamp(r2, 0.0, 1.0);
    }
    return out;
}

ColumnProjection project_new_column(const ScoreMatrix& m, int k,
                                    const std::vector<double>& new_col,
                                    const SvdOptions& options) {
    const Eigen::Index rows = m.values.rows();
    if (static_cast<Eigen::Index>(new_col.size()) != rows)
        throw std::invalid_argument("new column length does not match the matrix rows");
    if (k < 1) throw std::invalid_argument("k must be positive");

    Eigen::MatrixXd work = m.values;
    preprocess(work, options, m.col_names);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(work, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (k > svd.rank())
        throw std::invalid_argument("k = " + std::to_string(k) +
                                    " exceeds the matrix rank " + std::to_string(svd.rank()));

    Eigen::VectorXd target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) target(r) = new_col[static_cast<std::size_t>(r)];
    double mean = 0.0, scale = 1.0;
    if (options.center || options.standardize) {
        mean = target.mean();
        target.array() -= mean;
        if (options.standardize) {
            const double var = target.squaredNorm() / static_cast<double>(rows);
            if (var <= 0.0)
                throw std::invalid_argument("new column is constant and cannot be standardized");
            scale = std::sqrt(var);
            target /= scale;
        }
    }

    const Eigen::MatrixXd basis = svd.matrixU().leftCols(k);
    const Eigen::VectorXd fitted = basis * (basis.transpose() * target);
    const double norm2 = target.squaredNorm();
    if (norm2 <= 0.0) throw std::invalid_argument("new column is identically zero");

    ColumnProjection out;
    out.r2 = std::clamp(1.0 - (target - fitted).squaredNorm() / norm2, 0.0, 1.0);
    out.predictions.resize(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r)
        out.predictions[static_cast<std::size_t>(r)] = fitted(r) * scale + mean;
    return out;
}

std::vector<CheckpointReport> compare_raters(const std::vector<MatchRecord>& matches,
                                             const LeaderboardConfig& config,
                                             const std::vector<std::size_t>& checkpoints) {
    static const Metric kMetrics[] = {Metric::Elo, Metric::Glicko, Metric::Gxe, Metric::Fhbt};

    std::vector<CheckpointReport> reports;
    for (std::size_t checkpoint : checkpoints) {
        if (checkpoint == 0 || checkpoint > matches.size())
            throw std::invalid_argument("checkpoint " + std::to_string(checkpoint) +
                                        " outside [1, " + std::to_string(matches.size()) + "]");
        const std::vector<MatchRecord> prefix(matches.begin(),
                                              matches.begin() + static_cast<std::ptrdiff_t>(checkpoint));
        CheckpointReport report;
        report.match_count = checkpoint;
        report.entries = build_leaderboard(prefix, config);

        std::size_t with_fhbt = 0;
        for (const auto& e : report.entries) with_fhbt += e.fhbt.has_value();
        report.fhbt_available = with_fhbt >= 2;

        for (std::size_t i = 0; i < std::size(kMetrics); ++i) {
            for (std::size_t j = i + 1; j < std::size(kMetrics); ++j) {
                const Metric a = kMetrics[i];
                const Metric b = kMetrics[j];
                const bool needs_fhbt = a == Metric::Fhbt || b == Metric::Fhbt;
                if (needs_fhbt && !report.fhbt_available) continue;
                std::vector<double> va, vb;
                for (const auto& e : report.entries) {
                    if (needs_fhbt && !e.fhbt) continue;
                    va.push_back(metric_value(e, a));
                    vb.push_back(metric_value(e, b));
                }
                report.correlations.push_back({a, b, spearman(va, vb), va.size()});
            }
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

std::string render_comparison(const std::vector<CheckpointReport>& reports) {
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    out << "checkpoint\tmetric_a\tmetric_b\tspearman\tagents\n";
    for (const auto& report : reports) {
        for (const auto& c : report.correlations) {
            out << report.match_count << '\t' << metric_name(c.first) << '\t'
                << metric_name(c.second) << '\t' << c.rho << '\t' << c.agents << '\n';
        }
        if (!report.fhbt_available)
            out << report.match_count << "\t-\tfhbt\tunavailable\t-\n";
    }
    out << "\ncheckpoint\tagent\tfhbt\tband_low\tband_high\n";
    for (const auto& report : reports) {
        for (const auto& e : report.entries) {
            if (!e.fhbt) continue;
            out << report.match_count << '\t' << e.agent << '\t' << e.fhbt->display_rating << '\t'
                << e.fhbt->ci_low << '\t' << e.fhbt->ci_high << '\n';
        }
    }
    return out.str();
}

}  // namespace pokerank::analysis
