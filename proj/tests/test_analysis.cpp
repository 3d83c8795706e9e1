#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pokerank/analysis.hpp"
#include "pokerank/ladder.hpp"

using namespace pokerank;
using namespace pokerank::analysis;

namespace {

ScoreMatrix matrix_from(const std::string& text) {
    std::istringstream in(text);
    return ScoreMatrix::parse(in);
}

std::vector<ladder::SyntheticAgent> spread_agents(int count) {
    std::vector<ladder::SyntheticAgent> agents;
    for (int i = 0; i < count; ++i) {
        const double display = 1200.0 + 600.0 * i / (count - 1);
        agents.push_back({"agent-" + std::to_string(i),
                          std::pow(10.0, (display - 1500.0) / 400.0)});
    }
    return agents;
}

double find_rho(const CheckpointReport& report, Metric a, Metric b) {
    for (const auto& c : report.correlations) {
        if ((c.first == a && c.second == b) || (c.first == b && c.second == a)) return c.rho;
    }
    throw std::out_of_range("correlation pair not reported");
}

}  // namespace

TEST_CASE("spearman endpoints") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(spearman({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("spearman is symmetric and monotone-invariant") {
    const std::vector<double> x = {3.2, 1.1, 4.8, 2.0, 5.5};
    const std::vector<double> y = {12, 41, 8, 30, 2};
    CHECK(spearman(x, y) == spearman(y, x));

    std::vector<double> squashed;
    for (double v : y) squashed.push_back(std::exp(v / 10.0));
    CHECK(spearman(x, squashed) == doctest::Approx(spearman(x, y)).epsilon(1e-12));
}

TEST_CASE("spearman averages tied ranks") {
    CHECK(spearman({1, 1, 2}, {1, 2, 3}) ==
          doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("spearman rejects undefined inputs") {
    CHECK_THROWS_AS(static_cast<void>(spearman({1, 2}, {1, 2, 3})), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(spearman({1}, {2})), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(spearman({1, 2, 3}, {5, 5, 5})), std::invalid_argument);
}

TEST_CASE("score matrix parsing handles tsv, csv, and corner labels") {
    const ScoreMatrix tsv = matrix_from(
        "model\tbench1\tbench2\n"
        "m1\t1.5\t2.5\n"
        "m2\t3\t4\n");
    CHECK(tsv.row_names == std::vector<std::string>{"m1", "m2"});
    CHECK(tsv.col_names == std::vector<std::string>{"bench1", "bench2"});
    CHECK(tsv.values(1, 0) == 3.0);
    CHECK(tsv.col_index("bench2") == 1);
    CHECK_THROWS_AS(static_cast<void>(tsv.col_index("bench9")), std::out_of_range);

    const ScoreMatrix csv = matrix_from(",b1,b2\nm1,1,2\n");
    CHECK(csv.col_names == std::vector<std::string>{"b1", "b2"});
    CHECK(csv.values(0, 1) == 2.0);
}

TEST_CASE("score matrix parsing rejects damaged input") {
    CHECK_THROWS_AS(matrix_from("model\tb1\n"), std::runtime_error);
    CHECK_THROWS_AS(matrix_from("model\tb1\tb2\nm1\t1\n"), std::runtime_error);
    CHECK_THROWS_WITH_AS(matrix_from("model\tb1\nm1\t\n"),
                         doctest::Contains("impute missing values explicitly"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(matrix_from("model\tb1\nm1\tn/a\n"),
                         doctest::Contains("impute missing values explicitly"),
                         std::runtime_error);
    CHECK_THROWS_AS(matrix_from("model\tb1\nm1\t1\nm1\t2\n"), std::runtime_error);
    CHECK_THROWS_AS(matrix_from("model\tb1\tb1\nm1\t1\t2\n"), std::runtime_error);
}

TEST_CASE("svd variance is exact on matrices of matching rank") {
    ScoreMatrix rank1;
    rank1.row_names = {"r0", "r1", "r2"};
    rank1.col_names = {"c0", "c1"};
    rank1.values.resize(3, 2);
    const Eigen::Vector3d u(1.0, 2.0, -1.5);
    const Eigen::Vector2d v(0.5, 3.0);
    rank1.values = u * v.transpose();

    const SvdVariance one = svd_variance(rank1, 1);
    CHECK(one.total_variance_explained == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one.per_column_r2.at("c0") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one.per_column_r2.at("c1") == doctest::Approx(1.0).epsilon(1e-12));

    ScoreMatrix rank2;
    rank2.row_names = {"r0", "r1", "r2", "r3"};
    rank2.col_names = {"c0", "c1", "c2"};
    rank2.values.resize(4, 3);
    Eigen::MatrixXd a(4, 2), b(2, 3);
    a << 1, 0, 0, 1, 1, 1, 2, -1;
    b << 1, 2, 3, 4, 5, 6;
    rank2.values = a * b;
    const SvdVariance two = svd_variance(rank2, 2);
    CHECK(two.total_variance_explained == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& [name, r2] : two.per_column_r2)
        CHECK(r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd variance captures a noisy low-rank matrix") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int rows = 30, cols = 12;
    Eigen::MatrixXd a(rows, 2), b(2, cols);
    for (int r = 0; r < rows; ++r)
        for (int k = 0; k < 2; ++k) a(r, k) = normal(rng);
    for (int k = 0; k < 2; ++k)
        for (int c = 0; c < cols; ++c) b(k, c) = normal(rng);

    ScoreMatrix m;
    m.values = a * b;
    const double signal = std::sqrt(m.values.squaredNorm() / (rows * cols));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m.values(r, c) += 0.01 * signal * normal(rng);
    for (int r = 0; r < rows; ++r) m.row_names.push_back("m" + std::to_string(r));
    for (int c = 0; c < cols; ++c) m.col_names.push_back("b" + std::to_string(c));

    const SvdVariance out = svd_variance(m, 2);
    CHECK(out.total_variance_explained >= 0.99);

    // Rank is exhausted at min(rows, cols); explained variance is monotone on
    // the way there, each column r2 stays a proportion, and their
    // norm-weighted mean reproduces the total.
    double prev = 0.0;
    for (int k = 1; k <= cols; ++k) {
        const SvdVariance step = svd_variance(m, k);
        CHECK(step.total_variance_explained >= prev - 1e-12);
        prev = step.total_variance_explained;
        double weighted = 0.0, norm = 0.0;
        for (const auto& [name, r2] : step.per_column_r2) {
            CHECK(r2 >= 0.0);
            CHECK(r2 <= 1.0);
            const double w = m.values.col(static_cast<Eigen::Index>(m.col_index(name)))
                                 .squaredNorm();
            weighted += w * r2;
            norm += w;
        }
        CHECK(weighted / norm == doctest::Approx(step.total_variance_explained).epsilon(1e-9));
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(static_cast<void>(svd_variance(m, 0)), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(svd_variance(m, cols + 1)), std::invalid_argument);
}

TEST_CASE("svd standardization changes the weighting and rejects constants") {
    ScoreMatrix m = matrix_from(
        "model\tsmall\tbig\n"
        "m1\t1\t100\n"
        "m2\t2\t210\n"
        "m3\t3\t290\n"
        "m4\t4\t420\n");
    const SvdVariance raw = svd_variance(m, 1);
    SvdOptions standardized;
    standardized.standardize = true;
    const SvdVariance scaled = svd_variance(m, 1, standardized);
    // Raw SVD is dominated by the big column; standardization makes the small
    // column participate, so its share moves.
    CHECK(raw.per_column_r2.at("small") != doctest::Approx(scaled.per_column_r2.at("small")));

    ScoreMatrix constant = matrix_from("model\tb1\tb2\nm1\t5\t1\nm2\t5\t2\n");
    CHECK_THROWS_AS(static_cast<void>(svd_variance(constant, 1, standardized)),
                    std::invalid_argument);
}

TEST_CASE("projection recovers members and rejects strangers of the span") {
    // Orthonormal directions: u1, u2 span the matrix, u3 is its complement.
    Eigen::Vector4d u1(0.5, 0.5, 0.5, 0.5);
    Eigen::Vector4d u2(0.5, -0.5, 0.5, -0.5);
    Eigen::Vector4d u3(0.5, 0.5, -0.5, -0.5);

    ScoreMatrix m;
    m.row_names = {"r0", "r1", "r2", "r3"};
    m.col_names = {"c0", "c1", "c2"};
    m.values.resize(4, 3);
    m.values.col(0) = 3.0 * u1 + 1.0 * u2;
    m.values.col(1) = 2.0 * u1 - 1.0 * u2;
    m.values.col(2) = 1.0 * u1 + 2.0 * u2;

    SUBCASE("an existing column projects onto itself") {
        std::vector<double> col(4);
        for (int r = 0; r < 4; ++r) col[r] = m.values(r, 1);
        const ColumnProjection p = project_new_column(m, 2, col);
        CHECK(p.r2 == doctest::Approx(1.0).epsilon(1e-12));
        for (int r = 0; r < 4; ++r)
            CHECK(p.predictions[r] == doctest::Approx(col[r]).epsilon(1e-9));
    }

    SUBCASE("the orthogonal complement projects to nothing") {
        const std::vector<double> col = {u3(0), u3(1), u3(2), u3(3)};
        const ColumnProjection p = project_new_column(m, 2, col);
        CHECK(p.r2 == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("a mixed column splits by its in-span energy") {
        // 0.6 of the vector lies along u1, 0.8 along the complement; the
        // in-span share of the squared norm is exactly 0.36.
        Eigen::Vector4d mixed = 0.6 * u1 + 0.8 * u3;
        const std::vector<double> col = {mixed(0), mixed(1), mixed(2), mixed(3)};
        const ColumnProjection p = project_new_column(m, 2, col);
        CHECK(p.r2 == doctest::Approx(0.36).epsilon(1e-9));
    }

    SUBCASE("rank and shape guards") {
        CHECK_THROWS_WITH_AS(
            static_cast<void>(project_new_column(m, 3, {1, 2, 3, 4})),
            doctest::Contains("exceeds the matrix rank"), std::invalid_argument);
        CHECK_THROWS_AS(static_cast<void>(project_new_column(m, 2, {1, 2, 3})),
                        std::invalid_argument);
    }

    SUBCASE("standardized r2 ignores positive rescaling") {
        // Centering removes the u1 direction from every column, so the
        // standardized matrix has rank 1.
        SvdOptions standardized;
        standardized.standardize = true;
        Eigen::Vector4d mixed = 0.6 * u2 + 0.8 * u3;
        std::vector<double> col = {mixed(0), mixed(1), mixed(2), mixed(3)};
        const double base = project_new_column(m, 1, col, standardized).r2;
        for (double& v : col) v *= 37.5;
        CHECK(project_new_column(m, 1, col, standardized).r2 ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("one decided match aligns all four metrics") {
    const std::vector<MatchRecord> matches = {
        {"m1", 0, "fmt", "A", "B", MatchResult::AWins}};
    LeaderboardConfig config;
    config.bt_min_battles = 1;
    const auto reports = compare_raters(matches, config, {1});
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].fhbt_available);
    CHECK(reports[0].correlations.size() == 6);
    for (const auto& c : reports[0].correlations) {
        CHECK(c.rho == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(c.agents == 2);
    }
}

TEST_CASE("glicko and the batch fit agree on a long uniform ladder") {
    const auto agents = spread_agents(20);
    const auto matches = ladder::simulate_ladder(
        agents, ladder::MatchmakingPolicy::uniform(), 5000, 77);

    LeaderboardConfig config;
    const auto reports = compare_raters(matches, config, {100, matches.size()});
    REQUIRE(reports.size() == 2);

    // At 100 matches nobody has 250 battles yet.
    CHECK_FALSE(reports[0].fhbt_available);
    CHECK(reports[0].correlations.size() == 3);  // pairs among elo/glicko/gxe only

    const CheckpointReport& last = reports[1];
    CHECK(last.fhbt_available);
    CHECK(last.correlations.size() == 6);
    CHECK(find_rho(last, Metric::Glicko, Metric::Fhbt) >= 0.9);

    const std::string text = render_comparison(reports);
    CHECK(text.find("checkpoint\tmetric_a\tmetric_b\tspearman\tagents") == 0);
    CHECK(text.find("unavailable") != std::string::npos);
    CHECK(text.find("glicko\tfhbt") != std::string::npos);
}

TEST_CASE("proximity matchmaking still yields finite cross-metric agreement") {
    const auto agents = spread_agents(20);
    const auto matches = ladder::simulate_ladder(
        agents, ladder::MatchmakingPolicy::proximity(100.0), 5000, 78);

    const auto reports = compare_raters(matches, {}, {matches.size()});
    REQUIRE(reports.size() == 1);
    REQUIRE(reports[0].fhbt_available);
    const double elo_fhbt = find_rho(reports[0], Metric::Elo, Metric::Fhbt);
    const double glicko_fhbt = find_rho(reports[0], Metric::Glicko, Metric::Fhbt);
    // No pinned threshold here: narrow pairing windows starve cross-tier
    // comparisons, which is the divergence the comparison report exists to
    // show. The values just have to be well-defined correlations.
    CHECK(elo_fhbt >= -1.0);
    CHECK(elo_fhbt <= 1.0);
    CHECK(glicko_fhbt >= -1.0);
    CHECK(glicko_fhbt <= 1.0);
}

TEST_CASE("checkpoints outside the log are rejected") {
    const std::vector<MatchRecord> matches = {
        {"m1", 0, "fmt", "A", "B", MatchResult::AWins}};
    CHECK_THROWS_AS(static_cast<void>(compare_raters(matches, {}, {0})), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(compare_raters(matches, {}, {2})), std::invalid_argument);
}
