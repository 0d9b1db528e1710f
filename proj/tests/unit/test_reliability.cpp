#include <doctest.h>

#include <cmath>

#include "expressive/reliability.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace expressive;
using namespace expressive::reliability;

namespace {

RatingMatrix matrix(const Eigen::MatrixXd& s, double lo = 0.0, double hi = 4.0) {
    std::vector<std::string> subjects, raters;
    for (Eigen::Index i = 0; i < s.rows(); ++i) subjects.push_back("v" + std::to_string(i));
    for (Eigen::Index j = 0; j < s.cols(); ++j) raters.push_back("r" + std::to_string(j));
    return RatingMatrix("q1", subjects, raters, s, lo, hi);
}

Eigen::MatrixXd random_integer_ratings(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd s(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double subject = 1.2 * z(rng);
        for (Eigen::Index j = 0; j < k; ++j) s(i, j) = std::clamp(std::round(2.0 + subject + 0.7 * z(rng)), 0.0, 4.0);
    }
    return s;
}

// Continuous ratings with a known subject/noise variance ratio.
Eigen::MatrixXd simulate(Eigen::Index n, Eigen::Index k, double noise_sd, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd s(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double subject = z(rng);
        for (Eigen::Index j = 0; j < k; ++j) s(i, j) = subject + noise_sd * z(rng);
    }
    return s;
}

}  // namespace

TEST_CASE("hand-built 4x3 matrix matches the ANOVA oracle") {
    Eigen::MatrixXd s(4, 3);
    s << 4, 3, 4,
         2, 2, 1,
         0, 1, 1,
         3, 4, 3;
    const auto est = icc_average_raters(matrix(s));
    CHECK(std::abs(est.icc - oracle::icc_ak(s)) < 1e-10);
    CHECK(est.ci_low <= est.icc);
    CHECK(est.icc <= est.ci_high);
    CHECK(est.msr >= 0.0);
    CHECK(est.msc >= 0.0);
    CHECK(est.mse >= 0.0);
    CHECK(est.n_subjects == 4);
    CHECK(est.n_raters == 3);
}

TEST_CASE("ICC equals the ANOVA oracle on random matrices") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> nd(4, 30), kd(2, 10);
    int checked = 0;
    while (checked < 100) {
        const auto s = random_integer_ratings(nd(rng), kd(rng), rng);
        IccEstimate est;
        try {
            est = icc_average_raters(matrix(s));
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrorKind::DegenerateRatings);
            continue;
        }
        CHECK(std::abs(est.icc - oracle::icc_ak(s)) < 1e-10);
        CHECK(est.ci_low <= est.icc);
        CHECK(est.icc <= est.ci_high);
        ++checked;
    }
}

TEST_CASE("perfect agreement is exactly 1") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> score(0, 4);
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd s(6 + t, 2 + t % 5);
        do {
            for (Eigen::Index i = 0; i < s.rows(); ++i) s.row(i).setConstant(score(rng));
        } while (s.col(0).maxCoeff() == s.col(0).minCoeff());
        const auto est = icc_average_raters(matrix(s));
        CHECK(est.icc == 1.0);
        CHECK(est.ci_low == 1.0);
        CHECK(est.ci_high == 1.0);
    }
}

TEST_CASE("identical subject means are degenerate") {
    Eigen::MatrixXd s(3, 2);
    s << 1, 3, 3, 1, 2, 2;
    CHECK_THROWS_KIND(icc_average_raters(matrix(s)), ErrorKind::DegenerateRatings);
}

TEST_CASE("ICC is invariant to shift and positive scale") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 30; ++t) {
        const auto s = simulate(12, 5, 0.8, rng);
        const double base = icc_average_raters(matrix(s, -100, 100)).icc;
        Eigen::MatrixXd shifted = s.array() + 3.25;
        Eigen::MatrixXd scaled = s * 2.5;
        CHECK(icc_average_raters(matrix(shifted, -100, 100)).icc == doctest::Approx(base).epsilon(1e-10));
        CHECK(icc_average_raters(matrix(scaled, -100, 100)).icc == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("ICC approaches the Spearman-Brown value as noise vanishes") {
    std::mt19937_64 rng(21);
    double last_gap = 1.0;
    for (double noise : {1.0, 0.5, 0.1, 0.01}) {
        const double expected = 1.0 / (1.0 + noise * noise / 8.0);
        double sum = 0.0;
        const int sims = 400;
        for (int t = 0; t < sims; ++t) sum += icc_average_raters(matrix(simulate(16, 8, noise, rng), -100, 100)).icc;
        const double gap = std::abs(sum / sims - expected);
        CHECK(gap < 0.03);
        CHECK(gap <= last_gap + 1e-3);
        last_gap = gap;
    }
    CHECK(last_gap < 1e-3);
}

TEST_CASE("noise lowers expected ICC and more subjects narrow the CI") {
    std::mt19937_64 rng(33);
    double clean = 0.0, noisy = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto s = simulate(16, 8, 1.0, rng);
        std::normal_distribution<double> z;
        Eigen::MatrixXd extra = s;
        for (Eigen::Index i = 0; i < s.rows(); ++i)
            for (Eigen::Index j = 0; j < s.cols(); ++j) extra(i, j) += z(rng);
        clean += icc_average_raters(matrix(s, -100, 100)).icc;
        noisy += icc_average_raters(matrix(extra, -100, 100)).icc;
    }
    CHECK(noisy < clean);

    double w_small = 0.0, w_large = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto a = icc_average_raters(matrix(simulate(16, 8, 1.5, rng), -100, 100));
        const auto b = icc_average_raters(matrix(simulate(64, 8, 1.5, rng), -100, 100));
        w_small += a.ci_high - a.ci_low;
        w_large += b.ci_high - b.ci_low;
    }
    CHECK(w_large < w_small);
}

TEST_CASE("interpretation bands have exclusive lower edges") {
    CHECK(interpret_icc(0.80) == Band::Good);
    CHECK(interpret_icc(0.90) == Band::Good);
    CHECK(interpret_icc(0.9000001) == Band::Excellent);
    CHECK(interpret_icc(0.75) == Band::Moderate);
    CHECK(interpret_icc(0.50) == Band::Poor);
    CHECK(interpret_icc(0.51) == Band::Moderate);
    CHECK(interpret_icc(-0.2) == Band::Poor);
    CHECK_THROWS_KIND(interpret_icc(1.5), ErrorKind::OutOfRange);
    CHECK(to_string(Band::Excellent) == "excellent");
}

TEST_CASE("mean across raters") {
    Eigen::MatrixXd s(2, 2);
    s << 1, 3, 2, 4;
    CHECK(mean_across_raters(matrix(s)) == std::vector<double>{2, 3});

    Eigen::MatrixXd rep(3, 4);
    rep.colwise() = Eigen::Vector3d(0, 2, 4);
    CHECK(mean_across_raters(matrix(rep)) == std::vector<double>{0, 2, 4});

    Eigen::MatrixXd h(3, 3);
    h << 1, 2, 4, 0, 0, 3, 4, 4, 4;
    const auto m = mean_across_raters(matrix(h));
    CHECK(m[0] == doctest::Approx(7.0 / 3.0));
    CHECK(m[1] == doctest::Approx(1.0));
    CHECK(m[2] == doctest::Approx(4.0));
}

TEST_CASE("rater sets are discovered and pooled by position") {
    std::vector<RatingRecord> recs;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> score(0, 4);
    for (int set = 0; set < 2; ++set)
        for (int v = 0; v < 3; ++v)
            for (int r = 0; r < 4; ++r)
                recs.push_back({"v" + std::to_string(set) + std::to_string(v), "s" + std::to_string(set) + "_r" + std::to_string(r),
                                "q1", static_cast<double>(score(rng))});
    const auto sets = discover_rater_sets(recs);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].video_ids.size() == 3);
    CHECK(sets[0].rater_ids.size() == 4);
    const auto m0 = build_matrix(recs, "q1", sets[0]);
    CHECK(m0.n_subjects() == 3);
    CHECK(m0.n_raters() == 4);
    const auto pooled = build_pooled_matrix(recs, "q1", sets);
    CHECK(pooled.n_subjects() == 6);
    CHECK(pooled.n_raters() == 4);
    CHECK(question_ids(recs) == std::vector<std::string>{"q1"});

    recs.pop_back();
    CHECK_THROWS(build_matrix(recs, "q1", discover_rater_sets(recs).back()));
}

TEST_CASE("ratings CSV round-trip") {
    const auto dir = testing::scratch_dir("rel_csv");
    std::vector<RatingRecord> recs{{"v1", "r1", "q1", 3}, {"v1", "r2", "q1", 4}, {"v2", "r1", "q2", 0}};
    write_ratings_csv(recs, dir / "r.csv");
    const auto back = read_ratings_csv(dir / "r.csv");
    REQUIRE(back.size() == 3);
    CHECK(back[1].rater_id == "r2");
    CHECK(back[2].score == 0.0);
    std::filesystem::remove_all(dir);
}
