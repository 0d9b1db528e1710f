#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "expressive/models.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace expressive;
using namespace expressive::models;

namespace {

struct Data {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

Data linear_data(Eigen::Index n, Eigen::Index p, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Data d;
    d.x = testing::randn(n, p, rng);
    d.x.col(0) = 3.0 * d.x.col(0).array() + 1.0;
    Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(p, 1.0, -0.5);
    d.y = (d.x * w).array() + 2.0 + noise * testing::randn(n, 1, rng).col(0).array();
    return d;
}

double penalty(const Eigen::VectorXd& b, double lambda) { return lambda * b.lpNorm<1>() + 0.5 * (1.0 - lambda) * b.squaredNorm(); }

Eigen::Index matching_row(const Eigen::MatrixXd& xs, const Eigen::RowVectorXd& row) {
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        if ((xs.row(i) - row).cwiseAbs().maxCoeff() < 1e-12) return i;
    return -1;
}

}  // namespace

TEST_CASE("elastic net matches an exhaustive grid on two features") {
    std::mt19937_64 rng(5);
    int cases = 0;
    for (double alpha : {0.05, 0.3, 1.0})
        for (double lambda : {0.0, 0.5, 1.0}) {
            const auto d = linear_data(12, 2, 0.7, 100 + cases++);
            ElasticNetParams p;
            p.alpha = alpha;
            p.lambda = lambda;
            p.tol = 1e-12;
            const auto m = fit_elastic_net(d.x, d.y, p);
            const Eigen::MatrixXd xs = oracle::standardize(d.x);
            Eigen::Vector2d at;
            const double grid = oracle::en_grid_min_2d(xs, d.y, alpha, lambda, 1e-4, &at);
            const double mine = oracle::en_objective(xs, d.y, d.y.mean(), m.linear().coef, alpha, lambda);
            INFO("alpha=" << alpha << " lambda=" << lambda);
            CHECK(mine <= grid + 1e-12);
            CHECK(grid - mine < 1e-4 * alpha + 1e-7);
            CHECK((m.linear().coef - at).cwiseAbs().maxCoeff() < 2e-3);
            CHECK(m.linear().intercept == doctest::Approx(d.y.mean()));
        }
}

TEST_CASE("ridge and ordinary least squares closed forms") {
    const auto d = linear_data(40, 5, 0.5, 3);
    const Eigen::MatrixXd xs = oracle::standardize(d.x);
    const Eigen::VectorXd yc = d.y.array() - d.y.mean();
    const double n = static_cast<double>(xs.rows());

    ElasticNetParams p;
    p.alpha = 0.7;
    p.lambda = 0.0;
    p.tol = 1e-14;
    const auto ridge = fit_elastic_net(d.x, d.y, p);
    const Eigen::MatrixXd a = xs.transpose() * xs / n + p.alpha * Eigen::MatrixXd::Identity(5, 5);
    const Eigen::VectorXd closed = a.ldlt().solve(xs.transpose() * yc / n);
    CHECK((ridge.linear().coef - closed).cwiseAbs().maxCoeff() < 1e-6);

    p.alpha = 0.0;
    p.lambda = 0.5;
    const auto ols = fit_elastic_net(d.x, d.y, p);
    const Eigen::VectorXd ls = xs.colPivHouseholderQr().solve(yc);
    CHECK((ols.linear().coef - ls).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("a zero-variance column gets a zero coefficient and changes nothing else") {
    const auto d = linear_data(30, 3, 0.3, 8);
    Eigen::MatrixXd wide(30, 4);
    wide << d.x.leftCols(2), Eigen::VectorXd::Constant(30, 7.0), d.x.col(2);
    ElasticNetParams p;
    p.alpha = 0.1;
    const auto m = fit_elastic_net(wide, d.y, p);
    const auto base = fit_elastic_net(d.x, d.y, p);
    CHECK(m.scaler.excluded(2));
    CHECK(m.linear().coef(2) == 0.0);
    CHECK(m.linear().coef(0) == doctest::Approx(base.linear().coef(0)).epsilon(1e-12));
    CHECK(m.linear().coef(3) == doctest::Approx(base.linear().coef(2)).epsilon(1e-12));
}

TEST_CASE("coordinate descent never increases the objective") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = linear_data(25, 6, 1.0, seed);
        ElasticNetParams p;
        p.alpha = 0.01 * static_cast<double>(seed + 1);
        p.lambda = static_cast<double>(seed % 5) / 4.0;
        const auto m = fit_elastic_net(d.x, d.y, p);
        const auto& tr = m.report.objective_trace;
        REQUIRE(tr.size() >= 2);
        for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] <= tr[i - 1] + 1e-12);
        CHECK(m.report.converged);
    }
}

TEST_CASE("penalty shrinks as alpha grows") {
    const auto d = linear_data(30, 6, 1.0, 12);
    for (double lambda : {0.0, 0.5, 1.0}) {
        double last = std::numeric_limits<double>::infinity();
        double last_l1 = last;
        for (double alpha : {0.001, 0.01, 0.05, 0.1, 0.3, 1.0, 3.0}) {
            ElasticNetParams p;
            p.alpha = alpha;
            p.lambda = lambda;
            p.tol = 1e-12;
            const auto b = fit_elastic_net(d.x, d.y, p).linear().coef;
            CHECK(penalty(b, lambda) <= last + 1e-9);
            if (lambda == 1.0) CHECK(b.lpNorm<1>() <= last_l1 + 1e-9);
            last = penalty(b, lambda);
            last_l1 = b.lpNorm<1>();
        }
    }
}

TEST_CASE("SVR solves the dual on small problems") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 10; ++t) {
        const Eigen::MatrixXd x = testing::randn(5, 2, rng);
        const Eigen::VectorXd y = testing::randn(5, 1, rng).col(0);
        SvrParams p;
        p.C = t % 2 ? 0.5 : 5.0;
        p.gamma = 0.3 + 0.1 * t;
        p.epsilon = 0.05 * (t % 3);
        p.tol = 1e-10;
        const auto m = fit_svr(x, y, p);
        const Eigen::MatrixXd xs = oracle::standardize(x);
        const Eigen::MatrixXd k = detail::rbf_kernel(xs, xs, p.gamma);
        const auto sol = oracle::svr_dual(k, y, p.C, p.epsilon, 100000);

        Eigen::VectorXd beta = Eigen::VectorXd::Zero(5);
        const auto& s = m.svr();
        for (Eigen::Index i = 0; i < s.support_vectors.rows(); ++i) {
            const auto r = matching_row(xs, s.support_vectors.row(i));
            REQUIRE(r >= 0);
            beta(r) = s.dual_coef(i);
        }
        const double mine = detail::svr_dual_objective(k, y, beta, p.epsilon);
        INFO("case " << t);
        CHECK(mine <= sol.objective + 1e-8);
        CHECK(sol.objective - mine < 1e-6);
        CHECK((beta - sol.beta).cwiseAbs().maxCoeff() < 1e-4);
        CHECK(s.bias == doctest::Approx(sol.bias).epsilon(1e-4));
        CHECK(std::abs(beta.sum()) < 1e-9);
        CHECK(beta.cwiseAbs().maxCoeff() <= p.C + 1e-12);

        // KKT: points strictly inside the tube carry no weight, points outside are at the bound.
        const Eigen::VectorXd f = k * beta;
        for (Eigen::Index i = 0; i < 5; ++i) {
            const double r = y(i) - f(i) - s.bias;
            if (std::abs(r) < p.epsilon - 1e-4) CHECK(std::abs(beta(i)) < 1e-6);
            if (std::abs(r) > p.epsilon + 1e-4) CHECK(std::abs(beta(i)) == doctest::Approx(p.C));
        }
    }
}

TEST_CASE("SVR special cases") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd x = testing::randn(20, 3, rng);
    const Eigen::VectorXd constant = Eigen::VectorXd::Constant(20, 3.0);
    const auto flat = fit_svr(x, constant, SvrParams{});
    CHECK((predict(flat, x).array() - 3.0).abs().maxCoeff() < 1e-9);

    const Eigen::VectorXd y = (x.col(0).array().sin() + 0.3 * x.col(1).array()).matrix();
    SvrParams p;
    p.C = 2.0;
    p.tol = 1e-10;
    const auto once = fit_svr(x, y, p);
    Eigen::MatrixXd x2(40, 3);
    x2 << x, x;
    Eigen::VectorXd y2(40);
    y2 << y, y;
    p.C = 1.0;
    const auto twice = fit_svr(x2, y2, p);
    CHECK((predict(once, x) - predict(twice, x)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("MLP gradient matches finite differences") {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd x = testing::randn(7, 3, rng);
    const Eigen::VectorXd y = testing::randn(7, 1, rng).col(0);
    for (const auto& hidden : {std::vector<int>{4}, std::vector<int>{4, 3}}) {
        auto net = detail::mlp_init(3, hidden, 4);
        const double l2 = 0.3;
        const auto g = detail::mlp_loss_and_gradient(net, x, y, l2);
        const double h = 1e-6;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
                auto up = net, down = net;
                up.weights[l].data()[i] += h;
                down.weights[l].data()[i] -= h;
                const double fd = (detail::mlp_loss_and_gradient(up, x, y, l2).loss -
                                   detail::mlp_loss_and_gradient(down, x, y, l2).loss) / (2 * h);
                CHECK(g.d_weights[l].data()[i] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
            }
            for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
                auto up = net, down = net;
                up.biases[l](i) += h;
                down.biases[l](i) -= h;
                const double fd = (detail::mlp_loss_and_gradient(up, x, y, l2).loss -
                                   detail::mlp_loss_and_gradient(down, x, y, l2).loss) / (2 * h);
                CHECK(g.d_biases[l](i) == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
            }
        }
    }
}

TEST_CASE("MLP is deterministic and learns a square") {
    Eigen::MatrixXd x(200, 1);
    x.col(0) = Eigen::VectorXd::LinSpaced(200, -2.0, 2.0);
    const Eigen::VectorXd y = x.col(0).array().square();
    MlpParams p;
    p.hidden = {32};
    p.max_epochs = 1500;
    p.learning_rate = 1e-2;
    p.early_stopping = false;
    p.seed = 3;
    const auto a = fit_mlp(x, y, p);
    const auto b = fit_mlp(x, y, p);
    const Eigen::VectorXd pa = predict(a, x);
    CHECK(pa == predict(b, x));
    const double rmse = std::sqrt((pa - y).squaredNorm() / 200.0);
    CHECK(rmse < 0.15);

    p.seed = 4;
    CHECK(predict(fit_mlp(x, y, p), x) != pa);

    MlpParams bad;
    bad.hidden = {};
    CHECK_THROWS_KIND(fit_mlp(x, y, bad), ErrorKind::InvalidArgument);
}

TEST_CASE("predict checks dimensions and models survive JSON") {
    const auto d = linear_data(30, 4, 0.5, 21);
    MlpParams mp;
    mp.hidden = {8, 4};
    mp.max_epochs = 50;
    const std::vector<TrainedModel> models{fit_elastic_net(d.x, d.y, ElasticNetParams{}), fit_svr(d.x, d.y, SvrParams{}),
                                           fit_mlp(d.x, d.y, mp)};
    for (const auto& m : models) {
        CHECK_THROWS_KIND(predict(m, d.x.leftCols(3)), ErrorKind::DimensionMismatch);
        const auto back = from_json(nlohmann::json::parse(to_json(m).dump()));
        CHECK(back.kind == m.kind);
        CHECK(predict(back, d.x) == predict(m, d.x));
        CHECK(to_json(back) == to_json(m));
    }
    CHECK(kind_from_string(to_string(Kind::Svr)) == Kind::Svr);
    CHECK_THROWS_KIND(kind_from_string("forest"), ErrorKind::InvalidArgument);
}

TEST_CASE("fits do not depend on row order") {
    const auto d = linear_data(40, 3, 0.8, 30);
    std::vector<Eigen::Index> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(1);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Eigen::MatrixXd xp = d.x(perm, Eigen::all);
    const Eigen::VectorXd yp = d.y(perm);
    MlpParams mp;
    mp.hidden = {6};
    mp.max_epochs = 40;
    CHECK(predict(fit_elastic_net(xp, yp, {}), d.x) == predict(fit_elastic_net(d.x, d.y, {}), d.x));
    CHECK(predict(fit_svr(xp, yp, {}), d.x) == predict(fit_svr(d.x, d.y, {}), d.x));
    CHECK(predict(fit_mlp(xp, yp, mp), d.x) == predict(fit_mlp(d.x, d.y, mp), d.x));
    CHECK(canonical_row_order(xp, yp).size() == 40);
}
