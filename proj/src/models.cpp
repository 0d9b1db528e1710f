#include "expressive/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "expressive/error.hpp"
#include "expressive/rng.hpp"

namespace expressive::models {

std::string to_string(Kind kind) {
    switch (kind) {
        case Kind::ElasticNet: return "elastic_net";
        case Kind::Svr: return "svr";
        case Kind::Mlp: return "mlp";
    }
    return "elastic_net";
}

Kind kind_from_string(const std::string& s) {
    if (s == "elastic_net") return Kind::ElasticNet;
    if (s == "svr") return Kind::Svr;
    if (s == "mlp") return Kind::Mlp;
    throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + s + "'");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.sd.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double v = (x.col(j).array() - s.mean(j)).square().sum() / n;
        s.sd(j) = v > 0.0 ? std::sqrt(v) : 0.0;
        // Columns that are constant up to rounding are treated as constant.
        if (s.sd(j) <= 1e-12 * std::max(1.0, std::abs(s.mean(j)))) s.sd(j) = 0.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size())
        throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(mean.size()) + " features, got " +
                                                      std::to_string(x.cols()));
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (sd(j) == 0.0)
            out.col(j).setZero();
        else
            out.col(j) = (x.col(j).array() - mean(j)) / sd(j);
    }
    return out;
}

std::vector<Eigen::Index> canonical_row_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
        return y(a) < y(b);
    });
    return order;
}

namespace {

void check_training_input(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "X rows and y length differ");
    if (x.rows() < 2) throw Error(ErrorKind::TooShort, "need at least 2 training rows");
    if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::NonFiniteValue, "training data contains non-finite values");
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> canonicalize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto order = canonical_row_order(x, y);
    Eigen::MatrixXd xs(x.rows(), x.cols());
    Eigen::VectorXd ys(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        xs.row(static_cast<Eigen::Index>(i)) = x.row(order[i]);
        ys(static_cast<Eigen::Index>(i)) = y(order[i]);
    }
    return {std::move(xs), std::move(ys)};
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

}  // namespace

// ------------------------------------------------------------------ Elastic Net

TrainedModel fit_elastic_net(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in, const ElasticNetParams& params) {
    check_training_input(x_in, y_in);
    if (!(params.alpha >= 0.0) || !(params.lambda >= 0.0 && params.lambda <= 1.0) || !(params.tol > 0.0) ||
        params.max_iter < 1)
        throw Error(ErrorKind::InvalidArgument, "elastic net: alpha >= 0, lambda in [0,1], tol > 0, max_iter >= 1");
    auto [x_raw, y] = canonicalize(x_in, y_in);

    TrainedModel model;
    model.kind = Kind::ElasticNet;
    model.scaler = Standardizer::fit(x_raw);
    const Eigen::MatrixXd x = model.scaler.apply(x_raw);
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j)
        if (!model.scaler.excluded(j)) active.push_back(j);
    Eigen::VectorXd col_scale(p);  // ||x_j||^2 / n, ~1 after standardization
    for (Eigen::Index j = 0; j < p; ++j) col_scale(j) = x.col(j).squaredNorm() * inv_n;

    const double y_mean = y.mean();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd resid = y.array() - y_mean;

    const double l1 = params.alpha * params.lambda;
    const double l2 = params.alpha * (1.0 - params.lambda);
    auto objective = [&] {
        return 0.5 * inv_n * resid.squaredNorm() + l1 * beta.lpNorm<1>() + 0.5 * l2 * beta.squaredNorm();
    };

    FitReport& rep = model.report;
    rep.converged = false;
    rep.objective_trace.push_back(objective());
    for (int it = 0; it < params.max_iter; ++it) {
        double max_change = 0.0;
        for (Eigen::Index j : active) {
            const double old = beta(j);
            const double z = x.col(j).dot(resid) * inv_n + col_scale(j) * old;
            const double updated = soft_threshold(z, l1) / (col_scale(j) + l2);
            if (updated != old) {
                resid.noalias() -= (updated - old) * x.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        rep.objective_trace.push_back(objective());
        rep.iterations = it + 1;
        if (max_change < params.tol) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged) rep.message = "NotConverged: coordinate descent hit max_iter";
    rep.objective = rep.objective_trace.back();

    LinearModel lin;
    lin.intercept = y_mean;
    lin.coef = beta;
    model.params = std::move(lin);
    return model;
}

// ------------------------------------------------------------------ SVR

namespace detail {

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
    return k;
}

double svr_dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double epsilon) {
    return 0.5 * beta.dot(kernel * beta) + epsilon * beta.lpNorm<1>() - y.dot(beta);
}

}  // namespace detail

TrainedModel fit_svr(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in, const SvrParams& params) {
    check_training_input(x_in, y_in);
    if (!(params.C > 0.0) || !(params.gamma > 0.0) || !(params.epsilon >= 0.0) || !(params.tol > 0.0))
        throw Error(ErrorKind::InvalidArgument, "svr: C > 0, gamma > 0, epsilon >= 0, tol > 0");
    auto [x_raw, y] = canonicalize(x_in, y_in);

    TrainedModel model;
    model.kind = Kind::Svr;
    model.scaler = Standardizer::fit(x_raw);
    const Eigen::MatrixXd x = model.scaler.apply(x_raw);
    const Eigen::Index n = x.rows();
    const Eigen::Index l = 2 * n;
    const Eigen::MatrixXd kernel = detail::rbf_kernel(x, x, params.gamma);
    const double c = params.C;

    // Variables a[0..n) are alpha (sign +1), a[n..2n) are alpha* (sign -1).
    Eigen::VectorXd a = Eigen::VectorXd::Zero(l);
    Eigen::VectorXd lin(l);
    std::vector<int> sign(static_cast<std::size_t>(l));
    for (Eigen::Index i = 0; i < n; ++i) {
        lin(i) = params.epsilon - y(i);
        lin(i + n) = params.epsilon + y(i);
        sign[static_cast<std::size_t>(i)] = 1;
        sign[static_cast<std::size_t>(i + n)] = -1;
    }
    auto q = [&](Eigen::Index i, Eigen::Index j) {
        return static_cast<double>(sign[static_cast<std::size_t>(i)] * sign[static_cast<std::size_t>(j)]) *
               kernel(i % n, j % n);
    };
    Eigen::VectorXd grad = lin;
    auto is_upper = [&](Eigen::Index t) { return a(t) >= c; };
    auto is_lower = [&](Eigen::Index t) { return a(t) <= 0.0; };
    constexpr double kTau = 1e-12;

    FitReport& rep = model.report;
    rep.converged = false;
    double gap = 0.0;
    long iter = 0;
    for (; iter < params.max_iter; ++iter) {
        // Second-order working-set selection (Fan, Chen & Lin 2005).
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i_sel = -1;
        for (Eigen::Index t = 0; t < l; ++t) {
            const int st = sign[static_cast<std::size_t>(t)];
            if ((st == 1 && !is_upper(t)) || (st == -1 && !is_lower(t))) {
                const double v = -st * grad(t);
                if (v > gmax) {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        Eigen::Index j_sel = -1;
        double obj_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < l; ++t) {
            const int st = sign[static_cast<std::size_t>(t)];
            if ((st == 1 && !is_lower(t)) || (st == -1 && !is_upper(t))) {
                const double yg = st * grad(t);
                gmax2 = std::max(gmax2, yg);
                if (i_sel < 0) continue;
                const double diff = gmax + yg;
                if (diff > 0.0) {
                    double quad = q(i_sel, i_sel) + q(t, t) -
                                  2.0 * sign[static_cast<std::size_t>(i_sel)] * st * q(i_sel, t);
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= obj_min) {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
        }
        gap = gmax + gmax2;
        if (!std::isfinite(gap)) gap = 0.0;  // one of the index sets is empty
        if (gap < params.tol || i_sel < 0 || j_sel < 0) {
            rep.converged = true;
            break;
        }

        const Eigen::Index i = i_sel;
        const Eigen::Index j = j_sel;
        const int yi = sign[static_cast<std::size_t>(i)];
        const int yj = sign[static_cast<std::size_t>(j)];
        const double old_ai = a(i);
        const double old_aj = a(j);
        const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
        if (yi != yj) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = a(i) - a(j);
            a(i) += delta;
            a(j) += delta;
            if (diff > 0.0) {
                if (a(j) < 0.0) {
                    a(j) = 0.0;
                    a(i) = diff;
                }
            } else if (a(i) < 0.0) {
                a(i) = 0.0;
                a(j) = -diff;
            }
            if (diff > 0.0) {
                if (a(i) > c) {
                    a(i) = c;
                    a(j) = c - diff;
                }
            } else if (a(j) > c) {
                a(j) = c;
                a(i) = c + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = a(i) + a(j);
            a(i) -= delta;
            a(j) += delta;
            if (sum > c) {
                if (a(i) > c) {
                    a(i) = c;
                    a(j) = sum - c;
                }
            } else if (a(j) < 0.0) {
                a(j) = 0.0;
                a(i) = sum;
            }
            if (sum > c) {
                if (a(j) > c) {
                    a(j) = c;
                    a(i) = sum - c;
                }
            } else if (a(i) < 0.0) {
                a(i) = 0.0;
                a(j) = sum;
            }
        }
        const double dai = a(i) - old_ai;
        const double daj = a(j) - old_aj;
        for (Eigen::Index t = 0; t < l; ++t) grad(t) += q(t, i) * dai + q(t, j) * daj;
    }
    rep.iterations = iter;
    rep.kkt_gap = gap;
    if (!rep.converged) rep.message = "NotConverged: SMO hit max_iter";

    // Bias from free variables, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < l; ++t) {
        const int st = sign[static_cast<std::size_t>(t)];
        const double yg = st * grad(t);
        if (is_upper(t)) {
            if (st == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (is_lower(t)) {
            if (st == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);

    rep.objective = 0.5 * a.dot(grad + lin);

    SvrModel svr;
    svr.gamma = params.gamma;
    svr.C = c;
    svr.bias = -rho;
    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < n; ++i)
        if (a(i) - a(i + n) != 0.0) sv.push_back(i);
    svr.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    svr.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        svr.support_vectors.row(static_cast<Eigen::Index>(k)) = x.row(sv[k]);
        svr.dual_coef(static_cast<Eigen::Index>(k)) = a(sv[k]) - a(sv[k] + n);
    }
    model.params = std::move(svr);
    return model;
}

// ------------------------------------------------------------------ MLP

namespace detail {

MlpModel mlp_init(int n_inputs, const std::vector<int>& hidden, std::uint64_t seed) {
    MlpModel net;
    Rng rng(derive_seed(seed, {0x4d4c50}));
    int fan_in = n_inputs;
    std::vector<int> sizes = hidden;
    sizes.push_back(1);
    for (int out : sizes) {
        const double bound = std::sqrt(3.0 / std::max(fan_in, 1));
        std::uniform_real_distribution<double> u(-bound, bound);
        Eigen::MatrixXd w(out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
        Eigen::VectorXd b(out);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = u(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
        fan_in = out;
    }
    return net;
}

Eigen::VectorXd mlp_forward(const MlpModel& net, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd act = x;
    const std::size_t layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = act * net.weights[l].transpose();
        z.rowwise() += net.biases[l].transpose();
        if (l + 1 < layers) act = z.array().tanh();
        else act = std::move(z);
    }
    return act.col(0);
}

MlpGradient mlp_loss_and_gradient(const MlpModel& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  double l2_alpha) {
    const std::size_t layers = net.weights.size();
    const double m = static_cast<double>(x.rows());
    std::vector<Eigen::MatrixXd> acts{x};
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = acts.back() * net.weights[l].transpose();
        z.rowwise() += net.biases[l].transpose();
        if (l + 1 < layers) z = z.array().tanh();
        acts.push_back(std::move(z));
    }
    const Eigen::VectorXd err = acts.back().col(0) - y;
    double w2 = 0.0;
    for (const auto& w : net.weights) w2 += w.squaredNorm();

    MlpGradient g;
    g.loss = 0.5 * err.squaredNorm() / m + 0.5 * l2_alpha * w2 / m;
    g.d_weights.resize(layers);
    g.d_biases.resize(layers);
    Eigen::MatrixXd delta = err / m;  // m x 1
    for (std::size_t l = layers; l-- > 0;) {
        g.d_weights[l] = delta.transpose() * acts[l] + (l2_alpha / m) * net.weights[l];
        g.d_biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd back = delta * net.weights[l];
            delta = back.array() * (1.0 - acts[l].array().square());
        }
    }
    return g;
}

}  // namespace detail

TrainedModel fit_mlp(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in, const MlpParams& params) {
    check_training_input(x_in, y_in);
    if (params.hidden.empty() || params.hidden.size() > 2 ||
        std::any_of(params.hidden.begin(), params.hidden.end(), [](int h) { return h < 1; }))
        throw Error(ErrorKind::InvalidArgument, "mlp: one or two hidden layers of positive width");
    if (!(params.l2_alpha >= 0.0) || !(params.learning_rate > 0.0) || params.max_epochs < 1 || params.batch_size < 1 ||
        !(params.validation_fraction >= 0.0 && params.validation_fraction < 1.0))
        throw Error(ErrorKind::InvalidArgument, "mlp: invalid training parameters");
    auto [x_raw, y] = canonicalize(x_in, y_in);

    TrainedModel model;
    model.kind = Kind::Mlp;
    model.scaler = Standardizer::fit(x_raw);
    const Eigen::MatrixXd x = model.scaler.apply(x_raw);
    const Eigen::Index n = x.rows();

    Rng rng(derive_seed(params.seed, {0x747261696e}));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::vector<Eigen::Index> train_idx = idx, val_idx;
    const auto n_val = static_cast<Eigen::Index>(std::floor(params.validation_fraction * static_cast<double>(n)));
    const bool early = params.early_stopping && n_val >= 1 && n - n_val >= 1;
    if (early) {
        std::shuffle(idx.begin(), idx.end(), rng);
        val_idx.assign(idx.begin(), idx.begin() + n_val);
        train_idx.assign(idx.begin() + n_val, idx.end());
        std::sort(val_idx.begin(), val_idx.end());
        std::sort(train_idx.begin(), train_idx.end());
    }
    auto gather = [&](const std::vector<Eigen::Index>& rows, Eigen::MatrixXd& xo, Eigen::VectorXd& yo) {
        xo.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
        yo.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            xo.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
            yo(static_cast<Eigen::Index>(i)) = y(rows[i]);
        }
    };
    Eigen::MatrixXd x_val;
    Eigen::VectorXd y_val;
    if (early) gather(val_idx, x_val, y_val);

    MlpModel net = detail::mlp_init(static_cast<int>(x.cols()), params.hidden, params.seed);
    // Adam state
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        mw.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        vw.push_back(mw.back());
        mb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        vb.push_back(mb.back());
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    const auto batch = std::min<Eigen::Index>(params.batch_size, static_cast<Eigen::Index>(train_idx.size()));
    double best = std::numeric_limits<double>::infinity();
    MlpModel best_net = net;
    int stale = 0;
    FitReport& rep = model.report;
    rep.converged = false;
    std::vector<Eigen::Index> order = train_idx;
    Eigen::MatrixXd xb;
    Eigen::VectorXd yb;
    for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch));
            gather(std::vector<Eigen::Index>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(stop)),
                   xb, yb);
            auto g = detail::mlp_loss_and_gradient(net, xb, yb, params.l2_alpha);
            if (!std::isfinite(g.loss)) throw Error(ErrorKind::Diverged, "mlp loss became non-finite");
            epoch_loss += g.loss * static_cast<double>(stop - start);
            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            const double lr = params.learning_rate * std::sqrt(c2) / c1;
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                mw[l] = beta1 * mw[l] + (1.0 - beta1) * g.d_weights[l];
                vw[l] = beta2 * vw[l] + (1.0 - beta2) * g.d_weights[l].cwiseAbs2();
                net.weights[l].array() -= lr * mw[l].array() / (vw[l].array().sqrt() + adam_eps);
                mb[l] = beta1 * mb[l] + (1.0 - beta1) * g.d_biases[l];
                vb[l] = beta2 * vb[l] + (1.0 - beta2) * g.d_biases[l].cwiseAbs2();
                net.biases[l].array() -= lr * mb[l].array() / (vb[l].array().sqrt() + adam_eps);
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        rep.iterations = epoch + 1;
        rep.objective_trace.push_back(epoch_loss);

        double monitored = epoch_loss;
        if (early) {
            monitored = 0.5 * (detail::mlp_forward(net, x_val) - y_val).squaredNorm() / static_cast<double>(y_val.size());
            if (!std::isfinite(monitored)) throw Error(ErrorKind::Diverged, "mlp validation loss became non-finite");
        }
        if (monitored < best - params.min_improvement) {
            best = monitored;
            best_net = net;
            stale = 0;
        } else if (++stale >= params.patience) {
            rep.converged = true;
            break;
        }
        if (monitored < best) {
            best = std::min(best, monitored);
            best_net = net;
        }
    }
    if (!rep.converged) rep.message = "NotConverged: mlp hit max_epochs";
    rep.objective = best;
    model.params = std::move(best_net);
    return model;
}

// ------------------------------------------------------------------ predict / serialize

Eigen::VectorXd predict(const TrainedModel& model, const Eigen::MatrixXd& x_raw) {
    const Eigen::MatrixXd x = model.scaler.apply(x_raw);
    switch (model.kind) {
        case Kind::ElasticNet: {
            const auto& lin = model.linear();
            return (x * lin.coef).array() + lin.intercept;
        }
        case Kind::Svr: {
            const auto& s = model.svr();
            if (s.dual_coef.size() == 0) return Eigen::VectorXd::Constant(x.rows(), s.bias);
            const Eigen::MatrixXd k = detail::rbf_kernel(x, s.support_vectors, s.gamma);
            return (k * s.dual_coef).array() + s.bias;
        }
        case Kind::Mlp:
            return detail::mlp_forward(model.mlp(), x);
    }
    return {};
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const nlohmann::json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd mat_from(const nlohmann::json& j) {
    Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const auto& data = j.at("data");
    for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) = vec_from(data.at(static_cast<std::size_t>(r))).transpose();
    return m;
}

}  // namespace

nlohmann::json to_json(const TrainedModel& model) {
    nlohmann::json j;
    j["kind"] = to_string(model.kind);
    j["standardization"] = {{"mean", vec_json(model.scaler.mean)}, {"sd", vec_json(model.scaler.sd)}};
    switch (model.kind) {
        case Kind::ElasticNet:
            j["intercept"] = model.linear().intercept;
            j["coef"] = vec_json(model.linear().coef);
            break;
        case Kind::Svr: {
            const auto& s = model.svr();
            j["support_vectors"] = mat_json(s.support_vectors);
            j["dual_coef"] = vec_json(s.dual_coef);
            j["bias"] = s.bias;
            j["gamma"] = s.gamma;
            j["C"] = s.C;
            break;
        }
        case Kind::Mlp: {
            nlohmann::json layers = nlohmann::json::array();
            const auto& net = model.mlp();
            for (std::size_t l = 0; l < net.weights.size(); ++l)
                layers.push_back({{"weights", mat_json(net.weights[l])}, {"biases", vec_json(net.biases[l])}});
            j["layers"] = layers;
            break;
        }
    }
    j["report"] = {{"converged", model.report.converged},
                   {"iterations", model.report.iterations},
                   {"objective", model.report.objective}};
    return j;
}

TrainedModel from_json(const nlohmann::json& j) {
    try {
        TrainedModel m;
        m.kind = kind_from_string(j.at("kind").get<std::string>());
        m.scaler.mean = vec_from(j.at("standardization").at("mean"));
        m.scaler.sd = vec_from(j.at("standardization").at("sd"));
        switch (m.kind) {
            case Kind::ElasticNet:
                m.params = LinearModel{j.at("intercept").get<double>(), vec_from(j.at("coef"))};
                break;
            case Kind::Svr:
                m.params = SvrModel{mat_from(j.at("support_vectors")), vec_from(j.at("dual_coef")),
                                    j.at("bias").get<double>(), j.at("gamma").get<double>(), j.at("C").get<double>()};
                break;
            case Kind::Mlp: {
                MlpModel net;
                for (const auto& layer : j.at("layers")) {
                    net.weights.push_back(mat_from(layer.at("weights")));
                    net.biases.push_back(vec_from(layer.at("biases")));
                }
                m.params = std::move(net);
                break;
            }
        }
        if (j.contains("report")) {
            m.report.converged = j["report"].value("converged", true);
            m.report.iterations = j["report"].value("iterations", 0L);
            m.report.objective = j["report"].value("objective", 0.0);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("model JSON: ") + e.what());
    }
}

}  // namespace expressive::models
