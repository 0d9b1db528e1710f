#include "expressive/latent.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>

#include "expressive/error.hpp"
#include "expressive/stats.hpp"

namespace expressive::latent {

void CfaConfig::validate() const {
    if (n_chains < 1 || n_warmup < 1 || n_kept < 1)
        throw Error(ErrorKind::InvalidArgument, "chain, warmup and kept counts must be >= 1");
    if (!(loading_prior_sd > 0.0) || !(intercept_prior_sd > 0.0) || !(precision_shape > 0.0) ||
        !(precision_rate > 0.0))
        throw Error(ErrorKind::InvalidArgument, "prior scale/shape/rate parameters must be positive");
}

const ParameterSummary& CfaPosterior::find(const std::string& name) const {
    for (const auto& s : summary)
        if (s.name == name) return s;
    throw Error(ErrorKind::InvalidArgument, "no posterior parameter named " + name);
}

namespace detail {

void gibbs_sweep(GibbsState& s, const Eigen::MatrixXd& x, const CfaConfig& cfg, Rng& rng) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    std::normal_distribution<double> normal(0.0, 1.0);

    // eta_i | rest
    {
        const double prec = 1.0 + (s.loadings.array().square() * s.precisions.array()).sum();
        const double var = 1.0 / prec;
        const double sd = std::sqrt(var);
        const Eigen::VectorXd w = s.loadings.cwiseProduct(s.precisions);
        for (Eigen::Index i = 0; i < n; ++i) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) acc += w(j) * (x(i, j) - s.intercepts(j));
            s.latent(i) = var * acc + sd * normal(rng);
        }
    }

    // (nu_j, lambda_j) | rest: Bayesian regression of column j on [1, eta].
    const double sum_eta = s.latent.sum();
    const double sum_eta2 = s.latent.squaredNorm();
    const double nu_prior_prec = 1.0 / (cfg.intercept_prior_sd * cfg.intercept_prior_sd);
    const double lambda_prior_prec = 1.0 / (cfg.loading_prior_sd * cfg.loading_prior_sd);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double tau = s.precisions(j);
        const double sum_x = x.col(j).sum();
        const double sum_ex = x.col(j).dot(s.latent);
        const double p00 = nu_prior_prec + tau * static_cast<double>(n);
        const double p01 = tau * sum_eta;
        const double p11 = lambda_prior_prec + tau * sum_eta2;
        const double b0 = nu_prior_prec * cfg.intercept_prior_mean + tau * sum_x;
        const double b1 = lambda_prior_prec * cfg.loading_prior_mean + tau * sum_ex;
        const double det = p00 * p11 - p01 * p01;
        const double m0 = (p11 * b0 - p01 * b1) / det;
        const double m1 = (p00 * b1 - p01 * b0) / det;
        // Precision P = L L^T; a draw is m + L^{-T} z.
        const double l00 = std::sqrt(p00);
        const double l10 = p01 / l00;
        const double l11 = std::sqrt(p11 - l10 * l10);
        const double z0 = normal(rng);
        const double z1 = normal(rng);
        const double u1 = z1 / l11;
        const double u0 = (z0 - l10 * u1) / l00;
        s.intercepts(j) = m0 + u0;
        s.loadings(j) = m1 + u1;
    }

    // Translation move (eta + c, nu - lambda c): the likelihood is invariant,
    // so c is Gaussian under the eta and nu priors (Liu & Sabatti 2000).
    {
        const double prec = static_cast<double>(n) + nu_prior_prec * s.loadings.squaredNorm();
        const double lin = -s.latent.sum() +
                           nu_prior_prec * s.loadings.dot((s.intercepts.array() - cfg.intercept_prior_mean).matrix());
        const double c = lin / prec + normal(rng) / std::sqrt(prec);
        s.latent.array() += c;
        s.intercepts -= c * s.loadings;
    }

    // Scale move (g eta, lambda / g), g > 0. Target in u = log g is
    // exp((n - p) u) times the eta and lambda priors; one Metropolis step.
    {
        const double s_eta = s.latent.squaredNorm();
        auto log_target = [&](double u) {
            const double g = std::exp(u);
            const double lam = ((s.loadings.array() / g) - cfg.loading_prior_mean).square().sum();
            return static_cast<double>(n - p) * u - 0.5 * g * g * s_eta - 0.5 * lambda_prior_prec * lam;
        };
        const double step = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
        const double u = step * normal(rng);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        if (std::log(unif(rng)) < log_target(u) - log_target(0.0)) {
            const double g = std::exp(u);
            s.latent *= g;
            s.loadings /= g;
        }
    }

    // precision_j | rest
    for (Eigen::Index j = 0; j < p; ++j) {
        double sse = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = x(i, j) - s.intercepts(j) - s.loadings(j) * s.latent(i);
            sse += r * r;
        }
        if (cfg.residual_prior == ResidualPrior::Precision) {
            const double shape = cfg.precision_shape + 0.5 * static_cast<double>(n);
            const double rate = cfg.precision_rate + 0.5 * sse;
            std::gamma_distribution<double> gamma(shape, 1.0 / rate);
            s.precisions(j) = gamma(rng);
        } else {
            // Gamma(a, b) on sigma = tau^-1/2 induces tau^(-(a-1)/2 - 3/2) exp(-b sigma).
            // Propose from the gamma part exactly, accept on exp(-b sigma).
            const double shape = 0.5 * static_cast<double>(n) - 0.5 * (cfg.precision_shape - 1.0) - 0.5;
            std::gamma_distribution<double> gamma(shape, 2.0 / std::max(sse, 1e-300));
            const double proposal = gamma(rng);
            const double log_ratio =
                -cfg.precision_rate * (1.0 / std::sqrt(proposal) - 1.0 / std::sqrt(s.precisions(j)));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            if (std::log(unif(rng)) < log_ratio) s.precisions(j) = proposal;
        }
    }

    // The posterior is symmetric under (lambda, eta) -> (-lambda, -eta).
    if (s.loadings(0) < 0.0) {
        s.loadings = -s.loadings;
        s.latent = -s.latent;
    }
}

}  // namespace detail

double split_rhat(const Eigen::Ref<const Eigen::VectorXd>& draws, int n_chains) {
    const Eigen::Index total = draws.size();
    const Eigen::Index per_chain = total / n_chains;
    const Eigen::Index half = per_chain / 2;
    if (half < 2) return 1.0;
    const int m = 2 * n_chains;
    std::vector<double> means(static_cast<std::size_t>(m));
    std::vector<double> vars(static_cast<std::size_t>(m));
    for (int c = 0; c < n_chains; ++c)
        for (int h = 0; h < 2; ++h) {
            const auto seg = draws.segment(c * per_chain + h * half, half);
            const double mu = seg.mean();
            const double v = (seg.array() - mu).square().sum() / static_cast<double>(half - 1);
            means[static_cast<std::size_t>(2 * c + h)] = mu;
            vars[static_cast<std::size_t>(2 * c + h)] = v;
        }
    const double nn = static_cast<double>(half);
    double grand = 0.0;
    for (double mu : means) grand += mu;
    grand /= m;
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= nn / (m - 1);
    double w = 0.0;
    for (double v : vars) w += v;
    w /= m;
    if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double var_plus = (nn - 1.0) / nn * w + b / nn;
    return std::sqrt(var_plus / w);
}

namespace {

struct ChainDraws {
    Eigen::MatrixXd loadings, residual_variances, intercepts, latent;
};

ChainDraws run_chain(const Eigen::MatrixXd& x, const CfaConfig& cfg, int chain) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(chain)}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.5, 1.5);

    detail::GibbsState s;
    s.loadings.resize(p);
    s.intercepts.resize(p);
    s.precisions.resize(p);
    s.latent.resize(n);
    for (Eigen::Index j = 0; j < p; ++j) {
        s.loadings(j) = unif(rng);
        s.intercepts(j) = 0.1 * normal(rng);
        s.precisions(j) = unif(rng);
    }
    for (Eigen::Index i = 0; i < n; ++i) s.latent(i) = normal(rng);

    for (int t = 0; t < cfg.n_warmup; ++t) detail::gibbs_sweep(s, x, cfg, rng);

    ChainDraws d;
    d.loadings.resize(cfg.n_kept, p);
    d.residual_variances.resize(cfg.n_kept, p);
    d.intercepts.resize(cfg.n_kept, p);
    d.latent.resize(cfg.n_kept, n);
    for (int t = 0; t < cfg.n_kept; ++t) {
        detail::gibbs_sweep(s, x, cfg, rng);
        d.loadings.row(t) = s.loadings.transpose();
        d.residual_variances.row(t) = s.precisions.cwiseInverse().transpose();
        d.intercepts.row(t) = s.intercepts.transpose();
        d.latent.row(t) = s.latent.transpose();
    }
    return d;
}

ParameterSummary summarize(std::string name, const Eigen::Ref<const Eigen::VectorXd>& draws, int n_chains) {
    ParameterSummary s;
    s.name = std::move(name);
    std::vector<double> v(draws.data(), draws.data() + draws.size());
    s.mean = stats::mean(v);
    double ss = 0.0;
    for (double d : v) ss += (d - s.mean) * (d - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    std::sort(v.begin(), v.end());
    s.ci_low = stats::quantile_sorted(v, 0.025);
    s.ci_high = stats::quantile_sorted(v, 0.975);
    s.rhat = split_rhat(draws, n_chains);
    return s;
}

}  // namespace

CfaPosterior fit_cfa(const Eigen::MatrixXd& indicators, const CfaConfig& config,
                     std::vector<std::string> participant_ids, std::vector<std::string> indicator_names) {
    config.validate();
    const Eigen::Index n = indicators.rows();
    const Eigen::Index p = indicators.cols();
    if (n < 10) throw Error(ErrorKind::TooShort, "CFA needs at least 10 participants");
    if (config.residual_prior == ResidualPrior::StandardDeviation && static_cast<double>(n) <= config.precision_shape)
        throw Error(ErrorKind::InvalidArgument, "residual SD prior shape must be below the sample size");
    if (p < 3) throw Error(ErrorKind::InvalidArgument, "one-factor CFA needs at least 3 indicators");
    if (!indicators.allFinite()) throw Error(ErrorKind::NonFiniteValue, "CFA indicators contain non-finite values");
    if (participant_ids.empty())
        for (Eigen::Index i = 0; i < n; ++i) participant_ids.push_back(std::to_string(i));
    if (indicator_names.empty())
        for (Eigen::Index j = 0; j < p; ++j) indicator_names.push_back("x" + std::to_string(j + 1));
    if (participant_ids.size() != static_cast<std::size_t>(n) || indicator_names.size() != static_cast<std::size_t>(p))
        throw Error(ErrorKind::DimensionMismatch, "CFA id/name lists do not match indicator matrix");

    Eigen::MatrixXd x(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::VectorXd col = indicators.col(j);
        std::vector<double> v(col.data(), col.data() + n);
        try {
            auto z = zscore(v);
            x.col(j) = Eigen::Map<const Eigen::VectorXd>(z.data(), n);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ZeroVariance)
                throw Error(ErrorKind::DegenerateInput, "indicator " + indicator_names[static_cast<std::size_t>(j)] +
                                                            " has zero variance");
            throw;
        }
    }

    std::vector<ChainDraws> chains(static_cast<std::size_t>(config.n_chains));
    if (config.parallel_chains && config.n_chains > 1) {
        std::vector<std::future<ChainDraws>> futures;
        for (int c = 0; c < config.n_chains; ++c)
            futures.push_back(std::async(std::launch::async, [&, c] { return run_chain(x, config, c); }));
        for (int c = 0; c < config.n_chains; ++c) chains[static_cast<std::size_t>(c)] = futures[static_cast<std::size_t>(c)].get();
    } else {
        for (int c = 0; c < config.n_chains; ++c) chains[static_cast<std::size_t>(c)] = run_chain(x, config, c);
    }

    CfaPosterior post;
    post.n_chains = config.n_chains;
    post.n_kept = config.n_kept;
    post.participant_ids = std::move(participant_ids);
    post.indicator_names = std::move(indicator_names);
    const Eigen::Index draws = static_cast<Eigen::Index>(config.n_chains) * config.n_kept;
    post.loadings.resize(draws, p);
    post.residual_variances.resize(draws, p);
    post.intercepts.resize(draws, p);
    post.latent.resize(draws, n);
    for (int c = 0; c < config.n_chains; ++c) {
        const Eigen::Index off = static_cast<Eigen::Index>(c) * config.n_kept;
        const auto& ch = chains[static_cast<std::size_t>(c)];
        post.loadings.middleRows(off, config.n_kept) = ch.loadings;
        post.residual_variances.middleRows(off, config.n_kept) = ch.residual_variances;
        post.intercepts.middleRows(off, config.n_kept) = ch.intercepts;
        post.latent.middleRows(off, config.n_kept) = ch.latent;
    }

    for (Eigen::Index j = 0; j < p; ++j)
        post.summary.push_back(summarize("lambda[" + post.indicator_names[static_cast<std::size_t>(j)] + "]",
                                         post.loadings.col(j), config.n_chains));
    for (Eigen::Index j = 0; j < p; ++j)
        post.summary.push_back(summarize("epsilon[" + post.indicator_names[static_cast<std::size_t>(j)] + "]",
                                         post.residual_variances.col(j), config.n_chains));
    for (Eigen::Index j = 0; j < p; ++j)
        post.summary.push_back(summarize("nu[" + post.indicator_names[static_cast<std::size_t>(j)] + "]",
                                         post.intercepts.col(j), config.n_chains));
    for (Eigen::Index i = 0; i < n; ++i)
        post.summary.push_back(summarize("eta[" + post.participant_ids[static_cast<std::size_t>(i)] + "]",
                                         post.latent.col(i), config.n_chains));

    post.max_rhat = 1.0;
    for (const auto& s : post.summary) post.max_rhat = std::max(post.max_rhat, s.rhat);
    post.converged = post.max_rhat <= config.rhat_threshold;
    return post;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    const Eigen::RowVectorXd mu = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mu;
    return (c.transpose() * c) / static_cast<double>(x.rows());
}

namespace {

struct Discrepancy {
    double chisq;
    double chisq_baseline;
};

struct IndexContext {
    Eigen::Index p;
    double log_det_s;
    double chisq_baseline;
    double df;
    double df_baseline;
    long n;
};

IndexContext make_context(const Eigen::MatrixXd& s, long n) {
    const Eigen::Index p = s.rows();
    if (s.cols() != p) throw Error(ErrorKind::DimensionMismatch, "sample covariance must be square");
    if (!s.isApprox(s.transpose(), 1e-10)) throw Error(ErrorKind::SingularCovariance, "sample covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularCovariance, "sample covariance not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) log_det += 2.0 * std::log(l(j, j));
    double log_diag = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) log_diag += std::log(s(j, j));
    IndexContext ctx;
    ctx.p = p;
    ctx.log_det_s = log_det;
    ctx.n = n;
    ctx.chisq_baseline = static_cast<double>(n - 1) * (log_diag - log_det);
    ctx.df = static_cast<double>(p * (p + 1) / 2 - 2 * p);
    ctx.df_baseline = static_cast<double>(p * (p - 1) / 2);
    return ctx;
}

std::pair<double, double> indices_for(const IndexContext& ctx, const Eigen::MatrixXd& s, const Eigen::VectorXd& lambda,
                                      const Eigen::VectorXd& psi) {
    Eigen::MatrixXd sigma = lambda * lambda.transpose();
    sigma.diagonal() += psi;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularCovariance, "implied covariance not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index j = 0; j < ctx.p; ++j) log_det += 2.0 * std::log(l(j, j));
    const double trace = llt.solve(s).trace();
    const double f = log_det + trace - ctx.log_det_s - static_cast<double>(ctx.p);
    const double chisq = static_cast<double>(ctx.n - 1) * std::max(f, 0.0);
    const double excess = chisq - ctx.df;
    const double gamma_hat =
        static_cast<double>(ctx.p) / (static_cast<double>(ctx.p) + 2.0 * excess / static_cast<double>(ctx.n));
    const double denom = std::max({ctx.chisq_baseline - ctx.df_baseline, excess, 0.0});
    const double cfi = denom > 0.0 ? 1.0 - std::max(excess, 0.0) / denom : 1.0;
    return {std::clamp(gamma_hat, 0.0, 1.0), std::clamp(cfi, 0.0, 1.0)};
}

}  // namespace

FitIndices point_fit_indices(const Eigen::VectorXd& loadings, const Eigen::VectorXd& residual_variances,
                             const Eigen::MatrixXd& sample_cov, long n) {
    const auto ctx = make_context(sample_cov, n);
    if (loadings.size() != ctx.p || residual_variances.size() != ctx.p)
        throw Error(ErrorKind::DimensionMismatch, "parameter vectors do not match covariance size");
    auto [g, c] = indices_for(ctx, sample_cov, loadings, residual_variances);
    return FitIndices{g, c, 0.0, 0.0};
}

FitIndices fit_indices(const CfaPosterior& posterior, const Eigen::MatrixXd& sample_cov, long n) {
    const auto ctx = make_context(sample_cov, n);
    if (posterior.n_indicators() != ctx.p)
        throw Error(ErrorKind::DimensionMismatch, "posterior and covariance disagree on indicator count");
    const Eigen::Index draws = posterior.n_draws();
    if (draws == 0) throw Error(ErrorKind::EmptyInput, "posterior has no draws");
    std::vector<double> gh(static_cast<std::size_t>(draws)), cfi(static_cast<std::size_t>(draws));
    for (Eigen::Index d = 0; d < draws; ++d) {
        auto [g, c] = indices_for(ctx, sample_cov, posterior.loadings.row(d).transpose(),
                                  posterior.residual_variances.row(d).transpose());
        gh[static_cast<std::size_t>(d)] = g;
        cfi[static_cast<std::size_t>(d)] = c;
    }
    auto sd = [](const std::vector<double>& v, double m) {
        if (v.size() < 2) return 0.0;
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    FitIndices out;
    out.gamma_hat = stats::mean(gh);
    out.cfi = stats::mean(cfi);
    out.gamma_hat_sd = sd(gh, out.gamma_hat);
    out.cfi_sd = sd(cfi, out.cfi);
    return out;
}

LabelVector factor_scores(const CfaPosterior& posterior) {
    const Eigen::VectorXd m = posterior.latent.colwise().mean().transpose();
    std::vector<double> v(m.data(), m.data() + m.size());
    return LabelVector{posterior.participant_ids, zscore(v)};
}

std::vector<TraitCorrelation> external_validity(const LabelVector& scores, const TraitTable& traits) {
    std::map<std::string, Eigen::Index> row_of;
    for (std::size_t i = 0; i < traits.participant_ids.size(); ++i)
        row_of[traits.participant_ids[i]] = static_cast<Eigen::Index>(i);
    if (row_of.size() != scores.participant_ids.size())
        throw Error(ErrorKind::MissingParticipant, "trait table and scores cover different participants");
    std::vector<TraitCorrelation> out;
    for (Eigen::Index j = 0; j < traits.values.cols(); ++j) {
        std::vector<double> t;
        for (const auto& id : scores.participant_ids) {
            auto it = row_of.find(id);
            if (it == row_of.end()) throw Error(ErrorKind::MissingParticipant, id + " missing from trait table");
            t.push_back(traits.values(it->second, j));
        }
        auto r = stats::pearson(scores.values, t);
        const auto& name = traits.trait_names[static_cast<std::size_t>(j)];
        if (!r) throw Error(ErrorKind::ZeroVariance, "trait " + name + " (or the scores) has zero variance");
        out.push_back({name, *r});
    }
    return out;
}

}  // namespace expressive::latent
