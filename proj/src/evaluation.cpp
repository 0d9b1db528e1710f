#include "expressive/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "expressive/csv.hpp"
#include "expressive/error.hpp"
#include "expressive/rng.hpp"
#include "expressive/stats.hpp"

namespace expressive::evaluation {

std::string to_string(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::Visual: return "visual";
        case FeatureSet::Linguistic: return "linguistic";
        case FeatureSet::Multimodal: return "multimodal";
    }
    return "multimodal";
}

FeatureSet feature_set_from_string(const std::string& s) {
    if (s == "visual") return FeatureSet::Visual;
    if (s == "linguistic") return FeatureSet::Linguistic;
    if (s == "multimodal") return FeatureSet::Multimodal;
    throw Error(ErrorKind::InvalidArgument, "unknown modality '" + s + "' (visual, linguistic, multimodal)");
}

std::optional<Modality> modality_filter(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::Visual: return Modality::Visual;
        case FeatureSet::Linguistic: return Modality::Linguistic;
        case FeatureSet::Multimodal: return std::nullopt;
    }
    return std::nullopt;
}

// ------------------------------------------------------------------ grid

nlohmann::json HyperParams::to_json() const {
    switch (kind) {
        case models::Kind::ElasticNet: return {{"alpha", elastic_net.alpha}, {"lambda", elastic_net.lambda}};
        case models::Kind::Svr: return {{"C", svr.C}, {"gamma", svr.gamma}, {"epsilon", svr.epsilon}};
        case models::Kind::Mlp:
            return {{"layers", mlp.hidden.size()}, {"units", mlp.hidden.front()}, {"l2_alpha", mlp.l2_alpha}};
    }
    return {};
}

HyperParams HyperParams::from_json(models::Kind kind, const nlohmann::json& j) {
    HyperParams hp;
    hp.kind = kind;
    try {
        switch (kind) {
            case models::Kind::ElasticNet:
                hp.elastic_net.alpha = j.at("alpha").get<double>();
                hp.elastic_net.lambda = j.at("lambda").get<double>();
                break;
            case models::Kind::Svr:
                hp.svr.C = j.at("C").get<double>();
                hp.svr.gamma = j.at("gamma").get<double>();
                hp.svr.epsilon = j.value("epsilon", hp.svr.epsilon);
                break;
            case models::Kind::Mlp:
                hp.mlp.hidden.assign(j.at("layers").get<std::size_t>(), j.at("units").get<int>());
                hp.mlp.l2_alpha = j.at("l2_alpha").get<double>();
                break;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("hyperparameters: ") + e.what());
    }
    return hp;
}

HyperParamGrid::HyperParamGrid() {
    for (int e = -5; e <= 15; ++e) svr_c.push_back(std::ldexp(1.0, e));
    for (int e = -15; e <= 3; ++e) svr_gamma.push_back(std::ldexp(1.0, e));
}

std::vector<HyperParams> HyperParamGrid::points(models::Kind kind) const {
    validate();
    auto sorted = [](auto v, bool descending) {
        std::sort(v.begin(), v.end());
        if (descending) std::reverse(v.begin(), v.end());
        return v;
    };
    std::vector<HyperParams> out;
    switch (kind) {
        case models::Kind::ElasticNet:
            for (double a : sorted(en_alpha, true))
                for (double l : sorted(en_lambda, true)) {
                    HyperParams hp;
                    hp.kind = kind;
                    hp.elastic_net = en_base;
                    hp.elastic_net.alpha = a;
                    hp.elastic_net.lambda = l;
                    out.push_back(hp);
                }
            break;
        case models::Kind::Svr:
            for (double c : sorted(svr_c, false))
                for (double g : sorted(svr_gamma, false)) {
                    HyperParams hp;
                    hp.kind = kind;
                    hp.svr = svr_base;
                    hp.svr.C = c;
                    hp.svr.gamma = g;
                    out.push_back(hp);
                }
            break;
        case models::Kind::Mlp:
            for (double l2 : sorted(mlp_l2, true))
                for (int layers : sorted(mlp_layers, false))
                    for (int units : sorted(mlp_units, false)) {
                        HyperParams hp;
                        hp.kind = kind;
                        hp.mlp = mlp_base;
                        hp.mlp.l2_alpha = l2;
                        hp.mlp.hidden.assign(static_cast<std::size_t>(layers), units);
                        out.push_back(hp);
                    }
            break;
    }
    return out;
}

void HyperParamGrid::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorKind::ConfigError, std::string("grid: ") + what);
    };
    need(!en_alpha.empty() && !en_lambda.empty() && !svr_c.empty() && !svr_gamma.empty() && !mlp_layers.empty() &&
             !mlp_units.empty() && !mlp_l2.empty(),
         "every value set must be non-empty");
    for (double a : en_alpha) need(a >= 0.0, "alpha must be >= 0");
    for (double l : en_lambda) need(l >= 0.0 && l <= 1.0, "lambda must lie in [0,1]");
    for (double c : svr_c) need(c > 0.0, "C must be > 0");
    for (double g : svr_gamma) need(g > 0.0, "gamma must be > 0");
    for (int l : mlp_layers) need(l == 1 || l == 2, "layers must be 1 or 2");
    for (int u : mlp_units) need(u > 0, "units must be > 0");
    for (double a : mlp_l2) need(a >= 0.0, "l2_alpha must be >= 0");
}

void HyperParamGrid::apply_overrides(const nlohmann::json& overrides) {
    if (overrides.is_null()) return;
    if (!overrides.is_object()) throw Error(ErrorKind::ConfigError, "grid overrides must be an object");
    try {
        for (auto it = overrides.begin(); it != overrides.end(); ++it) {
            const auto& v = it.value();
            if (it.key() != "elastic_net" && it.key() != "svr" && it.key() != "mlp")
                throw Error(ErrorKind::ConfigError, "unknown grid section '" + it.key() + "'");
            if (!v.is_object()) throw Error(ErrorKind::ConfigError, "grid." + it.key() + " must be an object");
            for (auto f = v.begin(); f != v.end(); ++f) {
                const std::string key = it.key() + "." + f.key();
                const auto& x = f.value();
                if (key == "elastic_net.alpha") en_alpha = x.get<std::vector<double>>();
                else if (key == "elastic_net.lambda") en_lambda = x.get<std::vector<double>>();
                else if (key == "elastic_net.tol") en_base.tol = x.get<double>();
                else if (key == "elastic_net.max_iter") en_base.max_iter = x.get<int>();
                else if (key == "svr.C") svr_c = x.get<std::vector<double>>();
                else if (key == "svr.gamma") svr_gamma = x.get<std::vector<double>>();
                else if (key == "svr.epsilon") svr_base.epsilon = x.get<double>();
                else if (key == "svr.tol") svr_base.tol = x.get<double>();
                else if (key == "mlp.layers") mlp_layers = x.get<std::vector<int>>();
                else if (key == "mlp.units") mlp_units = x.get<std::vector<int>>();
                else if (key == "mlp.l2_alpha") mlp_l2 = x.get<std::vector<double>>();
                else if (key == "mlp.learning_rate") mlp_base.learning_rate = x.get<double>();
                else if (key == "mlp.max_epochs") mlp_base.max_epochs = x.get<int>();
                else if (key == "mlp.batch_size") mlp_base.batch_size = x.get<int>();
                else if (key == "mlp.patience") mlp_base.patience = x.get<int>();
                else throw Error(ErrorKind::ConfigError, "unknown grid key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("grid overrides: ") + e.what());
    }
    validate();
}

// ------------------------------------------------------------------ folds

namespace {

// Deals the given groups into k folds; see make_folds.
std::vector<int> deal(const std::vector<double>& group_means, int k, Rng& rng) {
    const auto bins = quartile_bins(group_means);
    std::vector<int> fold(group_means.size(), -1);
    int ptr = 0;
    for (int q = 0; q < 4; ++q) {
        std::vector<std::size_t> members;
        for (std::size_t g = 0; g < group_means.size(); ++g)
            if (bins.bins[g] == q) members.push_back(g);
        std::shuffle(members.begin(), members.end(), rng);
        for (auto g : members) {
            fold[g] = ptr;
            ptr = (ptr + 1) % k;
        }
    }
    return fold;
}

}  // namespace

FoldAssignment make_folds(const LabelVector& labels, const GroupAssignment& groups, int k_outer, int k_inner,
                          std::uint64_t seed, int repetition) {
    if (k_outer < 2 || k_inner < 2) throw Error(ErrorKind::InvalidArgument, "fold counts must be >= 2");
    if (labels.participant_ids.size() != labels.values.size())
        throw Error(ErrorKind::LengthMismatch, "label ids and values differ in length");
    const std::size_t n = labels.participant_ids.size();

    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
        auto it = groups.group_of.find(labels.participant_ids[i]);
        if (it == groups.group_of.end())
            throw Error(ErrorKind::MissingParticipant, "participant " + labels.participant_ids[i] + " has no group");
        members[it->second].push_back(i);
    }
    const int n_groups = static_cast<int>(members.size());
    if (n_groups < k_outer)
        throw Error(ErrorKind::TooFewGroups,
                    std::to_string(n_groups) + " groups cannot fill " + std::to_string(k_outer) + " outer folds");

    std::vector<std::vector<std::size_t>> group_rows;
    std::vector<double> means;
    for (auto& [id, rows] : members) {
        double s = 0.0;
        for (auto r : rows) s += labels.values[r];
        means.push_back(s / static_cast<double>(rows.size()));
        group_rows.push_back(rows);
    }

    FoldAssignment fa;
    fa.repetition = repetition;
    fa.k_outer = k_outer;
    fa.k_inner = k_inner;
    fa.participant_ids = labels.participant_ids;
    fa.outer.assign(n, -1);

    Rng outer_rng(derive_seed(seed, {static_cast<std::uint64_t>(repetition)}));
    const auto group_fold = deal(means, k_outer, outer_rng);
    for (std::size_t g = 0; g < group_rows.size(); ++g)
        for (auto r : group_rows[g]) fa.outer[r] = group_fold[g];

    fa.inner.assign(static_cast<std::size_t>(k_outer), std::vector<int>(n, -1));
    for (int f = 0; f < k_outer; ++f) {
        std::vector<std::size_t> train_groups;
        std::vector<double> train_means;
        for (std::size_t g = 0; g < group_rows.size(); ++g)
            if (group_fold[g] != f) {
                train_groups.push_back(g);
                train_means.push_back(means[g]);
            }
        if (static_cast<int>(train_groups.size()) < k_inner)
            throw Error(ErrorKind::TooFewGroups, std::to_string(train_groups.size()) + " training groups cannot fill " +
                                                     std::to_string(k_inner) + " inner folds");
        Rng inner_rng(derive_seed(seed, {static_cast<std::uint64_t>(repetition), static_cast<std::uint64_t>(f)}));
        const auto inner_fold = deal(train_means, k_inner, inner_rng);
        for (std::size_t t = 0; t < train_groups.size(); ++t)
            for (auto r : group_rows[train_groups[t]]) fa.inner[static_cast<std::size_t>(f)][r] = inner_fold[t];
    }
    return fa;
}

// ------------------------------------------------------------------ metrics

Metrics metrics(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw Error(ErrorKind::LengthMismatch, "y and y_hat differ in length");
    if (y.size() < 2) throw Error(ErrorKind::TooShort, "metrics need at least 2 values");
    const double y_mean = stats::mean(y);
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
        sst += (y[i] - y_mean) * (y[i] - y_mean);
    }
    if (sst == 0.0) throw Error(ErrorKind::DegenerateInput, "R^2 is undefined for constant targets");
    Metrics m;
    m.rmse = std::sqrt(sse / static_cast<double>(y.size()));
    m.r2 = 1.0 - sse / sst;
    m.r = stats::pearson(y_hat, y);
    return m;
}

// ------------------------------------------------------------------ nested CV

namespace {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (jobs == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> workers;
        const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
        for (std::size_t w = 0; w < count; ++w)
            workers.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

models::TrainedModel fit(const HyperParams& hp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    switch (hp.kind) {
        case models::Kind::ElasticNet: return models::fit_elastic_net(x, y, hp.elastic_net);
        case models::Kind::Svr: return models::fit_svr(x, y, hp.svr);
        case models::Kind::Mlp: return models::fit_mlp(x, y, hp.mlp);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown algorithm");
}

void gather(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows,
            Eigen::MatrixXd& xo, Eigen::VectorXd& yo) {
    xo.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    yo.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        xo.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
        yo(static_cast<Eigen::Index>(i)) = y(rows[i]);
    }
}

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
    return std::sqrt((y - y_hat).squaredNorm() / static_cast<double>(y.size()));
}

}  // namespace

std::vector<EvaluationRecord> nested_cv(const Dataset& dataset, models::Kind algorithm, FeatureSet modality,
                                        const HyperParamGrid& grid, const NestedCvConfig& config) {
    validate(dataset);
    if (config.n_reps < 1) throw Error(ErrorKind::InvalidArgument, "n_reps must be >= 1");
    const auto points = grid.points(algorithm);

    const FeatureTable table = dataset.features.participant_ids() == dataset.labels.participant_ids
                                   ? dataset.features
                                   : dataset.features.reordered(dataset.labels.participant_ids);
    const auto cols = table.select(modality_filter(modality));
    if (cols.empty()) throw Error(ErrorKind::InvalidArgument, "no " + to_string(modality) + " features in dataset");
    Eigen::MatrixXd x(table.n_rows(), static_cast<Eigen::Index>(cols.size()));
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        x.col(static_cast<Eigen::Index>(c)) = table.values().col(cols[c]);
        names.push_back(table.columns()[static_cast<std::size_t>(cols[c])].name);
    }
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(dataset.labels.values.data(),
                                                               static_cast<Eigen::Index>(dataset.labels.values.size()));

    std::vector<FoldAssignment> folds;
    for (int r = 0; r < config.n_reps; ++r)
        folds.push_back(make_folds(dataset.labels, dataset.groups, config.k_outer, config.k_inner, config.seed, r));

    const auto n_reps = static_cast<std::size_t>(config.n_reps);
    const auto k_outer = static_cast<std::size_t>(config.k_outer);
    const std::size_t n_points = points.size();
    const auto n = static_cast<std::size_t>(y.size());

    auto with_seed = [&](HyperParams hp, std::initializer_list<std::uint64_t> path) {
        hp.mlp.seed = derive_seed(config.seed, path);
        return hp;
    };

    // Phase 1: mean inner-validation RMSE per (repetition, outer fold, grid point).
    std::vector<double> inner_score(n_reps * k_outer * n_points);
    std::vector<int> inner_failures(inner_score.size());
    parallel_for(inner_score.size(), config.jobs, [&](std::size_t unit) {
        const std::size_t r = unit / (k_outer * n_points);
        const std::size_t f = (unit / n_points) % k_outer;
        const std::size_t g = unit % n_points;
        const auto& inner = folds[r].inner[f];
        double total = 0.0;
        int failures = 0;
        Eigen::MatrixXd xt, xv;
        Eigen::VectorXd yt, yv;
        for (int v = 0; v < config.k_inner; ++v) {
            std::vector<Eigen::Index> train, val;
            for (std::size_t i = 0; i < n; ++i) {
                if (inner[i] < 0) continue;
                (inner[i] == v ? val : train).push_back(static_cast<Eigen::Index>(i));
            }
            gather(x, y, train, xt, yt);
            gather(x, y, val, xv, yv);
            const auto hp = with_seed(points[g], {r, f, g, static_cast<std::uint64_t>(v)});
            const auto model = fit(hp, xt, yt);
            if (!model.report.converged) ++failures;
            total += rmse(yv, models::predict(model, xv));
        }
        inner_score[unit] = total / config.k_inner;
        inner_failures[unit] = failures;
    });

    // Phase 2: refit the winner on the outer-training set and score the test fold.
    std::vector<EvaluationRecord> records(n_reps * k_outer);
    parallel_for(records.size(), config.jobs, [&](std::size_t unit) {
        const std::size_t r = unit / k_outer;
        const std::size_t f = unit % k_outer;
        const std::size_t base = unit * n_points;
        std::size_t best = 0;
        int failures = 0;
        for (std::size_t g = 0; g < n_points; ++g) {
            if (inner_score[base + g] < inner_score[base + best]) best = g;
            failures += inner_failures[base + g];
        }
        std::vector<Eigen::Index> train, test;
        for (std::size_t i = 0; i < n; ++i)
            (folds[r].outer[i] == static_cast<int>(f) ? test : train).push_back(static_cast<Eigen::Index>(i));
        Eigen::MatrixXd xt, xs;
        Eigen::VectorXd yt, ys;
        gather(x, y, train, xt, yt);
        gather(x, y, test, xs, ys);
        const auto hp = with_seed(points[best], {r, f, best, 0xFFFF'FFFFu});
        auto model = fit(hp, xt, yt);
        const Eigen::VectorXd pred = models::predict(model, xs);
        const auto m = metrics(std::span<const double>(ys.data(), static_cast<std::size_t>(ys.size())),
                               std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));

        EvaluationRecord& rec = records[unit];
        rec.repetition = static_cast<int>(r);
        rec.outer_fold = static_cast<int>(f);
        rec.algorithm = algorithm;
        rec.modality = modality;
        rec.hyperparameters = hp.to_json();
        rec.rmse = m.rmse;
        rec.r2 = m.r2;
        rec.r = m.r;
        rec.inner_not_converged = failures;
        rec.feature_names = names;
        rec.model = std::move(model);
    });
    return records;
}

// ------------------------------------------------------------------ bootstrap

std::string to_string(Metric m) {
    switch (m) {
        case Metric::Rmse: return "rmse";
        case Metric::R2: return "r2";
        case Metric::R: return "r";
    }
    return "rmse";
}

Metric metric_from_string(const std::string& s) {
    if (s == "rmse") return Metric::Rmse;
    if (s == "r2") return Metric::R2;
    if (s == "r") return Metric::R;
    throw Error(ErrorKind::InvalidArgument, "unknown metric '" + s + "' (rmse, r2, r)");
}

std::vector<double> paired_differences(const std::vector<EvaluationRecord>& a, const std::vector<EvaluationRecord>& b,
                                       Metric metric) {
    if (a.size() != b.size())
        throw Error(ErrorKind::UnpairedRecords,
                    "record counts differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    std::map<std::pair<int, int>, const EvaluationRecord*> by_key;
    for (const auto& rec : b)
        if (!by_key.emplace(std::pair{rec.repetition, rec.outer_fold}, &rec).second)
            throw Error(ErrorKind::UnpairedRecords, "duplicate (repetition, fold) key");
    std::set<std::pair<int, int>> seen;
    std::vector<double> d;
    for (const auto& ra : a) {
        const std::pair key{ra.repetition, ra.outer_fold};
        auto it = by_key.find(key);
        if (it == by_key.end() || !seen.insert(key).second)
            throw Error(ErrorKind::UnpairedRecords, "no partner for repetition " + std::to_string(ra.repetition) +
                                                        ", fold " + std::to_string(ra.outer_fold));
        const auto& rb = *it->second;
        switch (metric) {
            case Metric::Rmse: d.push_back(ra.rmse - rb.rmse); break;
            case Metric::R2: d.push_back(ra.r2 - rb.r2); break;
            case Metric::R:
                if (ra.r && rb.r) d.push_back(*ra.r - *rb.r);
                break;
        }
    }
    return d;
}

ComparisonResult bootstrap_differences(std::span<const double> differences, int n_resamples, std::uint64_t seed) {
    if (differences.empty()) throw Error(ErrorKind::EmptyInput, "no paired differences to compare");
    if (n_resamples < 1) throw Error(ErrorKind::InvalidArgument, "n_resamples must be >= 1");
    const std::size_t n = differences.size();
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> medians(static_cast<std::size_t>(n_resamples));
    std::vector<double> sample(n);
    for (auto& m : medians) {
        for (auto& s : sample) s = differences[pick(rng)];
        m = stats::median(sample);
    }
    std::size_t le = 0, ge = 0;
    for (double m : medians) {
        le += m <= 0.0;
        ge += m >= 0.0;
    }
    ComparisonResult res;
    res.n_pairs = n;
    res.n_resamples = n_resamples;
    res.delta = stats::median(std::vector<double>(differences.begin(), differences.end()));
    std::sort(medians.begin(), medians.end());
    res.ci_low = std::min(res.delta, stats::quantile_sorted(medians, 0.025));
    res.ci_high = std::max(res.delta, stats::quantile_sorted(medians, 0.975));
    const double b = static_cast<double>(n_resamples);
    res.p = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / b);
    res.p = std::max(res.p, 1.0 / b);
    return res;
}

ComparisonResult bootstrap_compare(const std::vector<EvaluationRecord>& a, const std::vector<EvaluationRecord>& b,
                                   Metric metric, int n_resamples, std::uint64_t seed, const std::string& pair_label) {
    const auto d = paired_differences(a, b, metric);
    auto res = bootstrap_differences(d, n_resamples, seed);
    res.metric = to_string(metric);
    res.pair_label = pair_label;
    return res;
}

// ------------------------------------------------------------------ coefficients / summary

std::vector<CoefficientSummary> coefficient_summary(const std::vector<EvaluationRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "no records to summarize");
    const auto& names = records.front().feature_names;
    for (const auto& rec : records) {
        if (!rec.model || rec.model->kind != models::Kind::ElasticNet)
            throw Error(ErrorKind::InvalidArgument, "coefficient summary needs Elastic Net records with models");
        if (rec.feature_names != names || rec.model->linear().coef.size() != static_cast<Eigen::Index>(names.size()))
            throw Error(ErrorKind::MixedFeatureSets, "records were fit on different feature sets");
    }
    std::vector<CoefficientSummary> out;
    for (std::size_t j = 0; j < names.size(); ++j) {
        std::vector<double> v;
        v.reserve(records.size());
        for (const auto& rec : records) v.push_back(rec.model->linear().coef(static_cast<Eigen::Index>(j)));
        std::sort(v.begin(), v.end());
        CoefficientSummary s;
        s.feature = names[j];
        s.median = stats::quantile_sorted(v, 0.5);
        s.q25 = stats::quantile_sorted(v, 0.25);
        s.q75 = stats::quantile_sorted(v, 0.75);
        s.nonzero_median = s.median != 0.0;
        out.push_back(s);
    }
    return out;
}

SummaryRow summarize(const std::vector<EvaluationRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "no records to summarize");
    SummaryRow row;
    row.algorithm = records.front().algorithm;
    row.modality = records.front().modality;
    std::vector<double> rmse, r2, r;
    for (const auto& rec : records) {
        rmse.push_back(rec.rmse);
        r2.push_back(rec.r2);
        if (rec.r) r.push_back(*rec.r);
        else ++row.n_undefined_r;
    }
    row.n_records = records.size();
    row.median_rmse = stats::median(rmse);
    row.median_r2 = stats::median(r2);
    if (!r.empty()) row.median_r = stats::median(r);
    return row;
}

// ------------------------------------------------------------------ I/O

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    return out;
}

}  // namespace

void write_records_csv(const std::vector<EvaluationRecord>& records, const std::filesystem::path& path) {
    auto out = open_out(path);
    csv::write_row(out, {"repetition", "outer_fold", "algorithm", "modality", "rmse", "r2", "r", "inner_not_converged",
                         "hyperparameters"});
    for (const auto& rec : records)
        csv::write_row(out, {std::to_string(rec.repetition), std::to_string(rec.outer_fold),
                             models::to_string(rec.algorithm), to_string(rec.modality), csv::format_double(rec.rmse),
                             csv::format_double(rec.r2), rec.r ? csv::format_double(*rec.r) : "",
                             std::to_string(rec.inner_not_converged), rec.hyperparameters.dump()});
}

void write_models_jsonl(const std::vector<EvaluationRecord>& records, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& rec : records) {
        if (!rec.model) continue;
        nlohmann::json j{{"repetition", rec.repetition},
                         {"outer_fold", rec.outer_fold},
                         {"feature_names", rec.feature_names},
                         {"model", models::to_json(*rec.model)}};
        out << j.dump() << '\n';
    }
}

std::vector<EvaluationRecord> read_records(const std::filesystem::path& records_csv) {
    const auto t = csv::read(records_csv);
    const auto c_rep = t.require_column("repetition"), c_fold = t.require_column("outer_fold"),
               c_alg = t.require_column("algorithm"), c_mod = t.require_column("modality"),
               c_rmse = t.require_column("rmse"), c_r2 = t.require_column("r2"), c_r = t.require_column("r"),
               c_hp = t.require_column("hyperparameters");
    const auto c_nc = t.column("inner_not_converged");
    std::vector<EvaluationRecord> out;
    std::map<std::pair<int, int>, std::size_t> index;
    for (const auto& row : t.rows) {
        const auto where = records_csv.string() + ":" + std::to_string(row.line);
        EvaluationRecord rec;
        try {
            rec.repetition = std::stoi(row.cells[c_rep]);
            rec.outer_fold = std::stoi(row.cells[c_fold]);
            if (c_nc) rec.inner_not_converged = std::stoi(row.cells[*c_nc]);
            rec.hyperparameters = nlohmann::json::parse(row.cells[c_hp]);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::ParseError, where + ": " + e.what());
        }
        rec.algorithm = models::kind_from_string(row.cells[c_alg]);
        rec.modality = feature_set_from_string(row.cells[c_mod]);
        rec.rmse = csv::to_double(t, row, c_rmse);
        rec.r2 = csv::to_double(t, row, c_r2);
        if (!row.cells[c_r].empty()) rec.r = csv::to_double(t, row, c_r);
        index[{rec.repetition, rec.outer_fold}] = out.size();
        out.push_back(std::move(rec));
    }

    const auto models_path = records_csv.parent_path() / "models.jsonl";
    if (std::filesystem::exists(models_path)) {
        std::ifstream in(models_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (csv::trim(line).empty()) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                auto it = index.find({j.at("repetition").get<int>(), j.at("outer_fold").get<int>()});
                if (it == index.end()) throw Error(ErrorKind::UnpairedRecords, "model without a matching record");
                auto& rec = out[it->second];
                rec.feature_names = j.at("feature_names").get<std::vector<std::string>>();
                rec.model = models::from_json(j.at("model"));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::ParseError, models_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
            } catch (const Error& e) {
                throw Error(e.kind(), models_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    return out;
}

nlohmann::json to_json(const SummaryRow& row) {
    return {{"algorithm", models::to_string(row.algorithm)},
            {"modality", to_string(row.modality)},
            {"median_rmse", row.median_rmse},
            {"median_r2", row.median_r2},
            {"median_r", row.median_r ? nlohmann::json(*row.median_r) : nlohmann::json(nullptr)},
            {"n_records", row.n_records},
            {"n_undefined_r", row.n_undefined_r}};
}

nlohmann::json to_json(const ComparisonResult& result) {
    return {{"metric", result.metric},       {"pair", result.pair_label}, {"delta", result.delta},
            {"ci_low", result.ci_low},       {"ci_high", result.ci_high}, {"p", result.p},
            {"n_pairs", result.n_pairs},     {"n_resamples", result.n_resamples}};
}

void write_coefficients_csv(const std::vector<CoefficientSummary>& summary, const std::filesystem::path& path) {
    std::vector<std::size_t> order(summary.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(summary[a].median) > std::abs(summary[b].median);
    });
    auto out = open_out(path);
    csv::write_row(out, {"feature", "median", "q25", "q75", "nonzero_median"});
    for (auto i : order) {
        const auto& s = summary[i];
        csv::write_row(out, {s.feature, csv::format_double(s.median), csv::format_double(s.q25),
                             csv::format_double(s.q75), s.nonzero_median ? "true" : "false"});
    }
}

}  // namespace expressive::evaluation
