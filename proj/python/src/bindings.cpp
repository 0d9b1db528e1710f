#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "expressive/cli.hpp"
#include "expressive/error.hpp"
#include "expressive/evaluation.hpp"
#include "expressive/latent.hpp"
#include "expressive/linguistic.hpp"
#include "expressive/models.hpp"
#include "expressive/reliability.hpp"
#include "expressive/visual.hpp"

namespace py = pybind11;
using namespace expressive;

namespace {

RatingMatrix matrix_from(const Eigen::MatrixXd& scores, double lo, double hi) {
    std::vector<std::string> subjects, raters;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) subjects.push_back(std::to_string(i));
    for (Eigen::Index j = 0; j < scores.cols(); ++j) raters.push_back(std::to_string(j));
    return RatingMatrix("q", std::move(subjects), std::move(raters), scores, lo, hi);
}

py::dict icc(const Eigen::MatrixXd& scores, double confidence, double lo, double hi) {
    const auto e = reliability::icc_average_raters(matrix_from(scores, lo, hi), confidence);
    py::dict d;
    d["icc"] = e.icc;
    d["ci_low"] = e.ci_low;
    d["ci_high"] = e.ci_high;
    d["band"] = e.icc >= -1.0 && e.icc <= 1.0 ? std::string(reliability::to_string(reliability::interpret_icc(e.icc)))
                                              : std::string("out_of_range");
    return d;
}

py::dict cfa(const Eigen::MatrixXd& x, int chains, int warmup, int kept, std::uint64_t seed, const std::string& prior) {
    latent::CfaConfig cfg;
    cfg.n_chains = chains;
    cfg.n_warmup = warmup;
    cfg.n_kept = kept;
    cfg.seed = seed;
    if (prior == "sd") cfg.residual_prior = latent::ResidualPrior::StandardDeviation;
    else if (prior != "precision") throw Error(ErrorKind::InvalidArgument, "prior must be 'precision' or 'sd'");
    cfg.validate();
    latent::CfaPosterior post;
    {
        py::gil_scoped_release release;
        post = latent::fit_cfa(x, cfg);
    }
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        auto col = zscore(std::span<const double>(x.col(j).data(), static_cast<std::size_t>(x.rows())));
        z.col(j) = Eigen::Map<Eigen::VectorXd>(col.data(), x.rows());
    }
    const auto fit = latent::fit_indices(post, latent::sample_covariance(z), static_cast<long>(x.rows()));
    const auto scores = latent::factor_scores(post);
    py::dict d;
    d["loadings"] = post.loadings;
    d["residual_variances"] = post.residual_variances;
    d["intercepts"] = post.intercepts;
    d["factor_scores"] = scores.values;
    d["max_rhat"] = post.max_rhat;
    d["converged"] = post.converged;
    d["gamma_hat"] = fit.gamma_hat;
    d["cfi"] = fit.cfi;
    return d;
}

py::dict kin(const Eigen::MatrixXd& series, double rate) {
    const auto k = visual::kinematics(series, rate);
    py::dict d;
    d["displacement"] = k.displacement;
    d["velocity"] = k.velocity;
    d["acceleration"] = k.acceleration;
    return d;
}

std::map<std::string, double> percentages(const std::vector<std::string>& utterances,
                                          const std::map<std::string, std::vector<std::string>>& lexicon) {
    std::vector<std::string> tokens;
    for (const auto& u : utterances)
        for (auto& t : linguistic::tokenize(u)) tokens.push_back(std::move(t));
    return linguistic::category_percentages(tokens, linguistic::Lexicon(lexicon));
}

py::dict metric_dict(const std::vector<double>& y, const std::vector<double>& y_hat) {
    const auto m = evaluation::metrics(y, y_hat);
    py::dict d;
    d["rmse"] = m.rmse;
    d["r2"] = m.r2;
    d["r"] = m.r ? py::cast(*m.r) : py::none();
    return d;
}

py::dict bootstrap(const std::vector<double>& differences, int n_resamples, std::uint64_t seed) {
    const auto r = evaluation::bootstrap_differences(differences, n_resamples, seed);
    py::dict d;
    d["delta"] = r.delta;
    d["ci_low"] = r.ci_low;
    d["ci_high"] = r.ci_high;
    d["p"] = r.p;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the expressive toolkit";

    static py::exception<Error> error(m, "ExpressiveError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.def("icc_average_raters", &icc, py::arg("scores"), py::arg("confidence") = 0.95, py::arg("score_min") = 0.0,
          py::arg("score_max") = 4.0, "ICC(A,k) of a subjects x raters matrix with its confidence interval.");
    m.def("fit_cfa", &cfa, py::arg("indicators"), py::arg("chains") = 4, py::arg("warmup") = 1000,
          py::arg("kept") = 1000, py::arg("seed") = 1, py::arg("prior") = "precision",
          "Bayesian one-factor CFA; returns draws, factor scores and fit indices.");
    m.def("kinematics", &kin, py::arg("series"), py::arg("rate_hz") = visual::kIntervalRateHz);
    m.def("tokenize", &linguistic::tokenize, py::arg("text"));
    m.def("category_percentages", &percentages, py::arg("utterances"), py::arg("lexicon"));
    m.def("metrics", &metric_dict, py::arg("y"), py::arg("y_hat"));
    m.def("bootstrap_differences", &bootstrap, py::arg("differences"), py::arg("n_resamples") = 2000,
          py::arg("seed") = 0);
    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"expressive"};
        full.insert(full.end(), args.begin(), args.end());
        py::gil_scoped_release release;
        return cli::run(full);
    }, py::arg("args"), "Runs a CLI subcommand in-process and returns its exit code.");

    py::class_<models::TrainedModel>(m, "Model")
        .def("predict", [](const models::TrainedModel& self, const Eigen::MatrixXd& x) { return models::predict(self, x); })
        .def_property_readonly("kind", [](const models::TrainedModel& self) { return models::to_string(self.kind); })
        .def_property_readonly("coef", [](const models::TrainedModel& self) { return self.linear().coef; })
        .def_property_readonly("intercept", [](const models::TrainedModel& self) { return self.linear().intercept; })
        .def_property_readonly("converged", [](const models::TrainedModel& self) { return self.report.converged; })
        .def("to_json", [](const models::TrainedModel& self) { return models::to_json(self).dump(); })
        .def_static("from_json", [](const std::string& s) { return models::from_json(nlohmann::json::parse(s)); });

    m.def("fit_elastic_net", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double lambda) {
        models::ElasticNetParams p;
        p.alpha = alpha;
        p.lambda = lambda;
        return models::fit_elastic_net(x, y, p);
    }, py::arg("x"), py::arg("y"), py::arg("alpha") = 1.0, py::arg("lambda_") = 0.5);
    m.def("fit_svr", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double gamma, double epsilon) {
        models::SvrParams p;
        p.C = c;
        p.gamma = gamma;
        p.epsilon = epsilon;
        return models::fit_svr(x, y, p);
    }, py::arg("x"), py::arg("y"), py::arg("C") = 1.0, py::arg("gamma") = 0.1, py::arg("epsilon") = 0.1);
    m.def("fit_mlp", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<int> hidden, double l2,
                        int max_epochs, std::uint64_t seed) {
        models::MlpParams p;
        p.hidden = std::move(hidden);
        p.l2_alpha = l2;
        p.max_epochs = max_epochs;
        p.seed = seed;
        return models::fit_mlp(x, y, p);
    }, py::arg("x"), py::arg("y"), py::arg("hidden") = std::vector<int>{64}, py::arg("l2_alpha") = 1e-4,
          py::arg("max_epochs") = 500, py::arg("seed") = 0);
}
