#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace expressive::models {

enum class Kind { ElasticNet, Svr, Mlp };

std::string to_string(Kind kind);
Kind kind_from_string(const std::string& s);

/// Objective (1/2n)||y - b0 - X b||^2 + alpha * (lambda ||b||_1 + (1 - lambda)/2 ||b||_2^2)
/// over standardized columns. lambda = 0 is ridge, lambda = 1 is lasso.
struct ElasticNetParams {
    double alpha = 1.0;
    double lambda = 0.5;
    double tol = 1e-6;
    int max_iter = 10000;
};

struct SvrParams {
    double C = 1.0;
    double gamma = 0.1;
    double epsilon = 0.1;
    double tol = 1e-4;
    long max_iter = 10'000'000;
};

struct MlpParams {
    std::vector<int> hidden{64};
    double l2_alpha = 1e-4;
    double learning_rate = 1e-3;
    int max_epochs = 500;
    int batch_size = 32;
    std::uint64_t seed = 0;
    bool early_stopping = true;
    double validation_fraction = 0.1;
    int patience = 10;
    double min_improvement = 1e-4;
};

/// Per-feature mean and population SD captured from training data. Columns
/// with zero SD are excluded: they standardize to 0.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    bool excluded(Eigen::Index j) const { return sd(j) == 0.0; }
};

struct LinearModel {
    double intercept = 0.0;
    Eigen::VectorXd coef;  // per standardized feature
};

struct SvrModel {
    Eigen::MatrixXd support_vectors;  // standardized
    Eigen::VectorXd dual_coef;        // alpha_i - alpha*_i, within [-C, C]
    double bias = 0.0;
    double gamma = 0.0;
    double C = 0.0;
};

/// weights[l] is (out x in); the final layer has a single linear output.
struct MlpModel {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

struct FitReport {
    bool converged = true;
    long iterations = 0;
    double objective = 0.0;
    double kkt_gap = 0.0;                 // SVR: m(alpha) - M(alpha) at exit
    std::vector<double> objective_trace;  // Elastic Net: objective after each sweep
    std::string message;
};

struct TrainedModel {
    Kind kind = Kind::ElasticNet;
    Standardizer scaler;
    std::variant<LinearModel, SvrModel, MlpModel> params;
    FitReport report;

    Eigen::Index n_features() const { return scaler.mean.size(); }
    const LinearModel& linear() const { return std::get<LinearModel>(params); }
    const SvrModel& svr() const { return std::get<SvrModel>(params); }
    const MlpModel& mlp() const { return std::get<MlpModel>(params); }
};

TrainedModel fit_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElasticNetParams& params);
TrainedModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params);
/// Throws Diverged if the loss becomes non-finite.
TrainedModel fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpParams& params);

/// Throws DimensionMismatch when the column count differs from training.
Eigen::VectorXd predict(const TrainedModel& model, const Eigen::MatrixXd& x);

nlohmann::json to_json(const TrainedModel& model);
TrainedModel from_json(const nlohmann::json& j);

/// Order used internally before fitting so results do not depend on row order.
std::vector<Eigen::Index> canonical_row_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

namespace detail {

struct MlpGradient {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
};

/// Loss (1/2m) sum (yhat - y)^2 + (l2 / 2m) sum ||W||^2 and its gradient, on
/// already-standardized inputs.
MlpGradient mlp_loss_and_gradient(const MlpModel& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  double l2_alpha);

Eigen::VectorXd mlp_forward(const MlpModel& net, const Eigen::MatrixXd& x);

MlpModel mlp_init(int n_inputs, const std::vector<int>& hidden, std::uint64_t seed);

/// Dual objective 0.5 b'Kb + eps sum|b| - y'b, b = alpha - alpha*.
double svr_dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double epsilon);

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

}  // namespace detail

}  // namespace expressive::models
