#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "expressive/core.hpp"
#include "expressive/rng.hpp"

namespace expressive::latent {

/// One-factor model x_ij = nu_j + lambda_j * eta_i + e_ij, e_ij ~ N(0, psi_j),
/// eta_i ~ N(0, 1). Priors: nu_j, lambda_j normal; gamma (shape, rate) on the
/// precision 1/psi_j, or on the residual SD sqrt(psi_j) when
/// `residual_prior == ResidualPrior::StandardDeviation`.
enum class ResidualPrior { Precision, StandardDeviation };

struct CfaConfig {
    int n_chains = 4;
    int n_warmup = 1000;
    int n_kept = 1000;
    double loading_prior_mean = 0.0;
    double loading_prior_sd = 1.0;
    double intercept_prior_mean = 0.0;
    double intercept_prior_sd = 1.0;
    double precision_shape = 1.0;
    double precision_rate = 1.0;
    ResidualPrior residual_prior = ResidualPrior::Precision;
    std::uint64_t seed = 1;
    bool parallel_chains = false;
    double rhat_threshold = 1.05;

    void validate() const;
};

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double ci_low = 0.0;   // 2.5%
    double ci_high = 0.0;  // 97.5%
    double rhat = 1.0;     // split-Rhat
};

/// Draws are stored chain-major: row c * n_kept + t is draw t of chain c.
struct CfaPosterior {
    int n_chains = 0;
    int n_kept = 0;
    std::vector<std::string> participant_ids;
    std::vector<std::string> indicator_names;
    Eigen::MatrixXd loadings;            // draws x p
    Eigen::MatrixXd residual_variances;  // draws x p
    Eigen::MatrixXd intercepts;          // draws x p
    Eigen::MatrixXd latent;              // draws x n
    std::vector<ParameterSummary> summary;  // loadings, residual variances, intercepts, then latent scores
    double max_rhat = 1.0;
    bool converged = true;  // false means some split-Rhat exceeded the threshold

    Eigen::Index n_draws() const { return loadings.rows(); }
    Eigen::Index n_indicators() const { return loadings.cols(); }
    const ParameterSummary& find(const std::string& name) const;
};

struct FitIndices {
    double gamma_hat = 0.0;
    double cfi = 0.0;
    double gamma_hat_sd = 0.0;
    double cfi_sd = 0.0;
};

/// Standardizes each indicator column, then runs n_chains independent Gibbs
/// chains. Throws DegenerateInput for a constant indicator; non-convergence is
/// reported through `converged`, never thrown.
CfaPosterior fit_cfa(const Eigen::MatrixXd& indicators, const CfaConfig& config,
                     std::vector<std::string> participant_ids = {}, std::vector<std::string> indicator_names = {});

/// Per-draw ML discrepancy against `sample_cov`, turned into gamma-hat and CFI
/// and averaged over draws.
FitIndices fit_indices(const CfaPosterior& posterior, const Eigen::MatrixXd& sample_cov, long n);

/// Single-point indices for given loadings and residual variances.
FitIndices point_fit_indices(const Eigen::VectorXd& loadings, const Eigen::VectorXd& residual_variances,
                             const Eigen::MatrixXd& sample_cov, long n);

/// Covariance with divisor n (unit diagonal for standardized columns).
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x);

/// Posterior mean of each eta_i, re-standardized.
LabelVector factor_scores(const CfaPosterior& posterior);

struct TraitCorrelation {
    std::string trait;
    double r = 0.0;
};

std::vector<TraitCorrelation> external_validity(const LabelVector& scores, const TraitTable& traits);

/// Split-Rhat over chains (each chain split in half). `draws` is chain-major.
double split_rhat(const Eigen::Ref<const Eigen::VectorXd>& draws, int n_chains);

namespace detail {

struct GibbsState {
    Eigen::VectorXd loadings;
    Eigen::VectorXd intercepts;
    Eigen::VectorXd precisions;
    Eigen::VectorXd latent;
};

/// One full sweep: latent | rest, (intercept, loading) | rest jointly,
/// precision | rest, then the sign flip that keeps loading 0 positive.
void gibbs_sweep(GibbsState& state, const Eigen::MatrixXd& x, const CfaConfig& config, Rng& rng);

}  // namespace detail

}  // namespace expressive::latent
