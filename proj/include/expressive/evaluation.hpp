#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "expressive/core.hpp"
#include "expressive/models.hpp"

namespace expressive::evaluation {

enum class FeatureSet { Visual, Linguistic, Multimodal };

std::string to_string(FeatureSet fs);
FeatureSet feature_set_from_string(const std::string& s);
std::optional<Modality> modality_filter(FeatureSet fs);

/// One point of a grid, tagged by algorithm.
struct HyperParams {
    models::Kind kind = models::Kind::ElasticNet;
    models::ElasticNetParams elastic_net;
    models::SvrParams svr;
    models::MlpParams mlp;

    nlohmann::json to_json() const;
    static HyperParams from_json(models::Kind kind, const nlohmann::json& j);
};

struct HyperParamGrid {
    std::vector<double> en_alpha{0.01, 0.05, 0.1, 0.5, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
    std::vector<double> en_lambda{0.0, 0.1, 0.5, 0.7, 0.9, 0.95, 0.99, 1.0};
    std::vector<double> svr_c;      // 2^-5 .. 2^15
    std::vector<double> svr_gamma;  // 2^-15 .. 2^3
    std::vector<int> mlp_layers{1, 2};
    std::vector<int> mlp_units{64, 128};
    std::vector<double> mlp_l2{0.0001, 0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 1.1, 1.2,
                               1.3,    1.4,   1.5,  1.7,  1.9, 2.0, 3.0, 4.0, 5.0};
    models::ElasticNetParams en_base;
    models::SvrParams svr_base;
    models::MlpParams mlp_base;

    HyperParamGrid();

    /// Grid points ordered from strongest to weakest regularization, so the
    /// first point with the minimum validation error wins ties.
    std::vector<HyperParams> points(models::Kind kind) const;

    void validate() const;
    /// Applies overrides such as {"elastic_net": {"alpha": [...]}}; unknown keys throw ConfigError.
    void apply_overrides(const nlohmann::json& overrides);
};

/// Participants are indexed in label order. `inner[f][i]` is the inner fold of
/// participant i when outer fold f is held out, -1 for the held-out participants.
struct FoldAssignment {
    int repetition = 0;
    int k_outer = 8;
    int k_inner = 7;
    std::vector<std::string> participant_ids;
    std::vector<int> outer;
    std::vector<std::vector<int>> inner;
};

/// Groups are the assignment unit. They are binned into quartiles by mean
/// label, shuffled within each quartile and dealt round-robin with a pointer
/// that carries across quartiles. The outer split depends only on
/// (seed, repetition); inner splits on (seed, repetition, outer fold).
FoldAssignment make_folds(const LabelVector& labels, const GroupAssignment& groups, int k_outer, int k_inner,
                          std::uint64_t seed, int repetition);

struct Metrics {
    double rmse = 0.0;
    double r2 = 0.0;
    std::optional<double> r;  // undefined for constant predictions
};

Metrics metrics(std::span<const double> y, std::span<const double> y_hat);

struct EvaluationRecord {
    int repetition = 0;
    int outer_fold = 0;
    models::Kind algorithm = models::Kind::ElasticNet;
    FeatureSet modality = FeatureSet::Multimodal;
    nlohmann::json hyperparameters;
    double rmse = 0.0;
    double r2 = 0.0;
    std::optional<double> r;
    int inner_not_converged = 0;
    std::vector<std::string> feature_names;
    std::optional<models::TrainedModel> model;
};

struct NestedCvConfig {
    int n_reps = 20;
    int k_outer = 8;
    int k_inner = 7;
    std::uint64_t seed = 0;
    int jobs = 1;
};

std::vector<EvaluationRecord> nested_cv(const Dataset& dataset, models::Kind algorithm, FeatureSet modality,
                                        const HyperParamGrid& grid, const NestedCvConfig& config);

enum class Metric { Rmse, R2, R };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

struct ComparisonResult {
    std::string metric;
    std::string pair_label;
    double delta = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p = 1.0;
    std::size_t n_pairs = 0;
    int n_resamples = 0;
};

/// a - b per (repetition, outer fold). Pairs whose r is undefined are dropped.
std::vector<double> paired_differences(const std::vector<EvaluationRecord>& a, const std::vector<EvaluationRecord>& b,
                                       Metric metric);

/// Percentile bootstrap of the median of `differences`.
ComparisonResult bootstrap_differences(std::span<const double> differences, int n_resamples, std::uint64_t seed);

ComparisonResult bootstrap_compare(const std::vector<EvaluationRecord>& a, const std::vector<EvaluationRecord>& b,
                                   Metric metric, int n_resamples = 2000, std::uint64_t seed = 0,
                                   const std::string& pair_label = "");

struct CoefficientSummary {
    std::string feature;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    bool nonzero_median = false;
};

/// Per-feature distribution of standardized Elastic Net coefficients, in feature order.
std::vector<CoefficientSummary> coefficient_summary(const std::vector<EvaluationRecord>& records);

struct SummaryRow {
    models::Kind algorithm = models::Kind::ElasticNet;
    FeatureSet modality = FeatureSet::Multimodal;
    double median_rmse = 0.0;
    double median_r2 = 0.0;
    std::optional<double> median_r;
    std::size_t n_records = 0;
    std::size_t n_undefined_r = 0;
};

SummaryRow summarize(const std::vector<EvaluationRecord>& records);

void write_records_csv(const std::vector<EvaluationRecord>& records, const std::filesystem::path& path);
void write_models_jsonl(const std::vector<EvaluationRecord>& records, const std::filesystem::path& path);
/// Reads records.csv and, when present, the sibling models.jsonl.
std::vector<EvaluationRecord> read_records(const std::filesystem::path& records_csv);

nlohmann::json to_json(const SummaryRow& row);
nlohmann::json to_json(const ComparisonResult& result);
/// Rows ordered by |median| descending; ties keep feature order.
void write_coefficients_csv(const std::vector<CoefficientSummary>& summary, const std::filesystem::path& path);

}  // namespace expressive::evaluation
