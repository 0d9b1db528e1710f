#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "expressive/core.hpp"
#include "expressive/reliability.hpp"

namespace expressive::synth {

struct SynthFeature {
    std::string name;
    Modality modality = Modality::Visual;
    double coefficient = 0.0;  // weight in the latent expressiveness score
    double noise_sd = 0.0;     // measurement noise added to the observed value
};

struct SynthTrait {
    std::string name;
    double correlation = 0.0;
};

struct SynthConfig {
    int n_groups = 32;
    int group_size = 3;
    std::vector<double> loadings{0.97, 0.95, 0.96, 0.87};
    std::vector<double> residual_variances{0.07, 0.11, 0.08, 0.24};
    int n_rater_sets = 6;
    int raters_per_set = 8;
    double rater_noise_sd = 0.5;
    double label_noise_sd = 0.8;
    std::vector<SynthFeature> features;
    std::vector<SynthTrait> traits;

    /// Planted 0.4 on Word Count, 0.2 on two visual features, 0 elsewhere.
    static SynthConfig defaults();
    static SynthConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    /// Throws ConfigError.
    void validate() const;
};

struct SynthData {
    Dataset dataset;
    std::vector<reliability::RatingRecord> ratings;
    std::vector<double> eta;  // standardized latent score, label order
};

/// eta = X b + noise (then standardized); question means follow the CFA
/// measurement model; each rater's score is the question mean on the 0-4
/// scale plus rater noise, rounded and clamped.
SynthData generate_synthetic(const SynthConfig& config, std::uint64_t seed);

/// Writes the dataset files, ratings.csv and the resolved config.
void write_synthetic(const SynthData& data, const SynthConfig& config, const std::filesystem::path& directory);

}  // namespace expressive::synth
