#include "expressive/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "expressive/error.hpp"
#include "expressive/rng.hpp"
#include "expressive/visual.hpp"

namespace expressive::synth {

namespace {

std::string numbered(const std::string& prefix, int i, int width) {
    auto digits = std::to_string(i);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return prefix + digits;
}

int digits(int n) { return n < 10 ? 1 : 1 + digits(n / 10); }

}  // namespace

SynthConfig SynthConfig::defaults() {
    SynthConfig c;
    for (const auto& name : visual::signal_names()) {
        double coef = 0.0;
        if (name == "Mean Action Unit Intensity" || name == "Head Yaw Velocity") coef = 0.2;
        c.features.push_back({name, Modality::Visual, coef, 0.0});
    }
    const char* linguistic[] = {"Word Count", "Analytical Thinking", "Clout", "Authentic", "Emotional Tone",
                                "Words > 6 Letters", "affect", "posemo", "negemo", "social",
                                "cogproc", "percept", "drives", "informal"};
    for (const char* name : linguistic)
        c.features.push_back({name, Modality::Linguistic, std::string(name) == "Word Count" ? 0.4 : 0.0, 0.0});
    c.traits = {{"Extraversion", 0.45}, {"Agreeableness", 0.15}, {"Conscientiousness", 0.0},
                {"Neuroticism", -0.1},  {"Openness", 0.2}};
    return c;
}

void SynthConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw Error(ErrorKind::ConfigError, "synth: " + what);
    };
    need(n_groups >= 1 && group_size >= 1, "n_groups and group_size must be positive");
    need(!loadings.empty() && loadings.size() == residual_variances.size(),
         "loadings and residual_variances must be non-empty and equal length");
    for (double v : residual_variances) need(v >= 0.0 && std::isfinite(v), "residual variances must be >= 0");
    for (double v : loadings) need(std::isfinite(v), "loadings must be finite");
    need(n_rater_sets >= 1 && raters_per_set >= 1, "rater counts must be positive");
    need(n_rater_sets <= n_groups * group_size, "more rater sets than participants");
    need(rater_noise_sd >= 0.0 && label_noise_sd >= 0.0, "noise SDs must be >= 0");
    need(!features.empty(), "at least one feature is required");
    std::set<std::string> names;
    double signal = label_noise_sd;
    for (const auto& f : features) {
        need(!f.name.empty() && names.insert(f.name).second, "feature names must be unique and non-empty");
        need(f.noise_sd >= 0.0 && std::isfinite(f.coefficient), "feature '" + f.name + "' has invalid parameters");
        signal += std::abs(f.coefficient);
    }
    need(signal > 0.0, "label has no variance (all coefficients and label noise are 0)");
    for (const auto& t : traits) need(!t.name.empty() && std::abs(t.correlation) <= 1.0, "trait correlations lie in [-1,1]");
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
    SynthConfig c = defaults();
    if (j.is_null()) return c;
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, "synth config must be a JSON object");
    static const std::set<std::string> known{"n_groups",       "group_size",    "loadings",       "residual_variances",
                                             "n_rater_sets",   "raters_per_set", "rater_noise_sd", "label_noise_sd",
                                             "features",       "traits"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw Error(ErrorKind::ConfigError, "unknown synth key '" + it.key() + "'");
    try {
        c.n_groups = j.value("n_groups", c.n_groups);
        c.group_size = j.value("group_size", c.group_size);
        c.loadings = j.value("loadings", c.loadings);
        c.residual_variances = j.value("residual_variances", c.residual_variances);
        c.n_rater_sets = j.value("n_rater_sets", c.n_rater_sets);
        c.raters_per_set = j.value("raters_per_set", c.raters_per_set);
        c.rater_noise_sd = j.value("rater_noise_sd", c.rater_noise_sd);
        c.label_noise_sd = j.value("label_noise_sd", c.label_noise_sd);
        if (j.contains("features")) {
            c.features.clear();
            for (const auto& f : j.at("features"))
                c.features.push_back({f.at("name").get<std::string>(),
                                      modality_from_string(f.at("modality").get<std::string>()),
                                      f.value("coefficient", 0.0), f.value("noise_sd", 0.0)});
        }
        if (j.contains("traits")) {
            c.traits.clear();
            for (const auto& t : j.at("traits"))
                c.traits.push_back({t.at("name").get<std::string>(), t.value("correlation", 0.0)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json SynthConfig::to_json() const {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : features)
        feats.push_back({{"name", f.name},
                         {"modality", expressive::to_string(f.modality)},
                         {"coefficient", f.coefficient},
                         {"noise_sd", f.noise_sd}});
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& t : traits) tr.push_back({{"name", t.name}, {"correlation", t.correlation}});
    return {{"n_groups", n_groups},
            {"group_size", group_size},
            {"loadings", loadings},
            {"residual_variances", residual_variances},
            {"n_rater_sets", n_rater_sets},
            {"raters_per_set", raters_per_set},
            {"rater_noise_sd", rater_noise_sd},
            {"label_noise_sd", label_noise_sd},
            {"features", feats},
            {"traits", tr}};
}

SynthData generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    const int n = config.n_groups * config.group_size;
    const auto p = static_cast<Eigen::Index>(config.features.size());
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::string> ids, group_ids;
    GroupAssignment groups;
    groups.group_size = static_cast<std::size_t>(config.group_size);
    const int pw = std::max(3, digits(n)), gw = std::max(2, digits(config.n_groups));
    for (int g = 0; g < config.n_groups; ++g)
        for (int m = 0; m < config.group_size; ++m) {
            ids.push_back(numbered("p", g * config.group_size + m + 1, pw));
            groups.group_of[ids.back()] = numbered("g", g + 1, gw);
        }

    // Latent feature values, observed features and the planted score.
    Rng feature_rng(derive_seed(seed, {1}));
    Eigen::MatrixXd latent_x(n, p), observed(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) latent_x(i, j) = normal(feature_rng);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            observed(i, j) = latent_x(i, j) + config.features[static_cast<std::size_t>(j)].noise_sd * normal(feature_rng);

    Rng label_rng(derive_seed(seed, {2}));
    std::vector<double> raw(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) s += config.features[static_cast<std::size_t>(j)].coefficient * latent_x(i, j);
        raw[static_cast<std::size_t>(i)] = s + config.label_noise_sd * normal(label_rng);
    }
    const auto eta = zscore(raw);

    std::vector<FeatureColumn> columns;
    for (const auto& f : config.features) columns.push_back({f.name, f.modality});

    SynthData out;
    out.eta = eta;
    out.dataset.features = FeatureTable(ids, columns, observed);
    out.dataset.labels = LabelVector{ids, eta};
    out.dataset.groups = groups;

    if (!config.traits.empty()) {
        Rng trait_rng(derive_seed(seed, {3}));
        TraitTable traits;
        traits.participant_ids = ids;
        traits.values.resize(n, static_cast<Eigen::Index>(config.traits.size()));
        for (std::size_t t = 0; t < config.traits.size(); ++t) {
            traits.trait_names.push_back(config.traits[t].name);
            const double c = config.traits[t].correlation;
            for (Eigen::Index i = 0; i < n; ++i)
                traits.values(i, static_cast<Eigen::Index>(t)) =
                    c * eta[static_cast<std::size_t>(i)] + std::sqrt(1.0 - c * c) * normal(trait_rng);
        }
        out.dataset.traits = std::move(traits);
    }

    // Ratings: participants are split into contiguous blocks, one rater panel each.
    Rng rating_rng(derive_seed(seed, {4}));
    const int q = static_cast<int>(config.loadings.size());
    const int sw = digits(config.n_rater_sets), rw = digits(config.raters_per_set);
    for (int i = 0; i < n; ++i) {
        const int set = static_cast<int>(static_cast<long>(i) * config.n_rater_sets / n);
        for (int j = 0; j < q; ++j) {
            const double mean = config.loadings[static_cast<std::size_t>(j)] * eta[static_cast<std::size_t>(i)] +
                                std::sqrt(config.residual_variances[static_cast<std::size_t>(j)]) * normal(rating_rng);
            for (int r = 0; r < config.raters_per_set; ++r) {
                const double score = std::clamp(std::round(2.0 + mean + config.rater_noise_sd * normal(rating_rng)), 0.0, 4.0);
                out.ratings.push_back({ids[static_cast<std::size_t>(i)],
                                       numbered("s" + numbered("", set + 1, sw) + "_r", r + 1, rw),
                                       "q" + std::to_string(j + 1), score});
            }
        }
    }
    validate(out.dataset);
    return out;
}

void write_synthetic(const SynthData& data, const SynthConfig& config, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    save_dataset(data.dataset, directory);
    reliability::write_ratings_csv(data.ratings, directory / "ratings.csv");
    std::ofstream cfg(directory / "synth_config.json", std::ios::binary);
    if (!cfg) throw Error(ErrorKind::IoError, "cannot write " + (directory / "synth_config.json").string());
    cfg << config.to_json().dump(2) << '\n';
}

}  // namespace expressive::synth
