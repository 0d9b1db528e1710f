#include "expressive/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "expressive/core.hpp"
#include "expressive/csv.hpp"
#include "expressive/error.hpp"
#include "expressive/evaluation.hpp"
#include "expressive/latent.hpp"
#include "expressive/linguistic.hpp"
#include "expressive/reliability.hpp"
#include "expressive/synth.hpp"
#include "expressive/visual.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace expressive::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string out;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "JSON config file");
    sub->add_option("--seed", c.seed, "Master seed");
    sub->add_option("--jobs", c.jobs, "Parallel workers (0 = all cores)");
    sub->add_option("--out", c.out, "Output directory (default $EXPRESSIVE_OUT or ./out)");
}

/// Resolved settings for one subcommand: CLI flags win over the config file.
class Settings {
public:
    Settings(const Common& common, const std::string& subcommand) : common_(common) {
        if (!common.config_path.empty()) {
            const fs::path p(common.config_path);
            std::ifstream in(p);
            if (!in) throw Error(ErrorKind::IoError, "cannot open config " + p.string());
            try {
                root_ = json::parse(in);
            } catch (const json::exception& e) {
                throw Error(ErrorKind::ConfigError, p.string() + ": " + e.what());
            }
            if (!root_.is_object()) throw Error(ErrorKind::ConfigError, p.string() + ": config must be a JSON object");
            base_ = p.parent_path();
        }
        section_ = root_.contains(subcommand) ? root_[subcommand] : root_;
        if (!section_.is_object()) section_ = json::object();
    }

    const json& section() const { return section_; }

    template <class T>
    T get(const std::optional<T>& flag, const char* key, T fallback) const {
        if (flag) return *flag;
        try {
            if (section_.contains(key)) return section_[key].get<T>();
            if (root_.contains(key) && !root_[key].is_object()) return root_[key].get<T>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ConfigError, std::string("config key '") + key + "': " + e.what());
        }
        return fallback;
    }

    std::optional<fs::path> path(const std::string& flag, const char* key) const {
        if (!flag.empty()) return fs::path(flag);
        if (section_.contains(key) && section_[key].is_string()) return base_ / section_[key].get<std::string>();
        return std::nullopt;
    }

    fs::path require_path(const std::string& flag, const char* key) const {
        auto p = path(flag, key);
        if (!p) throw UsageError(std::string("missing required input --") + key);
        if (!fs::exists(*p)) throw Error(ErrorKind::IoError, "no such file or directory: " + p->string());
        return *p;
    }

    std::uint64_t seed() const {
        auto s = get<std::uint64_t>(common_.seed, "seed", 0);
        if (!common_.seed && !section_.contains("seed") && !root_.contains("seed"))
            throw UsageError("this subcommand is stochastic; pass --seed or set \"seed\" in the config");
        return s;
    }

    int jobs() const { return get<int>(common_.jobs, "jobs", 1); }

    fs::path out() const {
        if (!common_.out.empty()) return common_.out;
        if (root_.contains("out") && root_["out"].is_string()) return base_ / root_["out"].get<std::string>();
        if (const char* env = std::getenv("EXPRESSIVE_OUT"); env && *env) return env;
        return "out";
    }

private:
    const Common& common_;
    json root_ = json::object();
    json section_ = json::object();
    fs::path base_;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const std::string& extension) {
    std::vector<fs::path> out;
    for (const auto& s : inputs) {
        const fs::path p(s);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file() && e.path().extension() == extension) found.push_back(e.path());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else if (fs::exists(p)) {
            out.push_back(p);
        } else {
            throw Error(ErrorKind::IoError, "no such file or directory: " + p.string());
        }
    }
    if (out.empty()) throw Error(ErrorKind::EmptyInput, "no " + extension + " inputs found");
    return out;
}

// ------------------------------------------------------------------ reliability

json icc_json(const reliability::IccEstimate& e) {
    std::string band;
    try {
        band = std::string(reliability::to_string(reliability::interpret_icc(e.icc)));
    } catch (const Error&) {
        band = "out_of_range";
    }
    return {{"icc", e.icc}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"band", band},
            {"n", e.n_subjects}, {"k", e.n_raters}};
}

struct ReliabilityArgs {
    std::string ratings;
    std::optional<double> confidence;
};

void cmd_reliability(const Settings& s, const ReliabilityArgs& a) {
    const auto ratings_path = s.require_path(a.ratings, "ratings");
    const double confidence = s.get(a.confidence, "confidence", 0.95);
    const auto records = reliability::read_ratings_csv(ratings_path);
    const auto sets = reliability::discover_rater_sets(records);
    const auto questions = reliability::question_ids(records);

    bool equal_panels = true;
    for (const auto& set : sets) equal_panels = equal_panels && set.rater_ids.size() == sets.front().rater_ids.size();
    if (!equal_panels) std::cerr << "warning: rater panels differ in size; pooled ICC skipped\n";

    json per_question = json::array();
    for (const auto& q : questions) {
        json set_results = json::array();
        for (std::size_t i = 0; i < sets.size(); ++i) {
            auto entry = icc_json(reliability::icc_average_raters(reliability::build_matrix(records, q, sets[i]), confidence));
            entry["set"] = i;
            set_results.push_back(entry);
        }
        json pooled = nullptr;
        if (equal_panels)
            pooled = icc_json(reliability::icc_average_raters(reliability::build_pooled_matrix(records, q, sets), confidence));
        per_question.push_back({{"question_id", q}, {"pooled", pooled}, {"sets", set_results}});
    }

    // Per-video means across raters, one column per question.
    std::vector<std::string> videos;
    std::map<std::string, std::map<std::string, std::pair<double, int>>> sums;
    for (const auto& r : records) {
        if (!sums.count(r.video_id)) videos.push_back(r.video_id);
        auto& cell = sums[r.video_id][r.question_id];
        cell.first += r.score;
        ++cell.second;
    }
    std::ostringstream averaged;
    std::vector<std::string> header{"participant_id"};
    header.insert(header.end(), questions.begin(), questions.end());
    csv::write_row(averaged, header);
    for (const auto& v : videos) {
        std::vector<std::string> row{v};
        for (const auto& q : questions) {
            auto it = sums[v].find(q);
            if (it == sums[v].end())
                throw Error(ErrorKind::MissingParticipant, "video " + v + " has no ratings for question " + q);
            row.push_back(csv::format_double(it->second.first / it->second.second));
        }
        csv::write_row(averaged, row);
    }

    const auto out = s.out();
    write_json(out / "reliability.json",
               {{"confidence", confidence}, {"n_rater_sets", sets.size()}, {"questions", per_question}});
    write_text(out / "averaged_ratings.csv", averaged.str());
}

// ------------------------------------------------------------------ cfa

struct CfaArgs {
    std::string ratings;
    std::string traits;
    std::optional<int> chains, warmup, kept;
};

void cmd_cfa(const Settings& s, const CfaArgs& a) {
    const auto path = s.require_path(a.ratings, "ratings");
    const auto traits_path = s.path(a.traits, "traits");
    if (traits_path && !fs::exists(*traits_path))
        throw Error(ErrorKind::IoError, "no such file: " + traits_path->string());
    latent::CfaConfig cfg;
    cfg.n_chains = s.get(a.chains, "chains", cfg.n_chains);
    cfg.n_warmup = s.get(a.warmup, "warmup", cfg.n_warmup);
    cfg.n_kept = s.get(a.kept, "kept", cfg.n_kept);
    cfg.seed = s.seed();
    cfg.parallel_chains = s.jobs() != 1;
    const auto prior = s.get<std::string>(std::nullopt, "residual_prior", "precision");
    if (prior == "sd") cfg.residual_prior = latent::ResidualPrior::StandardDeviation;
    else if (prior != "precision")
        throw Error(ErrorKind::ConfigError, "residual_prior must be \"precision\" or \"sd\"");
    cfg.validate();

    const auto t = csv::read(path);
    const auto pc = t.require_column("participant_id");
    std::vector<std::string> ids, names;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (j != pc) {
            cols.push_back(j);
            names.push_back(t.header[j]);
        }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        ids.push_back(t.rows[i].cells[pc]);
        for (std::size_t j = 0; j < cols.size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = csv::to_double(t, t.rows[i], cols[j]);
    }
    std::optional<TraitTable> traits;
    if (traits_path) traits = read_traits_csv(*traits_path);

    const auto post = latent::fit_cfa(x, cfg, ids, names);
    if (!post.converged)
        std::cerr << "warning: CFA did not converge (max split-Rhat " << post.max_rhat << " > " << cfg.rhat_threshold
                  << ")\n";
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        auto col = zscore(std::span<const double>(x.col(j).data(), static_cast<std::size_t>(x.rows())));
        z.col(j) = Eigen::Map<Eigen::VectorXd>(col.data(), x.rows());
    }
    const auto fit = latent::fit_indices(post, latent::sample_covariance(z), static_cast<long>(x.rows()));
    const auto scores = latent::factor_scores(post);

    json params = json::array();
    for (const auto& p : post.summary) {
        if (p.name.rfind("eta[", 0) == 0) continue;
        params.push_back({{"name", p.name}, {"mean", p.mean}, {"sd", p.sd}, {"ci_low", p.ci_low},
                          {"ci_high", p.ci_high}, {"rhat", p.rhat}});
    }
    json validity = nullptr;
    if (traits) {
        validity = json::array();
        for (const auto& tc : latent::external_validity(scores, *traits))
            validity.push_back({{"trait", tc.trait}, {"r", tc.r}});
    }

    const auto out = s.out();
    write_json(out / "cfa_posterior.json", {{"converged", post.converged},
                                            {"max_rhat", post.max_rhat},
                                            {"n_chains", post.n_chains},
                                            {"n_kept", post.n_kept},
                                            {"parameters", params}});
    write_json(out / "fit_indices.json", {{"gamma_hat", fit.gamma_hat},
                                          {"gamma_hat_sd", fit.gamma_hat_sd},
                                          {"cfi", fit.cfi},
                                          {"cfi_sd", fit.cfi_sd}});
    fs::create_directories(out);
    write_labels_csv(scores, out / "factor_scores.csv");
    if (traits) write_json(out / "external_validity.json", validity);
}

// ------------------------------------------------------------------ features

struct VisualArgs {
    std::vector<std::string> tracks;
    bool exclude_failed = false;
    std::optional<int> window;
};

void cmd_features_visual(const Settings& s, const VisualArgs& a) {
    std::vector<std::string> inputs = a.tracks;
    if (inputs.empty()) {
        if (auto p = s.path("", "tracks")) inputs.push_back(p->string());
        else throw UsageError("missing required input --tracks");
    }
    const int window = s.get(a.window, "window", 5);
    const bool exclude = a.exclude_failed || s.get<bool>(std::nullopt, "exclude_failed", false);
    const auto files = expand_inputs(inputs, ".csv");

    std::vector<std::string> ids;
    std::vector<visual::IntervalTrack> tracks;
    std::set<std::string> seen;
    for (const auto& f : files) {
        auto frames = visual::parse_track(f);
        if (exclude) frames = frames.without_failed_frames();
        ids.push_back(f.stem().string());
        if (!seen.insert(ids.back()).second) throw Error(ErrorKind::InvalidArgument, "duplicate participant " + ids.back());
        try {
            tracks.push_back(visual::downsample(frames, window));
        } catch (const Error& e) {
            throw Error(e.kind(), f.string() + ": " + e.what());
        }
    }
    const auto reference = visual::reference_face(tracks);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(tracks.size()), 20);
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        try {
            const auto row = visual::visual_signals(tracks[i], visual::align_landmarks(tracks[i], reference));
            for (std::size_t j = 0; j < row.size(); ++j) values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        } catch (const Error& e) {
            throw Error(e.kind(), files[i].string() + ": " + e.what());
        }
    }
    std::vector<FeatureColumn> cols;
    for (const auto& n : visual::signal_names()) cols.push_back({n, Modality::Visual});
    const FeatureTable table(ids, cols, values);
    const auto out = s.out();
    fs::create_directories(out);
    write_feature_csv(table, out / "visual_features.csv");
}

struct LinguisticArgs {
    std::string transcripts;
    std::string lexicon;
    std::string external;
};

void cmd_features_linguistic(const Settings& s, const LinguisticArgs& a) {
    const auto tpath = s.require_path(a.transcripts, "transcripts");
    const auto lex = linguistic::load_lexicon(s.require_path(a.lexicon, "lexicon"));
    std::map<std::string, std::map<std::string, double>> external;
    if (auto e = s.path(a.external, "external")) {
        if (!fs::exists(*e)) throw Error(ErrorKind::IoError, "no such file: " + e->string());
        external = linguistic::read_external_dims_csv(*e);
    }

    std::vector<linguistic::Transcript> transcripts;
    if (fs::is_directory(tpath)) {
        for (const auto& f : expand_inputs({tpath.string()}, ".txt")) transcripts.push_back(linguistic::read_transcript_text(f));
    } else {
        transcripts = linguistic::read_transcripts_csv(tpath);
    }
    if (transcripts.empty()) throw Error(ErrorKind::EmptyInput, "no transcripts");

    std::vector<std::string> ids;
    std::vector<std::vector<std::pair<std::string, double>>> rows;
    for (const auto& t : transcripts) {
        std::map<std::string, double> dims;
        if (!external.empty()) {
            auto it = external.find(t.participant_id);
            if (it == external.end())
                throw Error(ErrorKind::MissingParticipant, "no external dimensions for participant " + t.participant_id);
            dims = it->second;
        }
        ids.push_back(t.participant_id);
        rows.push_back(linguistic::linguistic_signals(t, lex, dims).named_values());
    }
    std::vector<FeatureColumn> cols;
    for (const auto& [name, v] : rows.front()) cols.push_back({name, Modality::Linguistic});
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols.size())
            throw Error(ErrorKind::DimensionMismatch, "participant " + ids[i] + " has a different feature set");
        for (std::size_t j = 0; j < cols.size(); ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].second;
    }
    const FeatureTable table(ids, cols, values);
    const auto out = s.out();
    fs::create_directories(out);
    write_feature_csv(table, out / "linguistic_features.csv");
}

// ------------------------------------------------------------------ evaluate / compare / coefficients

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (auto t = csv::trim(item); !t.empty()) out.push_back(t);
    return out;
}

std::vector<std::string> list_setting(const Settings& s, const std::string& flag, const char* key,
                                      const std::vector<std::string>& fallback) {
    if (!flag.empty()) return split_list(flag);
    const auto& sec = s.section();
    if (sec.contains(key)) {
        if (sec[key].is_string()) return split_list(sec[key].get<std::string>());
        try {
            return sec[key].get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ConfigError, std::string("config key '") + key + "': " + e.what());
        }
    }
    return fallback;
}

struct EvaluateArgs {
    std::string manifest;
    std::string algorithms;
    std::string modalities;
    std::optional<int> reps;
};

void cmd_evaluate(const Settings& s, const EvaluateArgs& a) {
    const auto manifest = s.require_path(a.manifest, "manifest");
    evaluation::NestedCvConfig cfg;
    cfg.seed = s.seed();
    cfg.jobs = s.jobs();
    cfg.n_reps = s.get(a.reps, "reps", cfg.n_reps);
    cfg.k_outer = s.get<int>(std::nullopt, "k_outer", cfg.k_outer);
    cfg.k_inner = s.get<int>(std::nullopt, "k_inner", cfg.k_inner);
    evaluation::HyperParamGrid grid;
    if (s.section().contains("grid")) grid.apply_overrides(s.section()["grid"]);

    std::vector<models::Kind> algs;
    for (const auto& n : list_setting(s, a.algorithms, "algorithms", {"elastic_net"})) algs.push_back(models::kind_from_string(n));
    std::vector<evaluation::FeatureSet> mods;
    for (const auto& n : list_setting(s, a.modalities, "modalities", {"visual", "linguistic", "multimodal"}))
        mods.push_back(evaluation::feature_set_from_string(n));

    const auto dataset = load_dataset(manifest);
    std::vector<std::vector<evaluation::EvaluationRecord>> runs;
    json summary = json::array();
    for (auto alg : algs)
        for (auto mod : mods) {
            runs.push_back(evaluation::nested_cv(dataset, alg, mod, grid, cfg));
            int not_converged = 0;
            for (const auto& r : runs.back()) not_converged += r.inner_not_converged;
            if (not_converged > 0)
                std::cerr << "warning: " << models::to_string(alg) << "/" << evaluation::to_string(mod) << ": "
                          << not_converged << " inner fits did not converge\n";
            summary.push_back(evaluation::to_json(evaluation::summarize(runs.back())));
        }

    const auto out = s.out();
    for (const auto& recs : runs) {
        const auto dir = out / (models::to_string(recs.front().algorithm) + "_" + evaluation::to_string(recs.front().modality));
        fs::create_directories(dir);
        evaluation::write_records_csv(recs, dir / "records.csv");
        evaluation::write_models_jsonl(recs, dir / "models.jsonl");
    }
    write_json(out / "summary.json", {{"seed", cfg.seed},
                                      {"n_reps", cfg.n_reps},
                                      {"k_outer", cfg.k_outer},
                                      {"k_inner", cfg.k_inner},
                                      {"runs", summary}});
}

fs::path records_file(const fs::path& p) { return fs::is_directory(p) ? p / "records.csv" : p; }

struct CompareArgs {
    std::string a, b, metric, label;
    std::optional<int> resamples;
};

void cmd_compare(const Settings& s, const CompareArgs& a) {
    const auto pa = records_file(s.require_path(a.a, "a"));
    const auto pb = records_file(s.require_path(a.b, "b"));
    const auto seed = s.seed();
    const int resamples = s.get(a.resamples, "resamples", 2000);
    const auto metric_names = list_setting(s, a.metric, "metric", {"rmse", "r2", "r"});
    const auto ra = evaluation::read_records(pa);
    const auto rb = evaluation::read_records(pb);
    if (ra.empty() || rb.empty()) throw Error(ErrorKind::EmptyInput, "no records to compare");
    std::string label = a.label.empty() ? s.get<std::string>(std::nullopt, "label", "") : a.label;
    if (label.empty()) label = evaluation::to_string(ra.front().modality) + " - " + evaluation::to_string(rb.front().modality);

    json results = json::array();
    for (std::size_t m = 0; m < metric_names.size(); ++m) {
        const auto metric = evaluation::metric_from_string(metric_names[m]);
        results.push_back(evaluation::to_json(
            evaluation::bootstrap_compare(ra, rb, metric, resamples, derive_seed(seed, {m}), label)));
    }
    write_json(s.out() / "comparison.json", {{"seed", seed}, {"comparisons", results}});
}

struct CoefficientArgs {
    std::string records;
};

void cmd_coefficients(const Settings& s, const CoefficientArgs& a) {
    const auto recs = evaluation::read_records(records_file(s.require_path(a.records, "records")));
    const auto summary = evaluation::coefficient_summary(recs);
    const auto out = s.out();
    fs::create_directories(out);
    evaluation::write_coefficients_csv(summary, out / "coefficients.csv");
}

void cmd_synth(const Settings& s) {
    const auto seed = s.seed();
    json section = s.section();
    for (const char* k : {"seed", "jobs", "out"}) section.erase(k);
    const auto cfg = synth::SynthConfig::from_json(section.empty() ? json(nullptr) : section);
    const auto data = synth::generate_synthetic(cfg, seed);
    synth::write_synthetic(data, cfg, s.out());
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Emotional expressiveness measurement and prediction pipeline", "expressive"};
    app.require_subcommand(1);
    Common common;

    ReliabilityArgs rel;
    auto* s_rel = app.add_subcommand("reliability", "Per-question ICC(A,k) per rater set and pooled");
    s_rel->add_option("--ratings", rel.ratings, "Ratings CSV (video_id,rater_id,question_id,score)");
    s_rel->add_option("--confidence", rel.confidence, "Confidence level of the interval");
    add_common(s_rel, common);

    CfaArgs cfa;
    auto* s_cfa = app.add_subcommand("cfa", "Bayesian one-factor CFA on averaged ratings");
    s_cfa->add_option("--ratings", cfa.ratings, "Averaged ratings CSV (participant_id + indicators)");
    s_cfa->add_option("--traits", cfa.traits, "Optional traits CSV for external validity");
    s_cfa->add_option("--chains", cfa.chains);
    s_cfa->add_option("--warmup", cfa.warmup);
    s_cfa->add_option("--kept", cfa.kept);
    add_common(s_cfa, common);

    VisualArgs vis;
    auto* s_vis = app.add_subcommand("features-visual", "Visual signals from facial-tracking CSVs");
    s_vis->add_option("--tracks", vis.tracks, "Track CSV files or directories");
    s_vis->add_flag("--exclude-failed", vis.exclude_failed, "Drop frames with success = 0");
    s_vis->add_option("--window", vis.window, "Frames per interval");
    add_common(s_vis, common);

    LinguisticArgs ling;
    auto* s_ling = app.add_subcommand("features-linguistic", "Lexicon category percentages from transcripts");
    s_ling->add_option("--transcripts", ling.transcripts, "Transcript CSV or directory of .txt files");
    s_ling->add_option("--lexicon", ling.lexicon, "Lexicon JSON");
    s_ling->add_option("--external", ling.external, "External summary dimensions CSV");
    add_common(s_ling, common);

    EvaluateArgs ev;
    auto* s_ev = app.add_subcommand("evaluate", "Repeated nested cross-validation");
    s_ev->add_option("--manifest", ev.manifest, "Dataset manifest JSON");
    s_ev->add_option("--algorithms", ev.algorithms, "Comma list of elastic_net, svr, mlp");
    s_ev->add_option("--modalities", ev.modalities, "Comma list of visual, linguistic, multimodal");
    s_ev->add_option("--reps", ev.reps, "Repetitions");
    add_common(s_ev, common);

    CompareArgs cmp;
    auto* s_cmp = app.add_subcommand("compare", "Paired bootstrap comparison of two record sets");
    s_cmp->add_option("--a", cmp.a, "records.csv (or its directory)");
    s_cmp->add_option("--b", cmp.b, "records.csv (or its directory)");
    s_cmp->add_option("--metric", cmp.metric, "Comma list of rmse, r2, r");
    s_cmp->add_option("--label", cmp.label, "Pair label");
    s_cmp->add_option("--resamples", cmp.resamples);
    add_common(s_cmp, common);

    CoefficientArgs coef;
    auto* s_coef = app.add_subcommand("coefficients", "Elastic Net coefficient distributions");
    s_coef->add_option("--records", coef.records, "records.csv (or its directory)");
    add_common(s_coef, common);

    auto* s_syn = app.add_subcommand("synth", "Generate a synthetic dataset");
    add_common(s_syn, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    auto* sub = app.get_subcommands().front();
    try {
        const Settings settings(common, sub->get_name());
        if (sub == s_rel) cmd_reliability(settings, rel);
        else if (sub == s_cfa) cmd_cfa(settings, cfa);
        else if (sub == s_vis) cmd_features_visual(settings, vis);
        else if (sub == s_ling) cmd_features_linguistic(settings, ling);
        else if (sub == s_ev) cmd_evaluate(settings, ev);
        else if (sub == s_cmp) cmd_compare(settings, cmp);
        else if (sub == s_coef) cmd_coefficients(settings, coef);
        else if (sub == s_syn) cmd_synth(settings);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << sub->help();
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::ConfigError ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace expressive::cli
