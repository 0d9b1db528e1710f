#include "expressive/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include <boost/math/distributions/fisher_f.hpp>

#include "expressive/csv.hpp"
#include "expressive/error.hpp"

namespace expressive::reliability {

IccEstimate icc_average_raters(const RatingMatrix& ratings, double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorKind::InvalidArgument, "confidence must be in (0,1)");
    const Eigen::MatrixXd& x = ratings.scores();
    const double n = static_cast<double>(x.rows());
    const double k = static_cast<double>(x.cols());

    // Effects are formed from raw sums scaled by n*k so that integer ratings
    // produce exactly-zero residuals when the raters agree perfectly.
    const Eigen::VectorXd row_sum = x.rowwise().sum();
    const Eigen::RowVectorXd col_sum = x.colwise().sum();
    const double total = x.sum();
    const double nk = n * k;

    double ssr_scaled = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = n * row_sum(i) - total;  // = nk * (row mean - grand mean)
        ssr_scaled += d * d;
    }
    double ssc_scaled = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double d = k * col_sum(j) - total;  // = nk * (col mean - grand mean)
        ssc_scaled += d * d;
    }
    double sse_scaled = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double d = nk * x(i, j) - n * row_sum(i) - k * col_sum(j) + total;
            sse_scaled += d * d;
        }
    const double scale = nk * nk;
    const double ssr = k * ssr_scaled / scale;
    const double ssc = n * ssc_scaled / scale;
    const double sse = sse_scaled / scale;

    IccEstimate est;
    est.n_subjects = static_cast<long>(x.rows());
    est.n_raters = static_cast<long>(x.cols());
    est.confidence = confidence;
    est.msr = ssr / (n - 1.0);
    est.msc = ssc / (k - 1.0);
    est.mse = sse / ((n - 1.0) * (k - 1.0));
    if (!(est.msr > 0.0))
        throw Error(ErrorKind::DegenerateRatings,
                    "question " + ratings.question_id() + ": all subjects have identical mean ratings");

    const double msr = est.msr, msc = est.msc, mse = est.mse;
    est.icc = (msr - mse) / (msr + (msc - mse) / n);

    if (mse == 0.0 && msc == 0.0) {
        est.ci_low = est.ci_high = est.icc;
        return est;
    }

    // Satterthwaite df built from the single-rater coefficient ICC(A,1).
    const double icc1 = (msr - mse) / (msr + (k - 1.0) * mse + k * (msc - mse) / n);
    const double alpha = 1.0 - confidence;
    const double a = k * icc1 / (n * (1.0 - icc1));
    const double b = 1.0 + k * icc1 * (n - 1.0) / (n * (1.0 - icc1));
    const double num = a * msc + b * mse;
    const double den = (a * msc) * (a * msc) / (k - 1.0) + (b * mse) * (b * mse) / ((n - 1.0) * (k - 1.0));
    const double v = num * num / den;

    if (std::isfinite(v) && v > 0.0 && icc1 < 1.0) {
        using boost::math::fisher_f_distribution;
        using boost::math::quantile;
        const double f_lower = quantile(fisher_f_distribution<double>(n - 1.0, v), 1.0 - alpha / 2.0);
        const double f_upper = quantile(fisher_f_distribution<double>(v, n - 1.0), 1.0 - alpha / 2.0);
        est.ci_low = n * (msr - f_lower * mse) / (f_lower * (msc - mse) + n * msr);
        est.ci_high = n * (f_upper * msr - mse) / (msc - mse + n * f_upper * msr);
    } else {
        est.ci_low = est.ci_high = est.icc;
    }
    est.ci_low = std::min(est.ci_low, est.icc);
    est.ci_high = std::max(est.ci_high, est.icc);
    return est;
}

std::string_view to_string(Band band) {
    switch (band) {
        case Band::Poor: return "poor";
        case Band::Moderate: return "moderate";
        case Band::Good: return "good";
        case Band::Excellent: return "excellent";
    }
    return "poor";
}

Band interpret_icc(double value) {
    if (!(value >= -1.0 && value <= 1.0))
        throw Error(ErrorKind::OutOfRange, "ICC value " + csv::format_double(value) + " outside [-1, 1]");
    if (value > 0.90) return Band::Excellent;
    if (value > 0.75) return Band::Good;
    if (value > 0.50) return Band::Moderate;
    return Band::Poor;
}

std::vector<double> mean_across_raters(const RatingMatrix& ratings) {
    const auto& x = ratings.scores();
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = x.row(i).mean();
    return out;
}

std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path) {
    auto t = csv::read(path);
    const auto vc = t.require_column("video_id");
    const auto rc = t.require_column("rater_id");
    const auto qc = t.require_column("question_id");
    const auto sc = t.require_column("score");
    std::vector<RatingRecord> out;
    out.reserve(t.rows.size());
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& row : t.rows) {
        RatingRecord r{row.cells[vc], row.cells[rc], row.cells[qc], csv::to_double(t, row, sc)};
        if (!seen.emplace(r.video_id, r.rater_id, r.question_id).second)
            throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(row.line) +
                                                   ": duplicate rating for video " + r.video_id + ", rater " +
                                                   r.rater_id + ", question " + r.question_id);
        out.push_back(std::move(r));
    }
    return out;
}

void write_ratings_csv(const std::vector<RatingRecord>& records, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    csv::write_row(out, {"video_id", "rater_id", "question_id", "score"});
    for (const auto& r : records) csv::write_row(out, {r.video_id, r.rater_id, r.question_id, csv::format_double(r.score)});
}

std::vector<std::string> question_ids(const std::vector<RatingRecord>& records) {
    std::set<std::string> q;
    for (const auto& r : records) q.insert(r.question_id);
    return {q.begin(), q.end()};
}

std::vector<RaterSet> discover_rater_sets(const std::vector<RatingRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "no ratings");
    // Union-find over "v:<video>" and "r:<rater>" nodes.
    std::map<std::string, std::string> parent;
    std::function<std::string(const std::string&)> find = [&](const std::string& a) -> std::string {
        auto it = parent.find(a);
        if (it == parent.end()) {
            parent[a] = a;
            return a;
        }
        if (it->second == a) return a;
        std::string root = find(it->second);
        parent[a] = root;
        return root;
    };
    for (const auto& r : records) {
        auto a = find("v:" + r.video_id);
        auto b = find("r:" + r.rater_id);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<std::string, RaterSet> sets;
    std::set<std::string> videos, raters;
    for (const auto& r : records) {
        videos.insert(r.video_id);
        raters.insert(r.rater_id);
    }
    for (const auto& v : videos) sets[find("v:" + v)].video_ids.push_back(v);
    for (const auto& r : raters) sets[find("r:" + r)].rater_ids.push_back(r);
    std::vector<RaterSet> out;
    for (auto& [root, s] : sets) out.push_back(std::move(s));
    std::sort(out.begin(), out.end(), [](const RaterSet& a, const RaterSet& b) { return a.video_ids < b.video_ids; });
    return out;
}

RatingMatrix build_matrix(const std::vector<RatingRecord>& records, const std::string& question_id,
                          const RaterSet& set) {
    std::map<std::string, Eigen::Index> vi, ri;
    for (std::size_t i = 0; i < set.video_ids.size(); ++i) vi[set.video_ids[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < set.rater_ids.size(); ++j) ri[set.rater_ids[j]] = static_cast<Eigen::Index>(j);
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(set.video_ids.size()),
                                                  static_cast<Eigen::Index>(set.rater_ids.size()),
                                                  std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : records) {
        if (r.question_id != question_id) continue;
        auto v = vi.find(r.video_id);
        auto q = ri.find(r.rater_id);
        if (v == vi.end() || q == ri.end()) continue;
        m(v->second, q->second) = r.score;
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (std::isnan(m(i, j)))
                throw Error(ErrorKind::MissingParticipant, "question " + question_id + ": no rating from rater " +
                                                               set.rater_ids[static_cast<std::size_t>(j)] +
                                                               " for video " + set.video_ids[static_cast<std::size_t>(i)]);
    return RatingMatrix(question_id, set.video_ids, set.rater_ids, std::move(m));
}

RatingMatrix build_pooled_matrix(const std::vector<RatingRecord>& records, const std::string& question_id,
                                 const std::vector<RaterSet>& sets) {
    if (sets.empty()) throw Error(ErrorKind::EmptyInput, "no rater sets");
    const std::size_t k = sets.front().rater_ids.size();
    std::vector<std::string> subjects;
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index rows = 0;
    for (const auto& s : sets) {
        if (s.rater_ids.size() != k)
            throw Error(ErrorKind::DimensionMismatch, "rater panels differ in size; cannot pool by rater position");
        auto m = build_matrix(records, question_id, s);
        subjects.insert(subjects.end(), s.video_ids.begin(), s.video_ids.end());
        rows += m.n_subjects();
        blocks.push_back(m.scores());
    }
    Eigen::MatrixXd all(rows, static_cast<Eigen::Index>(k));
    Eigen::Index r = 0;
    for (const auto& b : blocks) {
        all.middleRows(r, b.rows()) = b;
        r += b.rows();
    }
    std::vector<std::string> slots;
    for (std::size_t j = 0; j < k; ++j) slots.push_back("slot" + std::to_string(j + 1));
    return RatingMatrix(question_id, std::move(subjects), std::move(slots), std::move(all));
}

}  // namespace expressive::reliability
