#include "atd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <set>

#include "atd/kernels.hpp"
#include "atd/rng.hpp"
#include "atd/simd.hpp"
#include "atd/solver.hpp"

namespace atd {

void SyntheticSpec::validate() const {
    if (n == 0 || i == 0 || j == 0 || k == 0) throw validation_error("synthetic: zero extent");
    if (r_true == 0) throw validation_error("synthetic: r_true must be >= 1");
    if (classes == 0) throw validation_error("synthetic: classes must be >= 1");
    if (tau < 0.0) throw validation_error("synthetic: tau must be >= 0");
    if (sigma < 0.0) throw validation_error("synthetic: sigma must be >= 0");
    if (!centroids.empty()) {
        if (centroids.size() != classes)
            throw validation_error("synthetic: centroids must match class count");
        for (const auto& c : centroids)
            if (c.size() != r_true)
                throw validation_error("synthetic: centroid dimension must equal r_true");
        for (std::size_t a = 0; a < centroids.size(); ++a)
            for (std::size_t b = a + 1; b < centroids.size(); ++b)
                if (centroids[a] == centroids[b])
                    throw validation_error("synthetic: centroids must be pairwise distinct");
    } else if (!(centroid_scale > 0.0)) {
        throw validation_error("synthetic: centroid_scale must be > 0");
    }
}

SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticData out;

    out.bases = init_bases(spec.i, spec.j, spec.k, spec.r_true, Rng::derive(spec.seed, 0x1));
    auto normalize_columns = [](Matrix& m) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, c) * m(r, c);
            const double inv = 1.0 / std::sqrt(s);
            for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) *= inv;
        }
    };
    normalize_columns(out.bases.A);
    normalize_columns(out.bases.B);
    normalize_columns(out.bases.C);

    out.centroids = spec.centroids;
    if (out.centroids.empty()) {
        Rng rng(Rng::derive(spec.seed, 0x2));
        out.centroids.assign(spec.classes, std::vector<double>(spec.r_true));
        for (auto& c : out.centroids)
            for (auto& v : c) v = spec.centroid_scale * rng.gaussian();
    }

    out.labels.resize(spec.n);
    out.coefficients = Matrix(spec.n, spec.r_true);
    Rng coef_rng(Rng::derive(spec.seed, 0x3));
    for (std::size_t s = 0; s < spec.n; ++s) {
        const int label = static_cast<int>(s % spec.classes);
        out.labels[s] = label;
        double* row = out.coefficients.row(s);
        for (std::size_t r = 0; r < spec.r_true; ++r)
            row[r] = out.centroids[label][r] + spec.tau * coef_rng.gaussian();
    }

    out.tensor = kruskal_reconstruct(&out.coefficients, out.bases.as_list());
    if (spec.sigma > 0.0) {
        Rng noise_rng(Rng::derive(spec.seed, 0x4));
        for (std::size_t idx = 0; idx < out.tensor.size(); ++idx)
            out.tensor[idx] += spec.sigma * noise_rng.gaussian();
    }
    return out;
}

Matrix extract_features(const DenseTensor& t, const KruskalBases& bases, double alpha) {
    if (!(alpha > 0.0)) throw validation_error("extract_features: alpha must be > 0");
    return cold_start(t, nullptr, bases, alpha).first;
}

// --- feature csv -------------------------------------------------------------

namespace {
struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
} // namespace

void write_features_csv(const LabeledFeatures& lf, const std::string& path) {
    if (lf.features.rows() != lf.labels.size())
        throw validation_error("features csv: label count mismatch");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw io_error("features csv: cannot open " + path);
    std::fprintf(f.get(), "label");
    for (std::size_t c = 0; c < lf.features.cols(); ++c)
        std::fprintf(f.get(), ",f%zu", c + 1);
    std::fprintf(f.get(), "\n");
    for (std::size_t r = 0; r < lf.features.rows(); ++r) {
        std::fprintf(f.get(), "%d", lf.labels[r]);
        for (std::size_t c = 0; c < lf.features.cols(); ++c)
            std::fprintf(f.get(), ",%.17g", lf.features(r, c));
        std::fprintf(f.get(), "\n");
    }
}

LabeledFeatures read_features_csv(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw io_error("features csv: cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    char line[1 << 16];
    bool header = true;
    std::size_t width = 0;
    while (std::fgets(line, sizeof line, f.get())) {
        if (header) { // "label,f1,..."
            header = false;
            continue;
        }
        std::vector<double> vals;
        char* cursor = line;
        char* end = nullptr;
        const long label = std::strtol(cursor, &end, 10);
        if (end == cursor) throw io_error("features csv: bad label in " + path);
        cursor = end;
        while (*cursor == ',') {
            ++cursor;
            const double v = std::strtod(cursor, &end);
            if (end == cursor) throw io_error("features csv: bad value in " + path);
            vals.push_back(v);
            cursor = end;
        }
        if (vals.empty()) throw io_error("features csv: row without features in " + path);
        if (width == 0)
            width = vals.size();
        else if (vals.size() != width)
            throw io_error("features csv: ragged rows in " + path);
        labels.push_back(static_cast<int>(label));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw io_error("features csv: no data rows in " + path);

    LabeledFeatures lf;
    lf.labels = std::move(labels);
    lf.features = Matrix(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::memcpy(lf.features.row(r), rows[r].data(), width * sizeof(double));
    return lf;
}

// --- linear evaluation --------------------------------------------------------

int LinearModel::predict(const double* row, std::size_t n_features) const {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < classes; ++m) {
        double score = bias[m];
        for (std::size_t c = 0; c < n_features; ++c)
            score += weights(m, c) * (row[c] - mean[c]) * inv_std[c];
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(m);
        }
    }
    return best;
}

LinearModel train_linear(const LabeledFeatures& train, const LinearModelConfig& cfg) {
    const std::size_t n = train.features.rows();
    const std::size_t d = train.features.cols();
    if (n == 0 || train.labels.size() != n)
        throw validation_error("train_linear: bad training set");

    std::set<int> present(train.labels.begin(), train.labels.end());
    if (present.size() < 2)
        throw validation_error("train_linear: need at least two classes in the training set");
    int max_label = *present.rbegin();
    if (*present.begin() < 0) throw validation_error("train_linear: negative label");
    const std::size_t classes = static_cast<std::size_t>(max_label) + 1;

    LinearModel model;
    model.classes = classes;
    model.weights = Matrix(classes, d);
    model.bias.assign(classes, 0.0);
    model.mean.assign(d, 0.0);
    model.inv_std.assign(d, 1.0);

    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) model.mean[c] += train.features(r, c);
    for (auto& v : model.mean) v /= static_cast<double>(n);
    for (std::size_t c = 0; c < d; ++c) {
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dv = train.features(r, c) - model.mean[c];
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        model.inv_std[c] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
    }

    Matrix z(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c)
            z(r, c) = (train.features(r, c) - model.mean[c]) * model.inv_std[c];

    Matrix grad_w(classes, d);
    std::vector<double> grad_b(classes), logits(classes);
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        std::memset(grad_w.data(), 0, grad_w.size() * sizeof(double));
        std::fill(grad_b.begin(), grad_b.end(), 0.0);

        for (std::size_t r = 0; r < n; ++r) {
            double max_logit = -std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < classes; ++m) {
                logits[m] = model.bias[m] + simd::dot(model.weights.row(m), z.row(r), d);
                max_logit = std::max(max_logit, logits[m]);
            }
            double denom = 0.0;
            for (std::size_t m = 0; m < classes; ++m) {
                logits[m] = std::exp(logits[m] - max_logit);
                denom += logits[m];
            }
            for (std::size_t m = 0; m < classes; ++m) {
                const double p = logits[m] / denom;
                const double err = p - (train.labels[r] == static_cast<int>(m) ? 1.0 : 0.0);
                simd::axpy(err, z.row(r), grad_w.row(m), d);
                grad_b[m] += err;
            }
        }

        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t m = 0; m < classes; ++m) {
            double* wrow = model.weights.row(m);
            const double* grow = grad_w.row(m);
            for (std::size_t c = 0; c < d; ++c)
                wrow[c] -= cfg.learn_rate * (grow[c] * inv_n + cfg.l2 * wrow[c]);
            model.bias[m] -= cfg.learn_rate * grad_b[m] * inv_n;
        }
    }
    return model;
}

double accuracy(const LinearModel& model, const LabeledFeatures& test) {
    const std::size_t n = test.features.rows();
    if (n == 0 || test.labels.size() != n) throw validation_error("accuracy: bad test set");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (model.predict(test.features.row(r), test.features.cols()) == test.labels[r]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(n);
}

} // namespace atd
