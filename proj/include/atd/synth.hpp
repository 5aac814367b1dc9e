#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atd/bases.hpp"
#include "atd/matrix.hpp"
#include "atd/tensor.hpp"

namespace atd {

// Class-structured synthetic data: seeded Gaussian bases with unit-norm
// columns, per-class coefficient centroids, within-class Gaussian spread tau,
// and elementwise Gaussian measurement noise sigma.
struct SyntheticSpec {
    std::size_t n = 200;
    std::size_t i = 8, j = 9, k = 10;
    std::size_t r_true = 5;
    std::size_t classes = 2;
    double centroid_scale = 4.0; // used when centroids is empty
    std::vector<std::vector<double>> centroids; // classes x r_true, optional
    double tau = 0.2;
    double sigma = 0.01;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticData {
    DenseTensor tensor;            // n x i x j x k
    std::vector<int> labels;       // round-robin class ids in [0, classes)
    KruskalBases bases;            // ground truth, unit-norm columns
    Matrix coefficients;           // ground-truth rows x^(n)
    std::vector<std::vector<double>> centroids;
};

SyntheticData generate(const SyntheticSpec& spec);

// Ridge features of arbitrary samples under frozen bases; row n solves the
// per-sample regularized least squares fit.
Matrix extract_features(const DenseTensor& t, const KruskalBases& bases, double alpha);

struct LabeledFeatures {
    Matrix features;
    std::vector<int> labels;
};

LabeledFeatures read_features_csv(const std::string& path);
void write_features_csv(const LabeledFeatures& lf, const std::string& path);

struct LinearModelConfig {
    double l2 = 1e-4;
    double learn_rate = 1.0;
    std::size_t max_iters = 5000;
    std::uint64_t seed = 0;
};

// Multinomial logistic regression trained by full-batch gradient descent on
// standardized inputs. Deterministic given the config.
struct LinearModel {
    Matrix weights;           // classes x features
    std::vector<double> bias; // classes
    std::vector<double> mean, inv_std;
    std::size_t classes = 0;

    int predict(const double* row, std::size_t n_features) const;
};

LinearModel train_linear(const LabeledFeatures& train, const LinearModelConfig& cfg);
double accuracy(const LinearModel& model, const LabeledFeatures& test);

} // namespace atd
