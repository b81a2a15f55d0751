#pragma once

#include <cstdint>
#include <vector>

// Small numerics toolkit for the analysis suite: principal components with a
// deterministic sign convention, two-class silhouette scoring, and a linear
// maximum-margin separator trained by seeded stochastic subgradient descent.
namespace sbb {

using Matrix = std::vector<std::vector<double>>;  // row-major points

struct PcaResult {
    std::vector<double> mean;                // column means of the fit data
    Matrix              components;          // [k][dim], orthonormal rows
    std::vector<double> explained_variance;  // eigenvalues, descending
};

// Top-k principal axes of the point cloud via eigendecomposition of the
// covariance matrix. Sign convention: within each component the entry of
// largest magnitude (first on ties) is made positive, so results are
// reproducible across runs and platforms.
PcaResult fit_pca(const Matrix & points, int k);

// Coordinates of x in the fitted component basis (k values).
std::vector<double> pca_project(const PcaResult & pca, const std::vector<double> & x);

// Mean silhouette over all points of two labeled clusters, Euclidean metric.
// Requires at least 2 points per cluster.
double silhouette_two_class(const Matrix & a, const Matrix & b);

struct LinearSeparator {
    std::vector<double> w;
    double              bias = 0.0;
    double              training_accuracy = 0.0;

    double score(const std::vector<double> & x) const;  // w.x + bias
};

// Hinge-loss linear classifier (positives scored > 0) trained with the
// Pegasos stochastic subgradient scheme; deterministic for a fixed seed.
LinearSeparator fit_linear_separator(const Matrix & positives, const Matrix & negatives,
                                     int epochs = 60, double lambda = 1e-3,
                                     std::uint64_t seed = 0);

}  // namespace sbb
