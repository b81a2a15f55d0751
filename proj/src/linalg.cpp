#include "sbb/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "sbb/rng.hpp"
#include "sbb/util.hpp"

namespace sbb {

namespace {

Eigen::MatrixXd to_eigen(const Matrix & points) {
    if (points.empty()) throw ValidationError("empty point set");
    const std::size_t dim = points[0].size();
    if (dim == 0) throw ValidationError("zero-dimensional points");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()),
                      static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim)
            throw ValidationError("ragged point set");
        for (std::size_t j = 0; j < dim; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points[i][j];
    }
    return m;
}

double euclidean(const std::vector<double> & a, const std::vector<double> & b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

PcaResult fit_pca(const Matrix & points, int k) {
    Eigen::MatrixXd m = to_eigen(points);
    const auto      n = m.rows();
    const auto      d = m.cols();
    if (k < 1) throw ValidationError("need at least one principal component");
    if (k > d) throw ValidationError("more components than dimensions");
    if (n < 2) throw ValidationError("need at least two points for a principal axis");

    Eigen::RowVectorXd mean = m.colwise().mean();
    m.rowwise() -= mean;
    Eigen::MatrixXd cov = (m.adjoint() * m) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw ValidationError("eigendecomposition failed");

    PcaResult out;
    out.mean.assign(mean.data(), mean.data() + d);
    out.components.resize(static_cast<std::size_t>(k));
    out.explained_variance.resize(static_cast<std::size_t>(k));
    // Eigenvalues come out ascending; take the top k from the back.
    for (int c = 0; c < k; ++c) {
        const auto      col = d - 1 - c;
        Eigen::VectorXd v   = solver.eigenvectors().col(col);
        // Deterministic sign: largest-magnitude entry (first on ties) positive.
        Eigen::Index pivot = 0;
        for (Eigen::Index j = 1; j < d; ++j)
            if (std::abs(v(j)) > std::abs(v(pivot))) pivot = j;
        if (v(pivot) < 0) v = -v;
        out.components[static_cast<std::size_t>(c)].assign(v.data(), v.data() + d);
        out.explained_variance[static_cast<std::size_t>(c)] =
            std::max(0.0, solver.eigenvalues()(col));
    }
    return out;
}

std::vector<double> pca_project(const PcaResult & pca, const std::vector<double> & x) {
    if (x.size() != pca.mean.size())
        throw ValidationError("point/axis dimension mismatch");
    std::vector<double> out(pca.components.size(), 0.0);
    for (std::size_t c = 0; c < pca.components.size(); ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            s += (x[j] - pca.mean[j]) * pca.components[c][j];
        out[c] = s;
    }
    return out;
}

double silhouette_two_class(const Matrix & a, const Matrix & b) {
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("silhouette needs at least 2 points per cluster");

    auto mean_dist_within = [](const Matrix & own, std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < own.size(); ++j)
            if (j != i) s += euclidean(own[i], own[j]);
        return s / static_cast<double>(own.size() - 1);
    };
    auto mean_dist_to = [](const std::vector<double> & p, const Matrix & other) {
        double s = 0.0;
        for (const auto & q : other) s += euclidean(p, q);
        return s / static_cast<double>(other.size());
    };

    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = mean_dist_within(a, i);
        const double bi = mean_dist_to(a[i], b);
        const double m  = std::max(ai, bi);
        total += m > 0 ? (bi - ai) / m : 0.0;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double ai = mean_dist_within(b, i);
        const double bi = mean_dist_to(b[i], a);
        const double m  = std::max(ai, bi);
        total += m > 0 ? (bi - ai) / m : 0.0;
    }
    return total / static_cast<double>(a.size() + b.size());
}

double LinearSeparator::score(const std::vector<double> & x) const {
    if (x.size() != w.size()) throw ValidationError("point/separator dimension mismatch");
    double s = bias;
    for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * x[k];
    return s;
}

LinearSeparator fit_linear_separator(const Matrix & positives, const Matrix & negatives,
                                     int epochs, double lambda, std::uint64_t seed) {
    if (positives.empty() || negatives.empty())
        throw ValidationError("both classes must be non-empty");
    if (epochs < 1 || lambda <= 0)
        throw ValidationError("invalid separator training parameters");
    const std::size_t dim = positives[0].size();

    std::vector<const std::vector<double> *> xs;
    std::vector<double>                      ys;
    for (const auto & p : positives) {
        if (p.size() != dim) throw ValidationError("ragged point set");
        xs.push_back(&p);
        ys.push_back(1.0);
    }
    for (const auto & p : negatives) {
        if (p.size() != dim) throw ValidationError("ragged point set");
        xs.push_back(&p);
        ys.push_back(-1.0);
    }

    // Bias folded in as a constant-1 feature so it is regularized and decays
    // with the weights; an unregularized bias blows up at the first steps
    // where the learning rate is 1/(lambda*t).
    std::vector<double> w(dim + 1, 0.0);
    Rng                 rng(derive_seed(seed, "linear-separator"));
    const std::size_t   n     = xs.size();
    const long long     steps = static_cast<long long>(epochs) * static_cast<long long>(n);
    for (long long t = 1; t <= steps; ++t) {
        const std::size_t i   = static_cast<std::size_t>(rng.uniform_below(n));
        const double      eta = 1.0 / (lambda * static_cast<double>(t));
        double            s   = w[dim];
        for (std::size_t k = 0; k < dim; ++k) s += w[k] * (*xs[i])[k];
        const double margin = ys[i] * s;
        const double decay  = 1.0 - eta * lambda;
        for (auto & wk : w) wk *= decay;
        if (margin < 1.0) {
            for (std::size_t k = 0; k < dim; ++k)
                w[k] += eta * ys[i] * (*xs[i])[k];
            w[dim] += eta * ys[i];
        }
    }
    LinearSeparator sep;
    sep.w.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(dim));
    sep.bias = w[dim];

    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (ys[i] * sep.score(*xs[i]) > 0) correct++;
    sep.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return sep;
}

}  // namespace sbb
