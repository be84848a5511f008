#include "flexstage/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "flexstage/errors.hpp"

namespace flexstage {

EigenPairs dense_eigenpairs(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (k + k.transpose()), 0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed to converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

namespace {

// Shift-invert block Krylov subspace with full M-reorthogonalization and
// Rayleigh-Ritz extraction. The block start handles repeated eigenvalues
// (square symmetric plates) up to multiplicity block_size.
class BlockKrylov {
public:
    BlockKrylov(const Eigen::SparseMatrix<double>& k, const Eigen::SparseMatrix<double>& m,
                const EigenOptions& opt, const Eigen::MatrixXd& deflation)
        : k_(k), m_(m), opt_(opt), rng_(opt.seed), n_(static_cast<int>(k.rows())),
          defl_(deflation) {
        if (defl_.cols() > 0) mdefl_ = m_ * defl_;
        Eigen::SparseMatrix<double> shifted = k - opt.shift * m;
        solver_.compute(shifted);
        if (solver_.info() != Eigen::Success)
            throw NumericalError("factorization of shifted stiffness failed");
    }

    EigenPairs run(int count) {
        const int b = std::max(1, opt_.block_size);
        const int max_dim = std::min(n_, std::max(6 * count + 60, 4 * b));
        v_.resize(n_, max_dim);
        mv_.resize(n_, max_dim);
        w_.resize(n_, max_dim);

        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Eigen::MatrixXd start(n_, b);
        for (int c = 0; c < b; ++c)
            for (int r = 0; r < n_; ++r) start(r, c) = dist(rng_);
        append(start);

        int processed = 0;
        while (true) {
            for (; processed < dim_; ++processed) {
                w_.col(processed) = solver_.solve(mv_.col(processed));
                if (defl_.cols() > 0) w_.col(processed) -= defl_ * (mdefl_.transpose() * w_.col(processed));
            }
            if (dim_ >= std::min(n_, count + b)) {
                EigenPairs out;
                if (rayleigh_ritz(count, out)) return out;
            }
            if (dim_ >= max_dim)
                throw NumericalError("eigensolver failed to converge within subspace limit");
            const int take = std::min(b, max_dim - dim_);
            append(w_.middleCols(dim_ - b, take));
        }
    }

private:
    void append(const Eigen::MatrixXd& block) {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (int c = 0; c < block.cols() && dim_ < v_.cols(); ++c) {
            Eigen::VectorXd x = block.col(c);
            for (int attempt = 0; attempt < 3; ++attempt) {
                if (defl_.cols() > 0) {
                    const Eigen::VectorXd coef = mdefl_.transpose() * x;
                    x.noalias() -= defl_ * coef;
                }
                const double ref = std::sqrt(std::max(x.dot(m_ * x), 0.0));
                for (int pass = 0; pass < 2 && dim_ > 0; ++pass) {
                    const Eigen::VectorXd coef = mv_.leftCols(dim_).transpose() * x;
                    x.noalias() -= v_.leftCols(dim_) * coef;
                }
                const Eigen::VectorXd mx = m_ * x;
                const double norm = std::sqrt(std::max(x.dot(mx), 0.0));
                if (norm > 1e-10 * ref && norm > 0.0) {
                    v_.col(dim_) = x / norm;
                    mv_.col(dim_) = mx / norm;
                    ++dim_;
                    break;
                }
                for (int r = 0; r < n_; ++r) x(r) = dist(rng_);
            }
        }
    }

    bool rayleigh_ritz(int count, EigenPairs& out) {
        Eigen::MatrixXd t = mv_.leftCols(dim_).transpose() * w_.leftCols(dim_);
        t = 0.5 * (t + t.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        if (es.info() != Eigen::Success) throw NumericalError("projected eigenproblem failed");
        // Largest nu = 1/(lambda - shift) are the lowest lambda; eigenvalues() is ascending.
        out.values.resize(count);
        out.vectors.resize(n_, count);
        // Residual of the shift-inverted operator, ||Op x - nu x||_M / nu, with Op x = W y.
        // Measuring it in this space keeps rigid modes (K x ~ round-off) on the same
        // footing as elastic ones.
        for (int i = 0; i < count; ++i) {
            const int idx = dim_ - 1 - i;
            const double nu = es.eigenvalues()(idx);
            if (!(nu > 0.0)) return false;
            const auto y = es.eigenvectors().col(idx);
            out.values(i) = opt_.shift + 1.0 / nu;
            out.vectors.col(i) = v_.leftCols(dim_) * y;
            const Eigen::VectorXd d = w_.leftCols(dim_) * y - nu * out.vectors.col(i);
            const double res = std::sqrt(std::max(d.dot(m_ * d), 0.0)) / nu;
            if (!(res <= opt_.tolerance)) return false;
        }
        return true;
    }

    const Eigen::SparseMatrix<double>& k_;
    const Eigen::SparseMatrix<double>& m_;
    EigenOptions opt_;
    std::mt19937_64 rng_;
    int n_;
    int dim_ = 0;
    Eigen::MatrixXd defl_, mdefl_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
    Eigen::MatrixXd v_, mv_, w_;
};

}  // namespace

EigenPairs lowest_eigenpairs(const Eigen::SparseMatrix<double>& k,
                             const Eigen::SparseMatrix<double>& m, int count,
                             const EigenOptions& options, const Eigen::MatrixXd& deflation) {
    const int n = static_cast<int>(k.rows());
    if (k.cols() != n || m.rows() != n || m.cols() != n)
        throw InputError("eigensolver: matrix dimensions disagree");
    const int defl = static_cast<int>(deflation.cols());
    if (defl > 0 && deflation.rows() != n) throw InputError("eigensolver: deflation basis size");
    if (count < 1 || count + defl > n)
        throw InputError("eigensolver: requested mode count out of range");

    if (n <= options.dense_threshold || 3 * (count + defl) > n) {
        EigenPairs all = dense_eigenpairs(Eigen::MatrixXd(k), Eigen::MatrixXd(m));
        if (defl == 0) return {all.values.head(count), all.vectors.leftCols(count)};
        // Drop the eigenvectors that live in the deflated subspace.
        const Eigen::MatrixXd mdefl = m * deflation;
        EigenPairs out{Eigen::VectorXd(count), Eigen::MatrixXd(n, count)};
        std::vector<std::pair<double, int>> kept;
        for (int i = 0; i < all.values.size(); ++i) {
            const double overlap = (mdefl.transpose() * all.vectors.col(i)).squaredNorm();
            kept.emplace_back(overlap, i);
        }
        std::stable_sort(kept.begin(), kept.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<int> rest;
        for (std::size_t i = static_cast<std::size_t>(defl); i < kept.size(); ++i)
            rest.push_back(kept[i].second);
        std::sort(rest.begin(), rest.end());
        for (int i = 0; i < count; ++i) {
            out.values(i) = all.values(rest[i]);
            Eigen::VectorXd x = all.vectors.col(rest[i]);
            x -= deflation * (mdefl.transpose() * x);
            out.vectors.col(i) = x / std::sqrt(x.dot(m * x));
        }
        return out;
    }

    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> mass_check(m);
    if (mass_check.info() != Eigen::Success)
        throw NumericalError("mass matrix is not positive definite");

    BlockKrylov krylov(k, m, options, deflation);
    return krylov.run(count);
}

}  // namespace flexstage
