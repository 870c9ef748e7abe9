#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <type_traits>

#include "evoproc/errors.hpp"

namespace evoproc {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

/// Which of the two norms of the pair Y -> X a quantity is measured in.
enum class NormKind { X, Y };

/// Finite-dimensional stand-in for a Banach pair Y embedded in X.
/// Both norms are induced by SPD Gram matrices; all operator norms are
/// exact weighted spectral norms computed through the Cholesky factors.
class DiscreteSpace {
public:
    DiscreteSpace(Matrix gram_x, Matrix gram_y)
        : dim_(gram_x.rows()), gram_x_(std::move(gram_x)), gram_y_(std::move(gram_y)) {
        validate_spd(gram_x_, "gram_x");
        validate_spd(gram_y_, "gram_y");
        if (gram_y_.rows() != dim_)
            throw DimensionError("gram_y size differs from gram_x", dim_, gram_y_.rows());
        chol_x_ = gram_x_.llt().matrixL();
        chol_y_ = gram_y_.llt().matrixL();
        // discrete analogue of the embedding constant in |u|_X <= C |u|_Y
        embed_const_ = weighted_spectral_norm(Matrix::Identity(dim_, dim_), NormKind::Y, NormKind::X);
    }

    /// Identity Grams: both norms Euclidean.
    static DiscreteSpace euclidean(long dim) {
        return DiscreteSpace(Matrix::Identity(dim, dim), Matrix::Identity(dim, dim));
    }

    long dim() const { return dim_; }
    const Matrix& gram(NormKind which) const { return which == NormKind::X ? gram_x_ : gram_y_; }
    const Matrix& gram_x() const { return gram_x_; }
    const Matrix& gram_y() const { return gram_y_; }
    double embed_const() const { return embed_const_; }

    template <typename Derived>
    double norm(const Eigen::MatrixBase<Derived>& u, NormKind which) const {
        check_dim(u.size());
        if constexpr (std::is_same_v<typename Derived::Scalar, double>) {
            return (chol(which).transpose() * u.derived()).norm();
        } else {
            const CMatrix L = chol(which).template cast<std::complex<double>>();
            return (L.transpose() * u.derived()).norm();
        }
    }

    /// Largest singular value of L_to^T M L_from^{-T}; equals
    /// sup |M u|_to / |u|_from over u != 0.
    template <typename Derived>
    double op_norm(const Eigen::MatrixBase<Derived>& M, NormKind from, NormKind to) const {
        check_dim(M.rows());
        check_dim(M.cols());
        if constexpr (std::is_same_v<typename Derived::Scalar, double>) {
            return weighted_spectral_norm(M.derived(), from, to);
        } else {
            const CMatrix Lt = chol(to).template cast<std::complex<double>>();
            const CMatrix Lf = chol(from).template cast<std::complex<double>>();
            const CMatrix W = Lt.transpose() * M.derived();
            const CMatrix S =
                Lf.transpose().triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(W);
            return S.jacobiSvd().singularValues()(0);
        }
    }

private:
    const Matrix& chol(NormKind which) const { return which == NormKind::X ? chol_x_ : chol_y_; }

    void check_dim(long n) const {
        if (n != dim_) throw DimensionError("vector/matrix does not match space dimension", dim_, n);
    }

    double weighted_spectral_norm(const Matrix& M, NormKind from, NormKind to) const {
        check_dim(M.rows());
        check_dim(M.cols());
        const Matrix W = chol(to).transpose() * M;
        const Matrix S = chol(from)
                             .transpose()
                             .triangularView<Eigen::Upper>()
                             .solve<Eigen::OnTheRight>(W);
        return S.jacobiSvd().singularValues()(0);
    }

    static void validate_spd(const Matrix& G, const char* name) {
        if (G.rows() != G.cols()) throw NotSpdError(std::string(name) + " is not square");
        const double scale = G.cwiseAbs().maxCoeff();
        if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0))
            throw NotSpdError(std::string(name) + " is not symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 1e-12 * hi))
            throw NotSpdError(std::string(name) + " is not positive definite (min eig " +
                              std::to_string(lo) + ", max eig " + std::to_string(hi) + ")");
    }

    long dim_;
    Matrix gram_x_;
    Matrix gram_y_;
    Matrix chol_x_;
    Matrix chol_y_;
    double embed_const_ = 1.0;
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

/// Two spaces are interchangeable when their Gram matrices coincide.
inline bool same_space(const DiscreteSpace& a, const DiscreteSpace& b) {
    if (&a == &b) return true;
    return a.dim() == b.dim() && a.gram_x() == b.gram_x() && a.gram_y() == b.gram_y();
}

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
    if (a == b) return true;
    return a && b && same_space(*a, *b);
}

inline double norm(const DiscreteSpace& space, const Vector& u, NormKind which) {
    return space.norm(u, which);
}

/// Weighted operator norm of M acting space_from -> space_to.
/// The two spaces may differ in dimension (rectangular M).
inline double op_norm(const DiscreteSpace& space_from, const DiscreteSpace& space_to, const Matrix& M,
                      NormKind from, NormKind to) {
    if (M.cols() != space_from.dim())
        throw DimensionError("operator domain does not match space", space_from.dim(), M.cols());
    if (M.rows() != space_to.dim())
        throw DimensionError("operator range does not match space", space_to.dim(), M.rows());
    if (space_from.dim() == space_to.dim() && &space_from == &space_to)
        return space_from.op_norm(M, from, to);
    const Matrix Lt = space_to.gram(to).llt().matrixL();
    const Matrix Lf = space_from.gram(from).llt().matrixL();
    const Matrix W = Lt.transpose() * M;
    const Matrix S = Lf.transpose().triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(W);
    return S.jacobiSvd().singularValues()(0);
}

} // namespace evoproc
