#include "quasilin/numlin.hpp"

#include <algorithm>
#include <cmath>

namespace quasilin {

int numerical_rank(const Eigen::MatrixXd& M, double rel_tol) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    double smax = sv(0);
    if (smax == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * smax) ++rank;
    return rank;
}

Subspace span(const Eigen::MatrixXd& vectors, double rel_tol) {
    Subspace s;
    s.ambient = static_cast<int>(vectors.rows());
    s.tol = rel_tol;
    if (vectors.cols() == 0 || vectors.rows() == 0) {
        s.basis.resize(vectors.rows(), 0);
        return s;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(vectors, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv(0) : 0.0;
    int rank = 0;
    if (smax > 0.0)
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > rel_tol * smax) ++rank;
    s.basis = svd.matrixU().leftCols(rank);
    return s;
}

Subspace span(const std::vector<Eigen::VectorXd>& vectors, double rel_tol) {
    if (vectors.empty()) {
        Subspace s;
        s.ambient = 0;
        s.tol = rel_tol;
        s.basis.resize(0, 0);
        return s;
    }
    Eigen::MatrixXd M(vectors[0].size(), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].size() != M.rows()) throw DimensionMismatchError("span: mixed vector sizes");
        M.col(static_cast<Eigen::Index>(i)) = vectors[i];
    }
    return span(M, rel_tol);
}

double subspace_distance(const Subspace& U, const Subspace& V) {
    if (U.ambient != V.ambient) throw DimensionMismatchError("subspace_distance: ambient dimensions differ");
    if (U.dim() == 0 && V.dim() == 0) return 0.0;
    if (U.dim() != V.dim()) return M_PI / 2.0;
    Eigen::MatrixXd M = U.basis.transpose() * V.basis;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    double smin = sv(sv.size() - 1);
    smin = std::clamp(smin, -1.0, 1.0);
    return std::acos(smin);
}

double containment_residual(const Subspace& U, const Eigen::VectorXd& v) {
    if (v.size() != U.ambient) throw DimensionMismatchError("containment_residual: vector size differs from ambient");
    if (U.dim() == 0) return v.norm();
    Eigen::VectorXd proj = U.basis * (U.basis.transpose() * v);
    return (v - proj).norm();
}

double containment_residual(const Subspace& U, const Subspace& V) {
    if (U.ambient != V.ambient) throw DimensionMismatchError("containment_residual: ambient dimensions differ");
    double worst = 0.0;
    for (int j = 0; j < V.dim(); ++j)
        worst = std::max(worst, containment_residual(U, V.basis.col(j)));
    return worst;
}

}  // namespace quasilin
