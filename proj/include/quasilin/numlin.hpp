// Rank, span, and subspace comparison with explicit tolerances.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "quasilin/errors.hpp"

namespace quasilin {

// Number of singular values exceeding rel_tol times the largest one.
// The zero matrix and empty matrices have rank 0.
int numerical_rank(const Eigen::MatrixXd& M, double rel_tol = 1e-9);

struct Subspace {
    int ambient = 0;
    Eigen::MatrixXd basis;  // orthonormal columns
    double tol = 0.0;

    int dim() const { return static_cast<int>(basis.cols()); }
};

// Orthonormal span of the given column vectors at the given tolerance.
Subspace span(const Eigen::MatrixXd& vectors, double rel_tol = 1e-9);
Subspace span(const std::vector<Eigen::VectorXd>& vectors, double rel_tol = 1e-9);

// Largest principal angle in radians; 0 iff the subspaces are equal,
// pi/2 when the dimensions differ. Throws on ambient mismatch.
double subspace_distance(const Subspace& U, const Subspace& V);

// Norm of the component of v orthogonal to U.
double containment_residual(const Subspace& U, const Eigen::VectorXd& v);

// Worst projection residual of V's basis vectors against U.
double containment_residual(const Subspace& U, const Subspace& V);

}  // namespace quasilin
