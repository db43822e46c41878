// Controllability structure of linear pairs (A, B): Kalman rank test,
// controllability indices, canonical chain-of-integrators form, and the
// conjugacy classification it induces.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "quasilin/errors.hpp"

namespace quasilin {

struct LinearPair {
    Eigen::MatrixXd A;  // n x n
    Eigen::MatrixXd B;  // n x m

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    void validate() const;
};

// [B, AB, ..., A^(depth-1) B]
Eigen::MatrixXd controllability_matrix(const LinearPair& p, int depth);

// (rank of the depth-n controllability matrix, rank == n)
std::pair<int, bool> kalman_controllable(const LinearPair& p, double rel_tol = 1e-9);

struct KroneckerData {
    std::vector<int> r;      // r[j] = rank [B, ..., A^(j-1) B], j = 1..n
    std::vector<int> s;      // s[0] = m, s[j] = r[j] - r[j-1], up to the first zero
    std::vector<int> sigma;  // sigma[i] = sum of s[j] for j >= i
    int rho = 0;             // smallest j with s[j] == 0
    std::vector<int> kappa;  // controllability indices, descending, length m
    bool controllable = false;
};

KroneckerData kronecker_data(const LinearPair& p, double rel_tol = 1e-9);

struct BrunovskyResult {
    Eigen::MatrixXd P;   // state change of basis
    Eigen::MatrixXd K;   // feedback gain
    Eigen::MatrixXd Q;   // input change of basis
    Eigen::MatrixXd Ac;  // P (A - B K) P^-1
    Eigen::MatrixXd Bc;  // P B Q^-1
    std::vector<int> kappa;
};

// Canonical (Ac, Bc) for the given index list: one shift block per index,
// with the input entering at the last row of its block.
LinearPair canonical_pair(const std::vector<int>& kappa, int m);

// Transformed pair (P (A - B K) P^-1, P B Q^-1).
LinearPair transform(const LinearPair& p, const Eigen::MatrixXd& P, const Eigen::MatrixXd& K,
                     const Eigen::MatrixXd& Q);

// Throws NotControllableError when the pair is not controllable.
BrunovskyResult brunovsky(const LinearPair& p, double rel_tol = 1e-9);

// True iff the pairs have the same dimensions and identical sorted index
// lists. Dimension mismatch yields false; an uncontrollable input throws.
bool linearly_conjugate(const LinearPair& p1, const LinearPair& p2, double rel_tol = 1e-9);

}  // namespace quasilin
