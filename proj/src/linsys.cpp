#include "quasilin/linsys.hpp"

#include <algorithm>
#include <numeric>

#include "quasilin/numlin.hpp"

namespace quasilin {

void LinearPair::validate() const {
    if (A.rows() != A.cols()) throw DimensionMismatchError("A must be square");
    if (B.rows() != A.rows()) throw DimensionMismatchError("B row count differs from A");
    if (A.rows() < 1 || B.cols() < 1) throw DimensionMismatchError("empty linear pair");
}

Eigen::MatrixXd controllability_matrix(const LinearPair& p, int depth) {
    p.validate();
    const int n = p.n();
    const int m = p.m();
    Eigen::MatrixXd C(n, static_cast<Eigen::Index>(depth) * m);
    Eigen::MatrixXd block = p.B;
    for (int j = 0; j < depth; ++j) {
        C.middleCols(static_cast<Eigen::Index>(j) * m, m) = block;
        block = p.A * block;
    }
    return C;
}

std::pair<int, bool> kalman_controllable(const LinearPair& p, double rel_tol) {
    p.validate();
    int rank = numerical_rank(controllability_matrix(p, p.n()), rel_tol);
    return {rank, rank == p.n()};
}

KroneckerData kronecker_data(const LinearPair& p, double rel_tol) {
    p.validate();
    const int n = p.n();
    const int m = p.m();
    KroneckerData out;

    Eigen::MatrixXd C = controllability_matrix(p, n);
    out.r.resize(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j)
        out.r[static_cast<std::size_t>(j - 1)] =
            numerical_rank(C.leftCols(static_cast<Eigen::Index>(j) * m), rel_tol);
    out.controllable = out.r.back() == n;

    // Rank increments; they are nonincreasing and vanish from some step on.
    out.s.push_back(m);
    for (int j = 1; j <= n + 1; ++j) {
        int rj = j <= n ? out.r[static_cast<std::size_t>(j - 1)] : out.r.back();
        int rjm1 = j >= 2 ? out.r[static_cast<std::size_t>(j - 2)] : 0;
        int sj = rj - rjm1;
        out.s.push_back(sj);
        if (sj == 0) break;
    }
    out.rho = static_cast<int>(out.s.size()) - 1;

    out.sigma.resize(out.s.size());
    int acc = 0;
    for (int i = static_cast<int>(out.s.size()) - 1; i >= 0; --i) {
        acc += out.s[static_cast<std::size_t>(i)];
        out.sigma[static_cast<std::size_t>(i)] = acc;
    }

    // The index list is the conjugate partition of the increments.
    out.kappa.resize(static_cast<std::size_t>(m), 0);
    for (int j = 1; j <= m; ++j) {
        int count = 0;
        for (int k = 1; k <= out.rho; ++k)
            if (out.s[static_cast<std::size_t>(k)] >= j) ++count;
        out.kappa[static_cast<std::size_t>(j - 1)] = count;
    }
    return out;
}

LinearPair canonical_pair(const std::vector<int>& kappa, int m) {
    int n = std::accumulate(kappa.begin(), kappa.end(), 0);
    if (n < 1) throw DimensionMismatchError("canonical_pair: empty index list");
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(n, m);
    int row = 0;
    for (std::size_t i = 0; i < kappa.size(); ++i) {
        int k = kappa[i];
        if (k == 0) continue;
        for (int j = 0; j < k - 1; ++j) Ac(row + j, row + j + 1) = 1.0;
        Bc(row + k - 1, static_cast<Eigen::Index>(i)) = 1.0;
        row += k;
    }
    return {Ac, Bc};
}

LinearPair transform(const LinearPair& p, const Eigen::MatrixXd& P, const Eigen::MatrixXd& K,
                     const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd Pinv = P.fullPivLu().inverse();
    Eigen::MatrixXd Qinv = Q.fullPivLu().inverse();
    return {P * (p.A - p.B * K) * Pinv, P * p.B * Qinv};
}

BrunovskyResult brunovsky(const LinearPair& p, double rel_tol) {
    p.validate();
    const int n = p.n();
    const int m = p.m();

    auto [kalman_rank, ok] = kalman_controllable(p, rel_tol);
    if (!ok) throw NotControllableError("pair is not controllable (rank " + std::to_string(kalman_rank) +
                                        " of " + std::to_string(n) + ")");

    // Greedy chain selection: walk powers of A applied to the columns of B in
    // index order, keeping each vector that is numerically independent of the
    // ones already chosen. A column whose chain breaks stays broken.
    std::vector<Eigen::MatrixXd> powers;
    powers.push_back(p.B);
    for (int j = 1; j < n; ++j) powers.push_back(p.A * powers.back());

    Eigen::MatrixXd ortho(n, 0);  // orthonormal basis of the selected span
    std::vector<int> mu(static_cast<std::size_t>(m), 0);
    int selected = 0;
    for (int j = 0; j < n && selected < n; ++j) {
        for (int i = 0; i < m && selected < n; ++i) {
            if (mu[static_cast<std::size_t>(i)] != j) continue;  // chain already broken
            Eigen::VectorXd cand = powers[static_cast<std::size_t>(j)].col(i);
            Eigen::VectorXd resid = cand;
            if (ortho.cols() > 0) resid -= ortho * (ortho.transpose() * cand);
            if (resid.norm() > rel_tol * cand.norm() && cand.norm() > 0.0) {
                ortho.conservativeResize(Eigen::NoChange, ortho.cols() + 1);
                ortho.col(ortho.cols() - 1) = resid / resid.norm();
                mu[static_cast<std::size_t>(i)] = j + 1;
                ++selected;
            }
        }
    }
    if (selected != n)
        throw NotControllableError("chain selection found rank " + std::to_string(selected) + " of " +
                                   std::to_string(n));

    // Inputs ordered by descending chain length, ties by original position.
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mu[static_cast<std::size_t>(a)] > mu[static_cast<std::size_t>(b)]; });

    std::vector<int> kappa;
    kappa.reserve(static_cast<std::size_t>(m));
    for (int i : order) kappa.push_back(mu[static_cast<std::size_t>(i)]);

    // Chain basis, grouped per input, and the dual rows of the chain ends.
    Eigen::MatrixXd M(n, n);
    std::vector<int> block_end;  // row index (0-based) of each block's last row
    {
        int col = 0;
        for (int i : order) {
            int k = mu[static_cast<std::size_t>(i)];
            if (k == 0) continue;
            for (int j = 0; j < k; ++j) M.col(col + j) = powers[static_cast<std::size_t>(j)].col(i);
            col += k;
            block_end.push_back(col - 1);
        }
    }
    Eigen::MatrixXd Minv = M.fullPivLu().inverse();

    Eigen::MatrixXd P(n, n);
    {
        int row = 0;
        for (std::size_t c = 0; c < block_end.size(); ++c) {
            Eigen::RowVectorXd q = Minv.row(block_end[c]);
            int k = kappa[c];
            for (int j = 0; j < k; ++j) {
                P.row(row + j) = q;
                q = q * p.A;
            }
            row += k;
        }
    }
    Eigen::MatrixXd Pinv = P.fullPivLu().inverse();

    const int chains = static_cast<int>(block_end.size());
    Eigen::MatrixXd G = P * p.A * Pinv;
    Eigen::MatrixXd PB = P * p.B;
    Eigen::MatrixXd R(chains, m);       // rows of P B at the block ends
    Eigen::MatrixXd Cend(chains, n);    // rows of P A P^-1 at the block ends
    {
        int row = 0;
        for (int c = 0; c < chains; ++c) {
            row += kappa[static_cast<std::size_t>(c)];
            R.row(c) = PB.row(row - 1);
            Cend.row(c) = G.row(row - 1);
        }
    }

    // The feedback cancels the block-end rows: R * (K P^-1) = Cend.
    Eigen::MatrixXd Kp = R.completeOrthogonalDecomposition().solve(Cend);
    Eigen::MatrixXd K = Kp * P;

    // Input basis: block-end rows of P B, completed to an invertible matrix
    // by a basis of their orthogonal complement.
    Eigen::MatrixXd Q(m, m);
    Q.topRows(chains) = R;
    if (chains < m) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
        Q.bottomRows(m - chains) = svd.matrixV().rightCols(m - chains).transpose();
    }

    BrunovskyResult out;
    out.P = P;
    out.K = K;
    out.Q = Q;
    out.kappa = kappa;
    LinearPair canon = canonical_pair(kappa, m);
    out.Ac = canon.A;
    out.Bc = canon.B;
    return out;
}

bool linearly_conjugate(const LinearPair& p1, const LinearPair& p2, double rel_tol) {
    p1.validate();
    p2.validate();
    if (p1.n() != p2.n() || p1.m() != p2.m()) return false;
    KroneckerData k1 = kronecker_data(p1, rel_tol);
    KroneckerData k2 = kronecker_data(p2, rel_tol);
    if (!k1.controllable)
        throw NotControllableError("first pair is not controllable");
    if (!k2.controllable)
        throw NotControllableError("second pair is not controllable");
    return k1.kappa == k2.kappa;
}

}  // namespace quasilin
