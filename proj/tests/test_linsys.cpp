#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "quasilin/linsys.hpp"
#include "quasilin/numlin.hpp"

using namespace quasilin;

namespace {

LinearPair pair_of(std::initializer_list<std::initializer_list<double>> a,
                   std::initializer_list<std::initializer_list<double>> b) {
    auto fill = [](std::initializer_list<std::initializer_list<double>> rows) {
        Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.begin()->size()));
        Eigen::Index i = 0;
        for (const auto& row : rows) {
            Eigen::Index j = 0;
            for (double v : row) M(i, j++) = v;
            ++i;
        }
        return M;
    };
    return {fill(a), fill(b)};
}

LinearPair random_controllable(int n, int m, std::mt19937& rng) {
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    while (true) {
        Eigen::MatrixXd A(n, n), B(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = entry(rng);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) B(i, j) = entry(rng);
        LinearPair p{A, B};
        if (kalman_controllable(p).second) return p;
    }
}

}  // namespace

TEST_CASE("controllability matrix and the Kalman test") {
    LinearPair p = pair_of({{0, 1}, {0, 0}}, {{0}, {1}});
    Eigen::MatrixXd C = controllability_matrix(p, 2);
    CHECK(C.rows() == 2);
    CHECK(C.cols() == 2);
    CHECK(C(0, 0) == 0.0);
    CHECK(C(1, 0) == 1.0);
    CHECK(C(0, 1) == 1.0);  // A B = e1
    CHECK(C(1, 1) == 0.0);
    CHECK(kalman_controllable(p).second);

    LinearPair diag = pair_of({{1, 0}, {0, 1}}, {{1}, {0}});  // second state unreachable
    CHECK_FALSE(kalman_controllable(diag).second);
    CHECK(kalman_controllable(diag).first == 1);
}

TEST_CASE("growth vector and indices of the planar rank-jump pair") {
    // B has rank 1, [B, AB] has rank 2: kappa = [2, 0].
    LinearPair p = pair_of({{0, 0}, {1, 0}}, {{1, 0}, {0, 0}});
    KroneckerData kd = kronecker_data(p);
    CHECK(kd.r == std::vector<int>{1, 2});
    CHECK(kd.s == std::vector<int>{2, 1, 1, 0});
    CHECK(kd.rho == 3);
    CHECK(kd.kappa == std::vector<int>{2, 0});
    CHECK(kd.controllable);

    // Two independent integrators: kappa = [1, 1].
    LinearPair q = pair_of({{0, 0}, {0, 0}}, {{1, 0}, {0, 1}});
    KroneckerData kq = kronecker_data(q);
    CHECK(kq.kappa == std::vector<int>{1, 1});
    CHECK(kq.r == std::vector<int>{2, 2});

    // Uncontrollable pair still reports its partial growth.
    LinearPair u = pair_of({{1, 0}, {0, 1}}, {{1}, {0}});
    KroneckerData ku = kronecker_data(u);
    CHECK_FALSE(ku.controllable);
    CHECK(ku.r.back() == 1);
}

TEST_CASE("canonical pair has one shift block per index") {
    LinearPair c = canonical_pair({2, 1}, 2);
    CHECK(c.n() == 3);
    CHECK(c.m() == 2);
    Eigen::MatrixXd Ac(3, 3), Bc(3, 2);
    Ac << 0, 1, 0, 0, 0, 0, 0, 0, 0;
    Bc << 0, 0, 1, 0, 0, 1;
    CHECK((c.A - Ac).norm() == 0.0);
    CHECK((c.B - Bc).norm() == 0.0);

    // Zero indices contribute nothing but keep their input column.
    LinearPair z = canonical_pair({2, 0}, 2);
    CHECK(z.n() == 2);
    CHECK(z.m() == 2);
    CHECK(z.B.col(1).norm() == 0.0);
    CHECK(kronecker_data(z).kappa == std::vector<int>{2, 0});
}

TEST_CASE("brunovsky reduces a controllable pair to its canonical form") {
    LinearPair p = pair_of({{0, 1}, {-2, 3}}, {{0}, {1}});
    BrunovskyResult br = brunovsky(p);
    CHECK(br.kappa == std::vector<int>{2});
    LinearPair canon = canonical_pair(br.kappa, p.m());
    CHECK((br.Ac - canon.A).norm() < 1e-12);
    CHECK((br.Bc - canon.B).norm() < 1e-12);
    LinearPair moved = transform(p, br.P, br.K, br.Q);
    CHECK((moved.A - br.Ac).norm() < 1e-12);
    CHECK((moved.B - br.Bc).norm() < 1e-12);

    LinearPair bad = pair_of({{1, 0}, {0, 1}}, {{1}, {0}});
    CHECK_THROWS_AS(brunovsky(bad), NotControllableError);
}

TEST_CASE("brunovsky round trip on random controllable pairs") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> pick_n(1, 6), pick_m(1, 3);
    for (int k = 0; k < 60; ++k) {
        int n = pick_n(rng), m = pick_m(rng);
        LinearPair p = random_controllable(n, m, rng);
        BrunovskyResult br = brunovsky(p);
        LinearPair canon = canonical_pair(br.kappa, m);
        double scale = 1.0 + p.A.norm() + p.B.norm();
        CAPTURE(n);
        CAPTURE(m);
        CHECK((br.Ac - canon.A).norm() + (br.Bc - canon.B).norm() <= 1e-8 * scale);

        KroneckerData kd = kronecker_data(p);
        CHECK(br.kappa == kd.kappa);
        int total = 0;
        for (int kappa_j : kd.kappa) total += kappa_j;
        CHECK(total == n);
        for (std::size_t j = 0; j + 1 < kd.s.size(); ++j) CHECK(kd.s[j] >= kd.s[j + 1]);
        // s[k] counts the indices of size >= k (conjugate partition).
        for (std::size_t j = 0; j < kd.s.size(); ++j) {
            int count = 0;
            for (int kappa_j : kd.kappa) count += kappa_j >= static_cast<int>(j) ? 1 : 0;
            if (j == 0)
                CHECK(kd.s[j] == m);
            else
                CHECK(kd.s[j] == count);
        }
    }
}

TEST_CASE("linear conjugacy is decided by the index lists") {
    LinearPair jump = pair_of({{0, 0}, {1, 0}}, {{1, 0}, {0, 0}});   // kappa [2, 0]
    LinearPair flat = pair_of({{0, 0}, {0, 0}}, {{1, 0}, {0, 1}});   // kappa [1, 1]
    CHECK_FALSE(linearly_conjugate(jump, flat));
    CHECK(linearly_conjugate(jump, canonical_pair({2, 0}, 2)));
    CHECK(linearly_conjugate(flat, canonical_pair({1, 1}, 2)));

    // Conjugating by a random basis/feedback/input change preserves the class.
    std::mt19937 rng(7);
    LinearPair p = random_controllable(4, 2, rng);
    Eigen::MatrixXd P = Eigen::MatrixXd::Random(4, 4) + 4.0 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd K = Eigen::MatrixXd::Random(2, 4);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Random(2, 2) + 3.0 * Eigen::MatrixXd::Identity(2, 2);
    CHECK(linearly_conjugate(p, transform(p, P, K, Q)));

    // Dimension mismatch is just "not conjugate".
    CHECK_FALSE(linearly_conjugate(p, flat));
}
