#include <doctest.h>

#include "hcarnot/algebra.hpp"

#include <random>

using namespace hcarnot;

namespace {

GroupPoint random_point(const HTypeAlgebra& alg, std::mt19937_64& rng, double scale = 2.0) {
    std::uniform_real_distribution<double> uni(-scale, scale);
    GroupPoint p{Vec(alg.n1()), Vec(alg.n2())};
    for (int i = 0; i < alg.n1(); ++i) p.v(i) = uni(rng);
    for (int m = 0; m < alg.n2(); ++m) p.z(m) = uni(rng);
    return p;
}

}  // namespace

TEST_CASE("H1 group law matches the +-2 exponential-coordinate convention") {
    auto h1 = HTypeAlgebra::heisenberg(1);
    // (x,y,t)(x',y',t') = (x+x', y+y', t+t' - 2xy' + 2yx')
    auto r = multiply(h1, point({1, 0}, {0}), point({0, 1}, {0}));
    CHECK(r.v(0) == doctest::Approx(1.0));
    CHECK(r.v(1) == doctest::Approx(1.0));
    CHECK(r.z(0) == doctest::Approx(-2.0));

    std::mt19937_64 rng(42);
    for (int k = 0; k < 50; ++k) {
        auto p = random_point(h1, rng), q = random_point(h1, rng);
        auto pq = multiply(h1, p, q);
        CHECK(pq.z(0) ==
              doctest::Approx(p.z(0) + q.z(0) - 2 * p.v(0) * q.v(1) + 2 * p.v(1) * q.v(0)));
    }
}

TEST_CASE("horizontal frame rows on H1") {
    auto h1 = HTypeAlgebra::heisenberg(1);
    // X = d/dx + 2y d/dt, Y = d/dy - 2x d/dt at (x,y,t) = (3,5,7).
    Mat f = horizontal_frame(h1, point({3, 5}, {7}));
    REQUIRE(f.rows() == 2);
    REQUIRE(f.cols() == 3);
    CHECK(f(0, 0) == doctest::Approx(1.0));
    CHECK(f(0, 1) == doctest::Approx(0.0));
    CHECK(f(0, 2) == doctest::Approx(10.0));
    CHECK(f(1, 0) == doctest::Approx(0.0));
    CHECK(f(1, 1) == doctest::Approx(1.0));
    CHECK(f(1, 2) == doctest::Approx(-6.0));
}

TEST_CASE("group axioms hold on built-in groups") {
    for (const char* name : {"H1", "H2"}) {
        auto alg = HTypeAlgebra::by_name(name);
        std::mt19937_64 rng(7);
        for (int k = 0; k < 100; ++k) {
            auto p = random_point(alg, rng), q = random_point(alg, rng), r = random_point(alg, rng);
            auto lhs = multiply(alg, multiply(alg, p, q), r);
            auto rhs = multiply(alg, p, multiply(alg, q, r));
            CHECK((lhs.v - rhs.v).norm() == doctest::Approx(0.0).epsilon(1e-12));
            CHECK((lhs.z - rhs.z).norm() == doctest::Approx(0.0).epsilon(1e-12));

            auto e = multiply(alg, p, inverse(alg, p));
            CHECK(e.v.norm() == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(e.z.norm() == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("dilations are automorphisms with Jacobian lambda^Q") {
    auto alg = HTypeAlgebra::by_name("H2");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lam_dist(0.3, 3.0);
    for (int k = 0; k < 50; ++k) {
        auto p = random_point(alg, rng), q = random_point(alg, rng);
        double lam = lam_dist(rng);
        auto a = dilate(alg, lam, multiply(alg, p, q));
        auto b = multiply(alg, dilate(alg, lam, p), dilate(alg, lam, q));
        CHECK((a.v - b.v).norm() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK((a.z - b.z).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
    // The coordinate Jacobian of delta_lambda is lambda^{n1} (lambda^2)^{n2} = lambda^Q.
    double lam = 1.7;
    double jac = std::pow(lam, alg.n1()) * std::pow(lam * lam, alg.n2());
    CHECK(jac == doctest::Approx(std::pow(lam, alg.homogeneous_dim())));
    CHECK_THROWS_AS(dilate(alg, -1.0, alg.origin()), std::invalid_argument);
}

TEST_CASE("left translation preserves coordinate volume (unimodularity)") {
    auto alg = HTypeAlgebra::by_name("H1");
    std::mt19937_64 rng(13);
    auto w = random_point(alg, rng);
    // Finite-difference Jacobian of p -> w p at a random base point.
    auto base = random_point(alg, rng);
    const int n = alg.topological_dim();
    const double h = 1e-6;
    Mat J(n, n);
    auto embed = [&](const GroupPoint& p) {
        Vec x(n);
        x << p.v, p.z;
        return x;
    };
    auto unembed = [&](const Vec& x) {
        return GroupPoint(x.head(alg.n1()), x.tail(alg.n2()));
    };
    Vec x0 = embed(base);
    for (int j = 0; j < n; ++j) {
        Vec xp = x0, xm = x0;
        xp(j) += h;
        xm(j) -= h;
        J.col(j) = (embed(left_translate(alg, w, unembed(xp))) -
                    embed(left_translate(alg, w, unembed(xm)))) /
                   (2 * h);
    }
    CHECK(std::abs(J.determinant()) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("H-type structure: J_Z identities") {
    auto alg = HTypeAlgebra::by_name("H2");
    CHECK(alg.j_scale() == doctest::Approx(16.0));
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        Vec z(alg.n2());
        for (int m = 0; m < alg.n2(); ++m) z(m) = uni(rng);
        Mat J = alg.j_map(z);
        Mat J2 = J * J;
        Mat expect = -alg.j_scale() * z.squaredNorm() * Mat::Identity(alg.n1(), alg.n1());
        CHECK((J2 - expect).norm() == doctest::Approx(0.0).epsilon(1e-9));
        CHECK((J + J.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("non-H-type bracket tensors are rejected") {
    // n1 = 2, n2 = 1, [X1, X2] = 0: J vanishes, not H-type.
    std::vector<double> zero(2 * 2 * 1, 0.0);
    CHECK_THROWS_AS(HTypeAlgebra(2, 1, zero), std::invalid_argument);

    // Non-antisymmetric tensor.
    std::vector<double> bad = {1.0, -4.0, 4.0, 0.0};  // B[0][0][0] = 1
    CHECK_THROWS_AS(HTypeAlgebra(2, 1, bad), std::invalid_argument);

    // n1 = 3 cannot carry an H-type structure (J_Z odd-dimensional skew).
    std::vector<double> odd(3 * 3 * 1, 0.0);
    odd[(0 * 3 + 1) * 1] = -4.0;
    odd[(1 * 3 + 0) * 1] = 4.0;
    CHECK_THROWS_AS(HTypeAlgebra(3, 1, odd), std::invalid_argument);
}

TEST_CASE("homogeneous dimension") {
    CHECK(HTypeAlgebra::by_name("H1").homogeneous_dim() == 4);
    CHECK(HTypeAlgebra::by_name("H2").homogeneous_dim() == 6);
}
