#include "doctest.h"

#include "hcarnot/capacity.hpp"
#include "hcarnot/curves.hpp"
#include "hcarnot/kaplan.hpp"
#include "hcarnot/maps.hpp"
#include "hcarnot/quadrature.hpp"

#include <cmath>
#include <random>

using namespace hcarnot;

namespace {

const HTypeAlgebra& h1() {
    static HTypeAlgebra alg = HTypeAlgebra::heisenberg(1);
    return alg;
}

const KaplanNorm& norm1() {
    static KaplanNorm K = calibrated_norm(h1());
    return K;
}

const SphereQuadrature& quad1() {
    static SphereQuadrature q = build_sphere_quadrature(norm1(), 20000, 7u);
    return q;
}

}  // namespace

TEST_CASE("winding action on points") {
    auto f = QRMapDescriptor::winding(2);
    GroupPoint y = apply(h1(), f, point({0.0, 1.0}, {0.0}));
    CHECK(y.v(0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(y.v(1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(y.z(0) == doctest::Approx(0.0).epsilon(1e-12));

    // t scales by k, radius is preserved.
    GroupPoint q = apply(h1(), f, point({3.0, 4.0}, {0.7}));
    CHECK(q.v.norm() == doctest::Approx(5.0));
    CHECK(q.z(0) == doctest::Approx(1.4));
}

TEST_CASE("descriptor mini-language round trip") {
    const char* texts[] = {"identity", "dilate:2.5", "translate:1,-2,0.5", "winding:3",
                           "compose:[winding:2;dilate:3]"};
    for (const char* s : texts) {
        auto f = QRMapDescriptor::parse(s, h1());
        auto g = QRMapDescriptor::parse(f.describe(), h1());
        GroupPoint p = point({0.3, -0.4}, {0.2});
        GroupPoint fp = apply(h1(), f, p);
        GroupPoint gp = apply(h1(), g, p);
        CHECK((fp.v - gp.v).norm() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK((fp.z - gp.z).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(QRMapDescriptor::parse("spiral:2", h1()), std::invalid_argument);
    CHECK_THROWS_AS(QRMapDescriptor::parse("translate:1,2", h1()), std::invalid_argument);
    CHECK_THROWS_AS(QRMapDescriptor::winding(0), std::invalid_argument);
}

TEST_CASE("horizontal differential closed forms") {
    GroupPoint p = point({0.6, -0.2}, {0.1});

    Mat di = horizontal_differential(h1(), QRMapDescriptor::identity(), p);
    CHECK((di - Mat::Identity(2, 2)).norm() == doctest::Approx(0.0));

    Mat dd = horizontal_differential(h1(), QRMapDescriptor::dilation(2.0), p);
    CHECK((dd - 2.0 * Mat::Identity(2, 2)).norm() == doctest::Approx(0.0));

    Mat dt = horizontal_differential(
        h1(), QRMapDescriptor::translation(point({1.0, 2.0}, {3.0})), p);
    CHECK((dt - Mat::Identity(2, 2)).norm() == doctest::Approx(0.0));

    // Winding k: singular values {1, k} everywhere off the axis.
    auto fw = QRMapDescriptor::winding(2);
    Mat dw = horizontal_differential(h1(), fw, p);
    Eigen::JacobiSVD<Mat> svd(dw);
    CHECK(svd.singularValues()(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(svd.singularValues()(1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(horizontal_differential(h1(), fw, point({0.0, 0.0}, {1.0})),
                    std::invalid_argument);
}

TEST_CASE("finite-difference differential matches the analytic one") {
    std::mt19937_64 rng(11u);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<QRMapDescriptor> maps = {
        QRMapDescriptor::identity(),
        QRMapDescriptor::dilation(1.7),
        QRMapDescriptor::translation(point({0.4, -0.9}, {0.3})),
        QRMapDescriptor::winding(2),
        QRMapDescriptor::winding(3),
        QRMapDescriptor::composition({QRMapDescriptor::winding(2),
                                      QRMapDescriptor::dilation(0.5),
                                      QRMapDescriptor::translation(point({1.0, 0.0}, {0.0}))}),
    };
    for (const auto& f : maps) {
        for (int s = 0; s < 1000; ++s) {
            GroupPoint p = point({uni(rng), uni(rng)}, {uni(rng)});
            if (p.v.norm() < 0.1) continue;  // stay clear of the winding axis
            Mat a = horizontal_differential(h1(), f, p);
            Mat d = fd_horizontal_differential(h1(), f, p);
            CHECK((a - d).cwiseAbs().maxCoeff() < 1e-5);
        }
    }
}

TEST_CASE("formal jacobian values and positivity") {
    GroupPoint p = point({0.5, 0.8}, {-0.3});
    CHECK(formal_jacobian(h1(), QRMapDescriptor::identity(), p) == doctest::Approx(1.0));
    CHECK(formal_jacobian(h1(), QRMapDescriptor::dilation(2.0), p) ==
          doctest::Approx(16.0));  // lambda^Q, Q = 4
    CHECK(formal_jacobian(h1(), QRMapDescriptor::winding(3), p) == doctest::Approx(9.0));

    std::mt19937_64 rng(13u);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto f = QRMapDescriptor::composition(
        {QRMapDescriptor::winding(2), QRMapDescriptor::dilation(1.3)});
    for (int s = 0; s < 200; ++s) {
        GroupPoint q = point({uni(rng), uni(rng)}, {uni(rng)});
        if (q.v.norm() < 0.1) continue;
        CHECK(formal_jacobian(h1(), f, q) > 0.0);
    }
}

TEST_CASE("distortion coefficients") {
    Distortion di = distortion(norm1(), QRMapDescriptor::identity(), 1.0, 2000, 5u);
    CHECK(di.K == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(di.K_O == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(di.K_I == doctest::Approx(1.0).epsilon(1e-10));

    Distortion dd = distortion(norm1(), QRMapDescriptor::dilation(3.0), 1.0, 2000, 5u);
    CHECK(dd.K == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(dd.K_O == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(dd.K_I == doctest::Approx(1.0).epsilon(1e-10));

    Distortion dw = distortion(norm1(), QRMapDescriptor::winding(2), 1.0, 4000, 5u);
    CHECK(dw.K == doctest::Approx(2.0).epsilon(2e-2));
    CHECK(dw.K_O == doctest::Approx(4.0).epsilon(2e-2));
    CHECK(dw.K_I == doctest::Approx(4.0).epsilon(2e-2));
}

TEST_CASE("preimages of winding") {
    auto f = QRMapDescriptor::winding(3);
    GroupPoint y = point({1.0, 0.0}, {0.6});
    auto pre = preimages(norm1(), f, y, std::numeric_limits<double>::infinity());
    REQUIRE(pre.size() == 3);
    for (const auto& [x, idx] : pre) {
        CHECK(idx == 1);
        GroupPoint fx = apply(h1(), f, x);
        CHECK((fx.v - y.v).norm() == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(fx.z(0) == doctest::Approx(0.6));
        CHECK(x.z(0) == doctest::Approx(0.2));
    }

    // On the axis of rotation the single preimage carries full local index.
    auto axis = preimages(norm1(), f, point({0.0, 0.0}, {0.9}), 10.0);
    REQUIRE(axis.size() == 1);
    CHECK(axis[0].second == 3);
    CHECK(axis[0].first.z(0) == doctest::Approx(0.3));
}

TEST_CASE("counting function of winding") {
    auto f = QRMapDescriptor::winding(4);
    const auto& K = norm1();
    std::mt19937_64 rng(17u);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    for (int s = 0; s < 500; ++s) {
        GroupPoint y = point({uni(rng), uni(rng)}, {uni(rng)});
        double r = 0.2 + 1.0 * (uni(rng) + 1.5) / 3.0;
        double rho = y.v.norm();
        double pre_norm = std::pow(std::pow(rho, 4) + std::pow(y.z(0) / 4.0, 2), 0.25);
        int expect = pre_norm < r ? 4 : 0;
        if (std::abs(pre_norm - r) < 1e-6) continue;  // skip knife-edge draws
        CHECK(counting_n(K, f, r, y) == expect);
    }
    CHECK(counting_n(K, f, 0.0, point({0.3, 0.0}, {0.0})) == 0);
}

TEST_CASE("counting function integrates against the jacobian") {
    // Area formula: int n(1, y) dLeb(y) = int_{B_1} J_euc dLeb, and the
    // winding map has constant Euclidean Jacobian k (planar) * k (center)
    // = k^2, so the integral equals k^2 |B_1|.
    const auto& K = norm1();
    const int k = 3;
    auto f = QRMapDescriptor::winding(k);
    std::mt19937_64 rng(23u);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    // f(B_1) lies inside the box |v| <= 1, |t| <= k * t_max(B_1).
    const double hz = K.box_halfwidth_z(1.0) * k;
    double acc = 0.0;
    int n_samples = 200000;
    for (int s = 0; s < n_samples; ++s) {
        GroupPoint y = point({uni(rng), uni(rng)}, {uni(rng) * hz});
        acc += counting_n(K, f, 1.0, y);
    }
    double box_vol = 2.0 * 2.0 * 2.0 * hz;
    double integral = box_vol * acc / n_samples;             // Lebesgue
    double ball_vol_lebesgue = K.m0();                       // |B_1| = m0 r^Q
    CHECK(integral == doctest::Approx(k * k * ball_vol_lebesgue).epsilon(3e-2));
}

TEST_CASE("curve lifting round trip") {
    const auto& K = norm1();
    auto f = QRMapDescriptor::winding(2);
    // Down-project a known curve, lift it back, compare.
    GroupPoint x0 = point({1.0, 0.2}, {0.1});
    Curve alpha;
    int n = 200;
    for (int i = 0; i <= n; ++i) {
        double s = static_cast<double>(i) / n;
        // Smooth path spiralling outward, staying away from the axis.
        GroupPoint p = point({std::cos(2.0 * s) * (1.0 + s) + x0.v(0) - 1.0,
                              std::sin(2.0 * s) * (1.0 + s) + x0.v(1)},
                             {x0.z(0) + 0.4 * s});
        alpha.push_back(s, p);
    }
    Curve beta;
    for (size_t i = 0; i < alpha.size(); ++i)
        beta.push_back(alpha.t[i], apply(h1(), f, alpha.p[i]));

    LiftResult res = lift_curve(K, f, beta, alpha.p[0]);
    REQUIRE(res.complete);
    REQUIRE(res.alpha.size() == alpha.size());
    for (size_t i = 0; i < alpha.size(); ++i)
        CHECK(K.distance(res.alpha.p[i], alpha.p[i]) < 1e-6);

    CHECK_THROWS_AS(lift_curve(K, f, beta, point({5.0, 5.0}, {0.0})), std::invalid_argument);
}

TEST_CASE("module inequalities: conformal maps are exact") {
    const auto& K = norm1();
    const auto& quad = quad1();
    SphereSet upper_half = [](const GroupPoint& y) { return y.v(1) > 0.2; };

    for (const char* text : {"identity", "dilate:2.0", "translate:0.5,-0.3,0.2",
                             "compose:[dilate:0.5;translate:1,0,0]"}) {
        auto f = QRMapDescriptor::parse(text, h1());
        auto rep = module_inequality_report(K, quad, f, upper_half, 1.0, std::exp(1.0));
        CHECK(rep.outer.holds);
        CHECK(rep.inner.holds);
        CHECK(rep.lifting.holds);
        CHECK(rep.K_O == doctest::Approx(1.0));
        CHECK(rep.image_lower == doctest::Approx(rep.modulus_domain).epsilon(1e-12));
        CHECK(rep.image_upper == doctest::Approx(rep.modulus_domain).epsilon(1e-12));
        // Equality cases: margin of the lifting verdict is zero.
        CHECK(std::abs(rep.lifting.margin) < 1e-12);
    }
}

TEST_CASE("module inequalities: winding maps") {
    const auto& K = norm1();
    const auto& quad = quad1();
    std::mt19937_64 rng(31u);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    for (int k : {2, 3}) {
        auto f = QRMapDescriptor::winding(k);
        for (int cfg = 0; cfg < 20; ++cfg) {
            // Random spherical cap, random ring with b/a in [e^2, e^3] so
            // the certified bounds are conclusive.
            double cz = 2.0 * uni(rng) - 1.0;
            double cphi = 2.0 * M_PI * uni(rng);
            Vec axis(2);
            axis << std::cos(cphi), std::sin(cphi);
            double cap = 0.3 + 0.5 * uni(rng);
            SphereSet E = [axis, cz, cap](const GroupPoint& y) {
                if (y.v.norm() < 1e-9) return false;
                Vec d = y.v / y.v.norm();
                return (d - axis).norm() < cap && (cz > 0 ? y.z(0) > 0 : y.z(0) <= 0);
            };
            double a = 0.5 + uni(rng);
            double b = a * std::exp(2.0 + uni(rng));
            auto rep = module_inequality_report(K, quad, f, E, a, b);
            if (rep.sigma_domain == 0.0) continue;  // cap missed every node
            CHECK(rep.outer.holds);
            CHECK(rep.inner.holds);
            CHECK(rep.lifting.holds);
            CHECK(rep.multiplicity == k);
            CHECK(rep.K_O == doctest::Approx(static_cast<double>(k) * k));
        }
        // Ring too thin for the winding bounds: refuse rather than guess.
        CHECK_THROWS_AS(module_inequality_report(K, quad, f,
                                                 [](const GroupPoint&) { return true; }, 1.0,
                                                 0.9 * std::sqrt(static_cast<double>(k))),
                        std::invalid_argument);
    }
}
