#include "hcarnot/algebra.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hcarnot {

bool GroupPoint::is_finite() const {
    return v.allFinite() && z.allFinite();
}

HTypeAlgebra::HTypeAlgebra(int n1, int n2, std::vector<double> bracket,
                           std::string name, double tol)
    : n1_(n1), n2_(n2), bracket_(std::move(bracket)), name_(std::move(name)) {
    if (n1_ < 1 || n2_ < 1)
        throw std::invalid_argument("HTypeAlgebra: n1 and n2 must be positive");
    if (bracket_.size() != static_cast<size_t>(n1_) * n1_ * n2_)
        throw std::invalid_argument("HTypeAlgebra: bracket tensor has wrong size");
    validate(tol);
}

void HTypeAlgebra::validate(double tol) {
    double scale = 0.0;
    for (double b : bracket_) scale = std::max(scale, std::abs(b));
    if (scale == 0.0)
        throw std::invalid_argument("HTypeAlgebra: bracket tensor is zero");

    for (int i = 0; i < n1_; ++i)
        for (int j = 0; j < n1_; ++j)
            for (int m = 0; m < n2_; ++m)
                if (std::abs(bracket_entry(i, j, m) + bracket_entry(j, i, m)) > tol * scale)
                    throw std::invalid_argument("HTypeAlgebra: bracket tensor not antisymmetric");

    // H-type scale from the first center direction, then consistency for
    // basis vectors and a handful of random center vectors.
    Vec e0 = Vec::Zero(n2_);
    e0(0) = 1.0;
    Mat j0 = j_map(e0);
    Mat sq = j0 * j0;
    j_scale_ = -sq.trace() / n1_;
    if (j_scale_ <= 0.0)
        throw std::invalid_argument("HTypeAlgebra: J_Z^2 is not negative definite");

    std::mt19937_64 rng(20240817);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto check_z = [&](const Vec& z) {
        Mat jz = j_map(z);
        Mat res = jz * jz + j_scale_ * z.squaredNorm() * Mat::Identity(n1_, n1_);
        if (res.cwiseAbs().maxCoeff() > tol * scale * scale * std::max(1.0, z.squaredNorm()))
            throw std::invalid_argument("HTypeAlgebra: H-type condition fails");
    };
    for (int m = 0; m < n2_; ++m) {
        Vec z = Vec::Zero(n2_);
        z(m) = 1.0;
        check_z(z);
    }
    for (int k = 0; k < 24; ++k) {
        Vec z(n2_);
        for (int m = 0; m < n2_; ++m) z(m) = gauss(rng);
        check_z(z);
    }
}

HTypeAlgebra HTypeAlgebra::heisenberg(int n) {
    if (n < 1) throw std::invalid_argument("heisenberg: n must be positive");
    int n1 = 2 * n;
    std::vector<double> b(static_cast<size_t>(n1) * n1, 0.0);
    // [X_i, Y_i] = -4T with basis order x_1..x_n, y_1..y_n.
    for (int i = 0; i < n; ++i) {
        b[static_cast<size_t>(i) * n1 + (n + i)] = -4.0;
        b[static_cast<size_t>(n + i) * n1 + i] = 4.0;
    }
    HTypeAlgebra alg(n1, 1, std::move(b), "H" + std::to_string(n));
    alg.heisenberg_ = true;
    return alg;
}

HTypeAlgebra HTypeAlgebra::by_name(const std::string& name) {
    if (name == "H1") return heisenberg(1);
    if (name == "H2") return heisenberg(2);
    throw std::invalid_argument("unknown built-in group '" + name + "' (have: H1, H2)");
}

Vec HTypeAlgebra::bracket(const Vec& u, const Vec& w) const {
    Vec out = Vec::Zero(n2_);
    for (int m = 0; m < n2_; ++m) {
        double s = 0.0;
        for (int i = 0; i < n1_; ++i) {
            double ui = u(i);
            if (ui == 0.0) continue;
            for (int j = 0; j < n1_; ++j) s += bracket_entry(i, j, m) * ui * w(j);
        }
        out(m) = s;
    }
    return out;
}

Mat HTypeAlgebra::j_map(const Vec& z) const {
    // <J_Z u, w> = sum_m z_m B[i][j][m] u_i w_j, so (J_Z u)_j = sum_{i,m} z_m B[i][j][m] u_i.
    Mat j = Mat::Zero(n1_, n1_);
    for (int i = 0; i < n1_; ++i)
        for (int j2 = 0; j2 < n1_; ++j2) {
            double s = 0.0;
            for (int m = 0; m < n2_; ++m) s += z(m) * bracket_entry(i, j2, m);
            j(j2, i) = s;
        }
    return j;
}

GroupPoint HTypeAlgebra::origin() const {
    return GroupPoint(Vec::Zero(n1_), Vec::Zero(n2_));
}

void HTypeAlgebra::check_point(const GroupPoint& p) const {
    if (p.v.size() != n1_ || p.z.size() != n2_)
        throw std::invalid_argument("point dimensions do not match algebra");
    if (!p.v.allFinite() || !p.z.allFinite())
        throw std::invalid_argument("point has non-finite coordinates");
}

GroupPoint multiply(const HTypeAlgebra& alg, const GroupPoint& p, const GroupPoint& q) {
    alg.check_point(p);
    alg.check_point(q);
    return GroupPoint(p.v + q.v, p.z + q.z + 0.5 * alg.bracket(p.v, q.v));
}

GroupPoint inverse(const HTypeAlgebra& alg, const GroupPoint& p) {
    alg.check_point(p);
    return GroupPoint(-p.v, -p.z);
}

GroupPoint dilate(const HTypeAlgebra& alg, double lambda, const GroupPoint& p) {
    alg.check_point(p);
    if (!(lambda > 0.0)) throw std::invalid_argument("dilate: lambda must be positive");
    return GroupPoint(lambda * p.v, lambda * lambda * p.z);
}

GroupPoint left_translate(const HTypeAlgebra& alg, const GroupPoint& w, const GroupPoint& p) {
    return multiply(alg, w, p);
}

Mat horizontal_frame(const HTypeAlgebra& alg, const GroupPoint& p) {
    alg.check_point(p);
    const int n1 = alg.n1(), n2 = alg.n2();
    Mat frame = Mat::Zero(n1, n1 + n2);
    for (int j = 0; j < n1; ++j) {
        frame(j, j) = 1.0;
        Vec ej = Vec::Zero(n1);
        ej(j) = 1.0;
        Vec c = alg.bracket(p.v, ej);
        for (int m = 0; m < n2; ++m) frame(j, n1 + m) = 0.5 * c(m);
    }
    return frame;
}

GroupPoint point(std::initializer_list<double> v, std::initializer_list<double> z) {
    Vec vv(static_cast<Eigen::Index>(v.size())), zz(static_cast<Eigen::Index>(z.size()));
    Eigen::Index i = 0;
    for (double x : v) vv(i++) = x;
    i = 0;
    for (double x : z) zz(i++) = x;
    return GroupPoint(std::move(vv), std::move(zz));
}

}  // namespace hcarnot
