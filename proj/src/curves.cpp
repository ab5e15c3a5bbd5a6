#include "hcarnot/curves.hpp"

#include "hcarnot/quadrature.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hcarnot {

void Curve::push_back(double ti, GroupPoint pi) {
    if (!t.empty() && !(ti > t.back()))
        throw std::invalid_argument("Curve: parameters must be strictly increasing");
    t.push_back(ti);
    p.push_back(std::move(pi));
}

void Curve::validate() const {
    if (t.size() != p.size()) throw std::invalid_argument("Curve: size mismatch");
    if (t.size() < 2) throw std::invalid_argument("Curve: need at least two samples");
    for (size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1]))
            throw std::invalid_argument("Curve: parameters must be strictly increasing");
}

namespace {

/// Finite-difference coordinate derivative at sample i (central inside,
/// one-sided at the ends).
Vec coordinate_derivative(const Curve& c, size_t i) {
    size_t lo = (i == 0) ? 0 : i - 1;
    size_t hi = (i + 1 == c.size()) ? i : i + 1;
    double dt = c.t[hi] - c.t[lo];
    Vec d(c.p[i].v.size() + c.p[i].z.size());
    d << (c.p[hi].v - c.p[lo].v) / dt, (c.p[hi].z - c.p[lo].z) / dt;
    return d;
}

}  // namespace

std::pair<Vec, double> horizontal_velocity(const HTypeAlgebra& alg, const Curve& curve, size_t i) {
    curve.validate();
    if (i >= curve.size()) throw std::out_of_range("horizontal_velocity: sample index");
    const int n1 = alg.n1();
    Vec d = coordinate_derivative(curve, i);
    // The frame system a^T X(p) = d has a unique v-block solution a = d_v;
    // what remains in the z-block is the non-horizontal part.
    Vec a = d.head(n1);
    Vec mismatch = d.tail(alg.n2()) - 0.5 * alg.bracket(curve.p[i].v, a);
    return {a, mismatch.norm()};
}

double horizontality_residual(const HTypeAlgebra& alg, const Curve& curve) {
    curve.validate();
    double worst = 0.0;
    for (size_t i = 1; i + 1 < curve.size(); ++i) {
        Vec d = coordinate_derivative(curve, i);
        auto [a, miss] = horizontal_velocity(alg, curve, i);
        worst = std::max(worst, miss / std::max(d.norm(), 1e-12));
    }
    return worst;
}

double cc_length(const HTypeAlgebra& alg, const Curve& curve, double tol) {
    double res = horizontality_residual(alg, curve);
    if (res > tol)
        throw std::invalid_argument("cc_length: curve is not horizontal (residual " +
                                    std::to_string(res) + ")");
    double len = 0.0;
    double prev_speed = horizontal_velocity(alg, curve, 0).first.norm();
    for (size_t i = 1; i < curve.size(); ++i) {
        double speed = horizontal_velocity(alg, curve, i).first.norm();
        len += 0.5 * (prev_speed + speed) * (curve.t[i] - curve.t[i - 1]);
        prev_speed = speed;
    }
    return len;
}

double line_integral(const HTypeAlgebra& alg, const Curve& curve,
                     const std::function<double(const GroupPoint&)>& density) {
    curve.validate();
    auto weighted = [&](size_t i) {
        return density(curve.p[i]) * horizontal_velocity(alg, curve, i).first.norm();
    };
    double acc = 0.0;
    double prev = weighted(0);
    for (size_t i = 1; i < curve.size(); ++i) {
        double cur = weighted(i);
        acc += 0.5 * (prev + cur) * (curve.t[i] - curve.t[i - 1]);
        prev = cur;
    }
    return acc;
}

double sigma_measure(const KaplanNorm& K, const SphereQuadrature& quad, const SphereSet& E) {
    const double Q = K.algebra().homogeneous_dim();
    double s = 0.0;
    for (size_t i = 0; i < quad.nodes.size(); ++i)
        if (E(quad.nodes[i])) s += std::pow(quad.ups[i], Q) * quad.weights[i];
    return s;
}

double radial_family_modulus(const KaplanNorm& K, const SphereQuadrature& quad,
                             const SphereSet& E, double a, double b) {
    if (!(0.0 < a && a < b)) throw std::invalid_argument("radial_family_modulus: need 0 < a < b");
    const double Q = K.algebra().homogeneous_dim();
    return sigma_measure(K, quad, E) * std::pow(std::log(b / a), 1.0 - Q);
}

RingDensity::RingDensity(const KaplanNorm& K, GroupPoint center, double s, double t)
    : K_(&K), center_(std::move(center)), s_(s), t_(t) {
    K.algebra().check_point(center_);
    if (!(0.0 < s && s < t)) throw std::invalid_argument("ring_density: need 0 < s < t");
}

double RingDensity::operator()(const GroupPoint& x) const {
    const HTypeAlgebra& alg = K_->algebra();
    GroupPoint rel = multiply(alg, inverse(alg, center_), x);
    double n = K_->norm(rel);
    if (n <= s_ || n >= t_) return 0.0;
    return K_->upsilon(rel) / (n * std::log(t_ / s_));
}

RingDensity ring_density(const KaplanNorm& K, const GroupPoint& center, double s, double t) {
    return RingDensity(K, center, s, t);
}

double modulus_upper_bound(const KaplanNorm& K, const RingDensity& density, double p, int samples,
                           uint64_t seed) {
    if (!(p > 1.0)) throw std::invalid_argument("modulus_upper_bound: need p > 1");
    const HTypeAlgebra& alg = K.algebra();
    const GroupPoint& w = density.center();
    auto integrand = [&](const GroupPoint& x) {
        return std::pow(density(left_translate(alg, w, x)), p);
    };
    return cartesian_integrate(K, integrand, density.outer(), samples, seed);
}

std::pair<double, size_t> admissibility_check(
    const HTypeAlgebra& alg, const std::function<double(const GroupPoint&)>& density,
    const std::vector<Curve>& family) {
    if (family.empty()) throw std::invalid_argument("admissibility_check: empty family");
    double worst = std::numeric_limits<double>::infinity();
    size_t worst_i = 0;
    for (size_t i = 0; i < family.size(); ++i) {
        double li = line_integral(alg, family[i], density);
        if (li < worst) {
            worst = li;
            worst_i = i;
        }
    }
    return {worst, worst_i};
}

void save_curve_csv(const Curve& curve, const std::string& path) {
    curve.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_curve_csv: cannot open " + path);
    const int n1 = static_cast<int>(curve.p[0].v.size());
    const int n2 = static_cast<int>(curve.p[0].z.size());
    out << "t";
    for (int i = 0; i < n1; ++i) out << ",v" << i;
    for (int m = 0; m < n2; ++m) out << ",z" << m;
    out << "\n";
    out.precision(17);
    for (size_t k = 0; k < curve.size(); ++k) {
        out << curve.t[k];
        for (int i = 0; i < n1; ++i) out << "," << curve.p[k].v(i);
        for (int m = 0; m < n2; ++m) out << "," << curve.p[k].z(m);
        out << "\n";
    }
}

Curve load_curve_csv(const HTypeAlgebra& alg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_curve_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_curve_csv: empty file " + path);
    const int n1 = alg.n1(), n2 = alg.n2();
    Curve c;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != 1 + n1 + n2)
            throw std::runtime_error("load_curve_csv: wrong column count in " + path);
        GroupPoint p{Vec(n1), Vec(n2)};
        for (int i = 0; i < n1; ++i) p.v(i) = row[1 + i];
        for (int m = 0; m < n2; ++m) p.z(m) = row[1 + n1 + m];
        c.push_back(row[0], std::move(p));
    }
    c.validate();
    return c;
}

}  // namespace hcarnot
