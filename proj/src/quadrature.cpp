#include "hcarnot/quadrature.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace hcarnot {

namespace {

uint64_t fnv1a_update(uint64_t h, const void* data, size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t fnv1a_double(uint64_t h, double x) {
    uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    return fnv1a_update(h, &bits, sizeof(bits));
}

}  // namespace

double SphereQuadrature::weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

double SphereQuadrature::sigma_total(double Q) const {
    double s = 0.0;
    for (size_t i = 0; i < nodes.size(); ++i) s += std::pow(ups[i], Q) * weights[i];
    return s;
}

uint64_t SphereQuadrature::checksum() const {
    uint64_t h = 1469598103934665603ULL;
    h = fnv1a_update(h, group.data(), group.size());
    h = fnv1a_update(h, &seed, sizeof(seed));
    for (size_t i = 0; i < nodes.size(); ++i) {
        for (int j = 0; j < nodes[i].v.size(); ++j) h = fnv1a_double(h, nodes[i].v(j));
        for (int m = 0; m < nodes[i].z.size(); ++m) h = fnv1a_double(h, nodes[i].z(m));
        h = fnv1a_double(h, weights[i]);
        h = fnv1a_double(h, ups[i]);
    }
    return h;
}

SphereQuadrature build_sphere_quadrature(const KaplanNorm& K, int node_count, uint64_t seed,
                                         double shell_a, double shell_b) {
    if (node_count <= 0) throw std::invalid_argument("build_sphere_quadrature: node_count <= 0");
    if (!(0.0 < shell_a && shell_a < shell_b))
        throw std::invalid_argument("build_sphere_quadrature: need 0 < shell_a < shell_b");
    const HTypeAlgebra& alg = K.algebra();
    const int n1 = alg.n1(), n2 = alg.n2();
    const int Q = alg.homogeneous_dim();

    // Shell-uniform Haar samples pushed to the unit sphere by the gauge
    // dilation are distributed as sigma*/Q, so equal weights Q/n make the
    // node set an unbiased sigma* quadrature with exact total mass Q.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double hv = K.box_halfwidth_v(shell_b), hz = K.box_halfwidth_z(shell_b);

    SphereQuadrature quad;
    quad.seed = seed;
    quad.group = alg.name();
    quad.nodes.reserve(node_count);
    GroupPoint p{Vec(n1), Vec(n2)};
    long attempts = 0;
    const long max_attempts = 10000L * node_count + 1000000L;
    while (static_cast<int>(quad.nodes.size()) < node_count) {
        if (++attempts > max_attempts)
            throw std::runtime_error("build_sphere_quadrature: rejection sampling stalled");
        for (int i = 0; i < n1; ++i) p.v(i) = uni(rng) * hv;
        for (int m = 0; m < n2; ++m) p.z(m) = uni(rng) * hz;
        double n = K.norm(p);
        if (n < shell_a || n > shell_b) continue;
        GroupPoint y = dilate(alg, 1.0 / n, p);
        if (K.is_characteristic(y)) continue;
        quad.nodes.push_back(y);
        quad.ups.push_back(K.upsilon(y));
    }
    quad.weights.assign(node_count, static_cast<double>(Q) / node_count);
    return quad;
}

double kappa(const KaplanNorm& K, const SphereQuadrature& quad, double p) {
    (void)K;
    double s = 0.0;
    for (size_t i = 0; i < quad.nodes.size(); ++i) s += std::pow(quad.ups[i], p) * quad.weights[i];
    return s;
}

void save_quadrature(const SphereQuadrature& quad, const std::string& path) {
    nlohmann::json j;
    j["schema"] = "1";
    j["group"] = quad.group;
    j["seed"] = quad.seed;
    j["count"] = quad.nodes.size();
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& y : quad.nodes) {
        nlohmann::json n;
        n["v"] = std::vector<double>(y.v.data(), y.v.data() + y.v.size());
        n["z"] = std::vector<double>(y.z.data(), y.z.data() + y.z.size());
        nodes.push_back(n);
    }
    j["nodes"] = std::move(nodes);
    j["weights"] = quad.weights;
    j["upsilon"] = quad.ups;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(quad.checksum()));
    j["checksum"] = buf;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_quadrature: cannot open " + path);
    out << j.dump(2) << "\n";
}

SphereQuadrature load_quadrature(const HTypeAlgebra& alg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_quadrature: cannot open " + path);
    nlohmann::json j;
    in >> j;
    SphereQuadrature quad;
    quad.group = j.at("group").get<std::string>();
    if (quad.group != alg.name())
        throw std::runtime_error("load_quadrature: file is for group " + quad.group);
    quad.seed = j.at("seed").get<uint64_t>();
    for (const auto& n : j.at("nodes")) {
        auto vv = n.at("v").get<std::vector<double>>();
        auto zz = n.at("z").get<std::vector<double>>();
        GroupPoint y(Eigen::Map<Vec>(vv.data(), vv.size()), Eigen::Map<Vec>(zz.data(), zz.size()));
        alg.check_point(y);
        quad.nodes.push_back(std::move(y));
    }
    quad.weights = j.at("weights").get<std::vector<double>>();
    quad.ups = j.at("upsilon").get<std::vector<double>>();
    if (quad.weights.size() != quad.nodes.size() || quad.ups.size() != quad.nodes.size())
        throw std::runtime_error("load_quadrature: inconsistent array lengths");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(quad.checksum()));
    if (j.at("checksum").get<std::string>() != buf)
        throw std::runtime_error("load_quadrature: checksum mismatch");
    return quad;
}

namespace {

bool heisenberg_closed_form(const KaplanNorm& K) {
    return K.algebra().is_heisenberg() && std::abs(K.c() - 1.0) < 1e-12;
}

/// Exact flow on Heisenberg groups (c = 1): with K1 = J_{e1}/4 (K1^2 = -Id),
///   v(s) = (s/s0) exp(beta K1) v0,  beta = (t0/|v0|^2) ln(s/s0),
///   z(s) = (s/s0)^2 z0.
GroupPoint heisenberg_flow(const KaplanNorm& K, const GroupPoint& y, double s) {
    const HTypeAlgebra& alg = K.algebra();
    double s0 = K.norm(y);
    double lam = s / s0;
    double v2 = y.v.squaredNorm();
    double beta = (y.z(0) / v2) * std::log(lam);
    Vec e1 = Vec::Zero(1);
    e1(0) = 1.0;
    Mat K1 = alg.j_map(e1) / 4.0;
    GroupPoint out;
    out.v = lam * (std::cos(beta) * y.v + std::sin(beta) * (K1 * y.v));
    out.z = lam * lam * y.z;
    return out;
}

/// Coordinate derivative of the radius-parametrized gradient flow at p:
/// a = grad0 N / |grad0 N|^2, dv/ds = a, dz/ds = [v, a]/2.
void flow_rhs(const KaplanNorm& K, const GroupPoint& p, Vec& dv, Vec& dz) {
    Vec g = K.horizontal_gradient_norm(p);
    double g2 = g.squaredNorm();
    if (g2 < 1e-20)
        throw std::runtime_error("radial flow: horizontal gradient vanished along the trajectory");
    dv = g / g2;
    dz = 0.5 * K.algebra().bracket(p.v, dv);
}

GroupPoint rk4_flow(const KaplanNorm& K, const GroupPoint& y, double s_target, double step) {
    double s = K.norm(y);
    GroupPoint p = y;
    Vec k1v, k1z, k2v, k2z, k3v, k3z, k4v, k4z;
    while (std::abs(s_target - s) > 1e-15 * std::max(1.0, std::abs(s_target))) {
        double h = std::clamp(s_target - s, -step, step);
        GroupPoint q;
        flow_rhs(K, p, k1v, k1z);
        q.v = p.v + 0.5 * h * k1v;
        q.z = p.z + 0.5 * h * k1z;
        flow_rhs(K, q, k2v, k2z);
        q.v = p.v + 0.5 * h * k2v;
        q.z = p.z + 0.5 * h * k2z;
        flow_rhs(K, q, k3v, k3z);
        q.v = p.v + h * k3v;
        q.z = p.z + h * k3z;
        flow_rhs(K, q, k4v, k4z);
        p.v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        p.z += (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        s += h;
    }
    return p;
}

void check_flow_start(const KaplanNorm& K, const GroupPoint& y, double s) {
    K.algebra().check_point(y);
    if (!(s > 0.0)) throw std::invalid_argument("radial flow: target radius must be positive");
    if (K.norm(y) == 0.0)
        throw std::invalid_argument("radial flow: cannot start at the origin");
    if (K.is_characteristic(y))
        throw std::invalid_argument("radial flow: starting point is characteristic");
}

}  // namespace

GroupPoint flow_point(const KaplanNorm& K, const GroupPoint& y, double s, double step) {
    check_flow_start(K, y, s);
    if (heisenberg_closed_form(K)) return heisenberg_flow(K, y, s);
    return rk4_flow(K, y, s, step);
}

std::vector<GroupPoint> flow_points(const KaplanNorm& K, const GroupPoint& y,
                                    const std::vector<double>& radii, double step) {
    std::vector<GroupPoint> out;
    out.reserve(radii.size());
    if (radii.empty()) return out;
    check_flow_start(K, y, radii.front());
    if (heisenberg_closed_form(K)) {
        for (double s : radii) out.push_back(heisenberg_flow(K, y, s));
        return out;
    }
    GroupPoint p = y;
    for (double s : radii) {
        p = rk4_flow(K, p, s, step);
        out.push_back(p);
    }
    return out;
}

Curve radial_flow(const KaplanNorm& K, const GroupPoint& y, double s0, double s1, double step) {
    if (!(s0 > 0.0 && s1 > 0.0)) throw std::invalid_argument("radial_flow: radii must be positive");
    if (!(step > 0.0)) throw std::invalid_argument("radial_flow: step must be positive");
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(s1 - s0) / step)));
    std::vector<double> radii(n + 1);
    for (int k = 0; k <= n; ++k) radii[k] = s0 + (s1 - s0) * k / n;
    auto pts = flow_points(K, y, radii, step);
    Curve c;
    c.t = std::move(radii);
    c.p = std::move(pts);
    return c;
}

double polar_integrate(const KaplanNorm& K, const SphereQuadrature& quad,
                       const std::function<double(const GroupPoint&)>& u, double r_max,
                       int radial_steps) {
    if (!(r_max > 0.0)) throw std::invalid_argument("polar_integrate: r_max must be positive");
    if (radial_steps < 2) throw std::invalid_argument("polar_integrate: radial_steps < 2");
    int m = radial_steps + (radial_steps % 2);  // Simpson needs an even count
    const double Qm1 = K.algebra().homogeneous_dim() - 1;
    std::vector<double> radii(m);  // s = 0 contributes nothing (Q >= 4)
    for (int k = 1; k <= m; ++k) radii[k - 1] = r_max * k / m;
    double h = r_max / m;
    double total = 0.0;
    for (size_t i = 0; i < quad.nodes.size(); ++i) {
        auto pts = flow_points(K, quad.nodes[i], radii);
        double acc = 0.0;
        for (int k = 1; k <= m; ++k) {
            double g = u(pts[k - 1]) * std::pow(radii[k - 1], Qm1);
            double coeff = (k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            acc += coeff * g;
        }
        total += quad.weights[i] * acc * h / 3.0;
    }
    return total;
}

double cartesian_integrate(const KaplanNorm& K, const std::function<double(const GroupPoint&)>& u,
                           double r_max, int samples, uint64_t seed) {
    if (!(r_max > 0.0)) throw std::invalid_argument("cartesian_integrate: r_max must be positive");
    if (samples <= 0) throw std::invalid_argument("cartesian_integrate: samples <= 0");
    const HTypeAlgebra& alg = K.algebra();
    const int n1 = alg.n1(), n2 = alg.n2();
    const double hv = K.box_halfwidth_v(r_max), hz = K.box_halfwidth_z(r_max);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    GroupPoint p{Vec(n1), Vec(n2)};
    double sum = 0.0, half_sum = 0.0;
    for (int k = 0; k < samples; ++k) {
        for (int i = 0; i < n1; ++i) p.v(i) = uni(rng) * hv;
        for (int m = 0; m < n2; ++m) p.z(m) = uni(rng) * hz;
        if (K.norm(p) < r_max) {
            double val = u(p);
            if (!std::isfinite(val))
                throw std::runtime_error("cartesian_integrate: non-finite integrand sample");
            sum += val;
        }
        if (2 * (k + 1) == samples) half_sum = sum;
    }
    double boxvol = std::pow(2.0 * hv, n1) * std::pow(2.0 * hz, n2);
    double mean = sum / samples, half_mean = 2.0 * half_sum / samples;
    if (samples >= 1000 &&
        std::abs(mean - half_mean) > 0.5 * (std::abs(mean) + std::abs(half_mean)) + 1e-12)
        throw std::runtime_error("cartesian_integrate: running mean unstable (divergent integrand?)");
    return boxvol * mean / K.m0();
}

}  // namespace hcarnot
