#pragma once

#include "hcarnot/algebra.hpp"
#include "hcarnot/curves.hpp"
#include "hcarnot/kaplan.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hcarnot {

/// Quadrature for the surface measure sigma* on the unit gauge sphere.
/// Nodes carry equal weights; upsilon is cached per node.  The density of
/// sigma* is normalized so that the polar decomposition
///   integral_G u dx = integral_S integral_0^inf u(phi_s(y)) s^{Q-1} ds dsigma*(y)
/// holds for the Haar measure with total gauge-ball mass r^Q.
struct SphereQuadrature {
    std::vector<GroupPoint> nodes;
    std::vector<double> weights;
    std::vector<double> ups;  // upsilon at each node
    uint64_t seed = 0;
    std::string group;

    size_t size() const { return nodes.size(); }
    double weight_sum() const;
    /// Total sigma*-mass: sum upsilon^Q * w.  Equals Q by construction.
    double sigma_total(double Q) const;
    uint64_t checksum() const;
};

/// Rejection-sample the shell a < N < b uniformly in Haar measure and push
/// nodes to the unit sphere with the gauge dilation.  Characteristic points
/// (upsilon below 1e-8) are rejected.  Weights are equal and scaled so the
/// polar formula reproduces ball volumes exactly in expectation.
SphereQuadrature build_sphere_quadrature(const KaplanNorm& K, int node_count, uint64_t seed,
                                         double shell_a = 0.7, double shell_b = 1.3);

/// kappa(G,p) = integral_S upsilon^p dsigma* = sum upsilon^p * w.
double kappa(const KaplanNorm& K, const SphereQuadrature& quad, double p);

void save_quadrature(const SphereQuadrature& quad, const std::string& path);
SphereQuadrature load_quadrature(const HTypeAlgebra& alg, const std::string& path);

/// One point of the unit-speed-in-radius flow: N(flow_point(y,s)) = s.
/// Uses the closed form on Heisenberg groups when the norm is exactly
/// calibrated there, otherwise RK4 on the gradient-flow ODE.
GroupPoint flow_point(const KaplanNorm& K, const GroupPoint& y, double s, double step = 1e-3);

/// Flow evaluated along an increasing radius grid (sequential integration).
std::vector<GroupPoint> flow_points(const KaplanNorm& K, const GroupPoint& y,
                                    const std::vector<double>& radii, double step = 1e-3);

/// Radial flow curve from radius s0 to s1, sampled every `step` in s.
/// Throws std::invalid_argument on characteristic starting points.
Curve radial_flow(const KaplanNorm& K, const GroupPoint& y, double s0, double s1,
                  double step = 1e-3);

/// Polar-coordinates integral of u over the gauge ball of radius r_max,
/// composite Simpson in the radius with `radial_steps` intervals per node.
double polar_integrate(const KaplanNorm& K, const SphereQuadrature& quad,
                       const std::function<double(const GroupPoint&)>& u, double r_max,
                       int radial_steps = 256);

/// Monte Carlo integral of u over the gauge ball of radius r_max in the
/// normalized Haar measure (ball mass r^Q).  Throws on non-finite samples or
/// running-mean instability.
double cartesian_integrate(const KaplanNorm& K, const std::function<double(const GroupPoint&)>& u,
                           double r_max, int samples, uint64_t seed);

}  // namespace hcarnot
