#pragma once

#include "hcarnot/algebra.hpp"
#include "hcarnot/kaplan.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hcarnot {

/// Sampled curve: strictly increasing parameters with one group point each.
struct Curve {
    std::vector<double> t;
    std::vector<GroupPoint> p;
    bool arclength = false;

    size_t size() const { return t.size(); }
    void push_back(double ti, GroupPoint pi);
    void validate() const;
};

/// Solve the frame system for the finite-difference derivative at sample i.
/// Returns the horizontal coefficients a (length n1) and the Euclidean norm
/// of the non-horizontal component of the derivative.
std::pair<Vec, double> horizontal_velocity(const HTypeAlgebra& alg, const Curve& curve, size_t i);

/// Largest non-horizontal residual along the curve's interior samples.
double horizontality_residual(const HTypeAlgebra& alg, const Curve& curve);

/// Carnot-Caratheodory length of a (claimed horizontal) sampled curve.
/// Throws if the horizontality residual exceeds `tol`.
double cc_length(const HTypeAlgebra& alg, const Curve& curve, double tol = 1e-3);

/// Line integral of a scalar density along the curve with respect to
/// horizontal arclength (trapezoidal on the samples).
double line_integral(const HTypeAlgebra& alg, const Curve& curve,
                     const std::function<double(const GroupPoint&)>& density);

struct SphereQuadrature;  // quadrature.hpp

using SphereSet = std::function<bool(const GroupPoint&)>;

/// sigma(E) = sum over nodes in E of upsilon^Q * weight.
double sigma_measure(const KaplanNorm& K, const SphereQuadrature& quad, const SphereSet& E);

/// Exact Q-modulus of the family of radial flow curves over E between the
/// spheres of radii a and b: sigma(E) (ln b/a)^{1-Q}.
double radial_family_modulus(const KaplanNorm& K, const SphereQuadrature& quad,
                             const SphereSet& E, double a, double b);

/// The extremal ring density rho(x) = upsilon(x) / (|w^{-1}x| ln(t/s)) on the
/// translated ring s < |w^{-1}x| < t, zero elsewhere.
class RingDensity {
  public:
    RingDensity(const KaplanNorm& K, GroupPoint center, double s, double t);

    double operator()(const GroupPoint& x) const;
    double inner() const { return s_; }
    double outer() const { return t_; }
    const GroupPoint& center() const { return center_; }
    const KaplanNorm& norm() const { return *K_; }

  private:
    const KaplanNorm* K_;
    GroupPoint center_;
    double s_, t_;
};

RingDensity ring_density(const KaplanNorm& K, const GroupPoint& center, double s, double t);

/// Monte Carlo p-energy of a density over the ring's bounding ball in the
/// normalized Haar measure; an upper bound for the modulus of any family the
/// density is admissible for.
double modulus_upper_bound(const KaplanNorm& K, const RingDensity& density, double p,
                           int samples, uint64_t seed);

/// Minimum line integral of the density over the sampled family, with the
/// index of the worst curve.
std::pair<double, size_t> admissibility_check(const HTypeAlgebra& alg,
                                              const std::function<double(const GroupPoint&)>& density,
                                              const std::vector<Curve>& family);

// Curve CSV persistence: header "t,v...,z...". One curve per file.
void save_curve_csv(const Curve& curve, const std::string& path);
Curve load_curve_csv(const HTypeAlgebra& alg, const std::string& path);

}  // namespace hcarnot
