#pragma once

#include "hcarnot/algebra.hpp"
#include "hcarnot/kaplan.hpp"
#include "hcarnot/maps.hpp"
#include "hcarnot/quadrature.hpp"

#include <cstdint>
#include <vector>

namespace hcarnot {

/// A Monte Carlo / quadrature estimate together with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Sphere average of the counting function:
///   nu(r, S(w, s)) = (1/kappa) sum_i n(r, w . phi_s(y_i)) upsilon_i^Q w_i.
Estimate nu_average(const KaplanNorm& K, const SphereQuadrature& quad, const QRMapDescriptor& f,
                    double r, const GroupPoint& w, double s);

/// c0(Q) = (2Q/pi) int_0^inf |ln s|^{Q-1} s^{Q-1} / (1 + s^{2Q}) ds,
/// evaluated by 1-d quadrature after the substitution s = e^u.
double c0_constant(int Q);

/// The averaged counting integral
///   A(r) = (2Q / (pi kappa)) int_{B(0,r)} J(x,f) upsilon(f(x))^Q /
///          (1 + |f(x)|^{2Q}) dx
/// by Monte Carlo over the domain ball (normalized Haar measure).
Estimate a_of_r(const KaplanNorm& K, const SphereQuadrature& quad, const QRMapDescriptor& f,
                double r, int samples, uint64_t seed);

/// The same quantity computed on the target side,
///   (2Q / (pi kappa)) int n(r, y) upsilon(y)^Q / (1 + |y|^{2Q}) dy,
/// in polar coordinates with the preimage-based counting function.  The
/// radial integral is truncated at the exact support radius of n(r, .).
double a_of_r_counting(const KaplanNorm& K, const SphereQuadrature& quad,
                       const QRMapDescriptor& f, double r, int radial_steps = 128);

/// Radius S with n(r, y) = 0 whenever |y| > S, built recursively from the
/// map structure.
double image_support_radius(const KaplanNorm& K, const QRMapDescriptor& f, double r);

/// nu(rho, S(0,t)) >= nu(r, S(0,s)) - K_I |ln(t/s)|^{Q-1} (ln(rho/r))^{1-Q},
/// checked with a 3-standard-error quadrature noise allowance.
struct TransferCheck {
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double allowance = 0.0;
    double margin = 0.0;  // lhs - rhs
};
TransferCheck transfer_check(const KaplanNorm& K, const SphereQuadrature& quad,
                             const QRMapDescriptor& f, double r, double rho, double s, double t,
                             double K_I);

/// nu(r/theta, Y) - slack <= A(r) <= nu(theta r, Y) + slack with
/// slack = c1 K_I (|ln t|^{Q-1} + c0) / (ln theta)^{Q-1}, c1 = 2^{Q-2}.
struct SandwichReport {
    double a = 0.0;
    double nu_low = 0.0;   // nu(r/theta, Y)
    double nu_high = 0.0;  // nu(theta r, Y)
    double slack = 0.0;
    double c0 = 0.0;
    double allowance = 0.0;
    bool holds = false;
};
SandwichReport sandwich_check(const KaplanNorm& K, const SphereQuadrature& quad,
                              const QRMapDescriptor& f, double r, double theta,
                              const GroupPoint& w, double t, double K_I);

/// A monotone sampled function r -> A(r) with log-linear interpolation;
/// flat extrapolation on the right, zero on the left.
struct ASamples {
    std::vector<double> r;
    std::vector<double> a;

    void push_back(double ri, double ai);
    double operator()(double ri) const;
    double max_r() const { return r.empty() ? 0.0 : r.back(); }
};

/// Deterministic A-sample table on a geometric radius grid.
ASamples sample_a_of_r(const KaplanNorm& K, const SphereQuadrature& quad,
                       const QRMapDescriptor& f, double r_lo, double r_hi, int count,
                       int radial_steps = 128);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// One tier of the exceptional-set construction: radii where A jumps by a
/// factor m/(m-1) across a step of relative size 2/phi(r),
/// phi(r) = A(r)^{1/(Q-1)} / m^2.
struct ExceptionalTier {
    int m = 0;
    double r0 = 0.0;       // first radius with phi >= 1 (infinity if never)
    double d_m = 0.0;      // tier threshold: intervals below d_m are dropped
    std::vector<Interval> intervals;  // disjoint, sorted
    double log_measure = 0.0;         // sum ln(hi/lo), < 2^{-m} by choice of d_m
};

struct ExceptionalSet {
    std::vector<ExceptionalTier> tiers;
    double total_log_measure = 0.0;
    double eps0 = 0.0;
    double K_I = 1.0;
    int Q = 0;
    double c0 = 0.0;
    /// Fallback start radius when A is bounded and no tier activates: the
    /// first sampled radius where A is within eps0 of its supremum.
    double bounded_fallback_r0 = 0.0;

    bool contains(double radius) const;
    /// Least admissible tier index m for a sphere of radius t (m >= 4,
    /// (m/(m-1))^2 < 1 + eps0/2, c1 K_I (|ln t|^{Q-1} + c0) <= m 2^{1-Q}).
    int tier_index(double t) const;
    /// omega(|ln t|): the radius threshold beyond which the comparability
    /// inequalities are guaranteed off the exceptional set.
    double omega(double t) const;
    /// Smallest base radius s the comparability construction can emit: in
    /// the active regime the pushed-forward radius satisfies s' <= 3 s, so
    /// s >= omega/3; when A is bounded and the tier never activates, the
    /// guarantee only starts once A has saturated.
    double base_threshold(double t) const;
};

/// Build the tiered exceptional set from sampled A.  Throws if eps0 is not
/// in (0, 1/5) or A is not eventually positive.
ExceptionalSet exceptional_set(const ASamples& A, double eps0, int Q, double K_I = 1.0,
                               int max_tier = 24, int grid_per_decade = 400);

/// End-to-end verification of the comparability inequalities at sampled
/// radii off the exceptional set.
struct ComparabilityCheck {
    double sprime = 0.0;
    double s = 0.0;
    double ratio_a = 0.0;    // nu(s,Y)/A(s')
    double ratio_nu = 0.0;   // nu(s,Y)/nu(s',Y)
    bool ok_a = false;
    bool ok_nu = false;
};
std::vector<ComparabilityCheck> comparability_checks(const KaplanNorm& K,
                                                     const SphereQuadrature& quad,
                                                     const QRMapDescriptor& f,
                                                     const ExceptionalSet& E, const ASamples& A,
                                                     const GroupPoint& w, double t, int count,
                                                     uint64_t seed);

/// One covering ball of the Wiener-style decomposition.
struct CoverBall {
    GroupPoint center;
    double radius = 0.0;  // base radius r_i of U_i
    int ring = 0;         // 0 = outermost shell, L+1 = core ball
};

struct DecompositionReport {
    double s = 0.0, sprime = 0.0, d = 0.0;
    double varpi = 1.0;      // quasi-triangle constant
    double theta = 0.0;      // 2 exp((kappa K_O K_I / (c_Q ln(6/5)))^{1/(Q-1)})
    double varkappa = 0.0;   // 3 theta
    double denom = 0.0;      // radius denominator D: r_n = 2^{n-2} d / D
    int rings = 0;           // L + 1 shells plus the core ball
    std::vector<CoverBall> balls;
    double measured_C3 = 0.0;        // p / (s/d)^{Q-1}
    int max_U_multiplicity = 0;
    int max_Z_multiplicity = 0;
    double z_multiplicity_bound = 0.0;  // (2D/5)^Q M
    bool cover_ok = false;
    bool z_in_sprime = false;        // all Z_i inside closed B(0, s')
    int uncovered = 0;               // cover-test points missed (0 when ok)
};

/// Greedy r/2-separated net covering of B(0,s) by shells of dyadically
/// growing width, radii 2^{n-2} d / D.  The paper-faithful denominator
/// D = 100 varpi varkappa is computationally infeasible in homogeneous
/// dimension 4; D is therefore an explicit parameter.
DecompositionReport ball_decomposition(const KaplanNorm& K, double s, double sprime, double varpi,
                                       double M, double K_O, double K_I, double c_Q,
                                       double denom = 1.0, uint64_t seed = 1,
                                       int cover_samples = 10000);

struct DefectReport {
    std::vector<GroupPoint> targets;   // finite targets
    bool infinity_target = false;      // leading target at infinity
    std::vector<double> n_values;      // n(r, a_j), infinity target first if any
    std::vector<double> defects;       // (1 - n/nu(r,1))_+ clamped to [0,1]
    std::vector<double> delta;         // 1 - n(r,a_j)/nu(r, sigma_M)
    double nu_r1 = 0.0;
    double nu_sigma_M = 0.0;
    double sigma_M = 0.0;  // 4 max{1, |a_j|}
    double sigma_m = 0.0;  // (1/4) min pairwise distance
    double defect_sum = 0.0;
};

/// Defect terms of the target list at probe radius r.  Throws on duplicate
/// targets.
DefectReport defect_report(const KaplanNorm& K, const SphereQuadrature& quad,
                           const QRMapDescriptor& f, double r,
                           const std::vector<GroupPoint>& targets, bool infinity_target = false);

}  // namespace hcarnot
