#pragma once

#include "hcarnot/algebra.hpp"

#include <cstdint>

namespace hcarnot {

/// Folland/Kaplan homogeneous norm N(p) = (|v|^4 + c |z|^2)^{1/4} with the
/// center coefficient c calibrated so that N^{2-Q} is annihilated by the
/// sub-Laplacian away from the origin, plus the normalization constant m0
/// (raw coordinate volume of the unit ball, so normalized Haar measure of
/// B(0,1) is one).
class KaplanNorm {
  public:
    explicit KaplanNorm(const HTypeAlgebra& alg, double c = 1.0);

    const HTypeAlgebra& algebra() const { return alg_; }
    double c() const { return c_; }
    double m0() const { return m0_; }
    bool calibrated() const { return calibrated_; }

    double norm(const GroupPoint& p) const;

    /// Horizontal gradient of the norm at p (analytic), length n1. p != 0.
    Vec horizontal_gradient_norm(const GroupPoint& p) const;

    /// upsilon(p) = |grad_0 N(p)|_0; dilation-invariant, constant along the
    /// radial flow, equal to the paper's surface density exponent on S(0,1).
    double upsilon(const GroupPoint& p) const;

    bool is_characteristic(const GroupPoint& p, double tol = 1e-8) const;

    double distance(const GroupPoint& p, const GroupPoint& q) const;

    /// Max sampled ratio d(x,y)/(d(x,z)+d(z,y)); the Kaplan gauge is an
    /// honest metric, so the estimate stays at or below 1.
    double triangle_constant(int sample_count, uint64_t seed = 1) const;

    /// Normalized Haar measure of B(0,r): r^Q by construction.
    double ball_volume(double r) const;
    /// Monte Carlo raw Lebesgue volume of B(0,r); calibration companion.
    double raw_ball_volume(double r, int samples, uint64_t seed) const;

    /// Half-width of the coordinate box enclosing B(0,r), per axis group.
    double box_halfwidth_v(double r) const { return r; }
    double box_halfwidth_z(double r) const;

    /// Discrete sub-Laplacian residual of N^{2-Q} at trial center
    /// coefficient c_try, sampled off the origin.
    double sublaplacian_residual(double c_try, int sample_count = 64,
                                 double fd_step = 1e-4) const;

    /// Calibrate c by minimizing the residual; stores the result.
    /// Throws if the residual cannot be reduced below `residual_tol`.
    double calibrate(double residual_tol = 1e-2);

    /// Recompute m0 by Monte Carlo with the current c.
    double calibrate_m0(int samples = 2000000, uint64_t seed = 99);

    /// Exact Lebesgue volume of {|v|^4 + c |z|^2 < 1} via Beta functions
    /// (pi^2/2 on H1 at c = 1).
    double analytic_m0() const;

    void set_c(double c);
    void set_m0(double m0) { m0_ = m0; }

  private:
    HTypeAlgebra alg_;  // owned copy: norms outlive the algebra they came from
    double c_;
    double m0_ = 1.0;
    bool calibrated_ = false;

    double norm4(const GroupPoint& p) const;
};

/// Convenience: built-in group by name with calibrated norm.
KaplanNorm calibrated_norm(const HTypeAlgebra& alg);

}  // namespace hcarnot
