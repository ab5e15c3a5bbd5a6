#pragma once

#include "hcarnot/algebra.hpp"
#include "hcarnot/kaplan.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hcarnot {

/// Gauge ball / complement region for condenser plates.
struct Region {
    enum Kind { Ball, ClosedBall, ComplementOfBall, Custom };
    Kind kind = ClosedBall;
    GroupPoint center;
    double radius = 1.0;
    /// Membership test for Kind::Custom plates (e.g. tubes around segments).
    std::function<bool(const KaplanNorm&, const GroupPoint&)> custom;

    bool contains(const KaplanNorm& K, const GroupPoint& p) const;
};

/// Condenser (F0, F1; Omega) with Omega the box enclosing the gauge ball of
/// radius omega_radius around F0's center.
struct Condenser {
    Region f0;  // potential 1
    Region f1;  // potential 0
    double omega_radius = 0.0;

    /// Concentric spherical ring: F0 the closed inner ball, F1 the
    /// complement of the outer ball.
    static Condenser ring(const GroupPoint& center, double r, double R);

    bool is_ring() const;
};

/// Regular lattice over the box with per-node values and plate masks.
struct GridField {
    enum Mask : uint8_t { Free = 0, Fixed0 = 1, Fixed1 = 2 };
    int nx = 0, ny = 0, nz = 0;          // nodes per axis (horizontal..., center)
    double hx = 0, hy = 0, hz = 0;       // spacing per axis
    Vec lo;                               // box corner in centered coordinates
    std::vector<double> value;
    std::vector<uint8_t> mask;

    size_t index(int i, int j, int k) const {
        return (static_cast<size_t>(i) * ny + j) * nz + k;
    }
    GroupPoint node_point(int i, int j, int k) const;  // centered coordinates
};

struct CapacityResult {
    double value = 0.0;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    GridField field;
};

/// Exact spherical-ring p-capacity (normalized Haar measure):
///   p != Q: kappa_p (|p-Q|/(p-1))^{p-1} |R^{(p-Q)/(p-1)} - r^{(p-Q)/(p-1)}|^{1-p}
///   p == Q: kappa_Q (ln R/r)^{1-Q}
/// kappa_p must be supplied (from the sphere quadrature).
double ring_capacity(const KaplanNorm& K, double p, double r, double R, double kappa_p);

/// Discrete minimum of the horizontal p-energy sum_nodes |grad0 v|^p h-vol
/// over grid functions fixed to 1 on F0 and 0 on F1, frame-weighted central
/// differences.  Only 3-coordinate groups (H1-like) are representable.
CapacityResult variational_capacity(const KaplanNorm& K, const Condenser& cond, double p,
                                    int grid_n, int max_iterations = 2000, double tol = 1e-5);

struct CapacityModulusReport {
    double modulus = 0.0;       // radial-family modulus over the whole sphere
    double exact = 0.0;         // closed-form ring capacity
    double variational = 0.0;   // grid minimum
    double gap_modulus_exact = 0.0;
    double gap_variational_exact = 0.0;
    double gap_variational_modulus = 0.0;
    bool infinite = false;      // degenerate ring: everything diverges
    int grid_n = 0;
};

struct SphereQuadrature;  // quadrature.hpp

CapacityModulusReport capacity_modulus_equality_check(const KaplanNorm& K,
                                                      const SphereQuadrature& quad,
                                                      const Condenser& cond, double p,
                                                      int grid_n = 48);

/// Grid Q-capacity of the condenser whose plates are thin tubes around the
/// opposite radial segments {(x, 0, 0) : r <= |x| <= R}.  Both plates are
/// continua joining the spheres of radius ~r and ~R, so
/// cap >= c (ln R/r)^{1-Q} with the Loewner-type constant c; the grid
/// energy over-estimates the continuum capacity (the grounded box boundary
/// only adds energy), so cap * (ln R/r)^{Q-1} over-estimates c.
double loewner_segment_capacity(const KaplanNorm& K, double r, double R, int grid_n = 49,
                                int max_iterations = 4000);

/// Conservative default for the Loewner-type constant at Q = 4: half the
/// smaller of the segment-condenser estimates at ln(R/r) = 1 and 2 on a
/// 49^3 grid, frozen so downstream reports do not depend on solver time.
double default_loewner_constant();

}  // namespace hcarnot
