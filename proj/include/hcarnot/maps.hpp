#pragma once

#include "hcarnot/algebra.hpp"
#include "hcarnot/curves.hpp"
#include "hcarnot/kaplan.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hcarnot {

/// Built-in quasiregular test maps with analytic differential and preimage
/// structure.  The winding map acts in cylindrical coordinates as
/// (rho, theta, t) -> (rho, k theta, k t); it is a contact map for the +-2
/// Heisenberg convention with branch locus the center axis.
struct QRMapDescriptor {
    enum Variant { Identity, Dilation, Translation, Winding, Composition };
    Variant variant = Identity;
    double lambda = 1.0;                    // Dilation
    GroupPoint w;                           // Translation
    int k = 1;                              // Winding (H1 only)
    std::vector<QRMapDescriptor> parts;     // Composition, applied first-to-last

    static QRMapDescriptor identity();
    static QRMapDescriptor dilation(double lambda);
    static QRMapDescriptor translation(GroupPoint w);
    static QRMapDescriptor winding(int k);
    static QRMapDescriptor composition(std::vector<QRMapDescriptor> parts);

    /// Mini-language: "identity", "dilate:2.0", "translate:x,y,t",
    /// "winding:3", "compose:[part;part;...]".
    static QRMapDescriptor parse(const std::string& text, const HTypeAlgebra& alg);
    std::string describe() const;

    void validate(const HTypeAlgebra& alg) const;
    /// True when p lies on the analytic branch locus (winding: center axis).
    bool on_branch_locus(const HTypeAlgebra& alg, const GroupPoint& p, double tol = 1e-9) const;
    bool is_conformal() const;  // no winding part
    int total_winding() const;  // product of winding orders
};

GroupPoint apply(const HTypeAlgebra& alg, const QRMapDescriptor& f, const GroupPoint& p);

/// Analytic horizontal differential D_Hf (n1 x n1).  Throws on the branch
/// locus.
Mat horizontal_differential(const HTypeAlgebra& alg, const QRMapDescriptor& f,
                            const GroupPoint& p);

/// Group finite-difference differential: column j from the v-part of
/// f(p)^{-1} f(p exp(eps e_j)).
Mat fd_horizontal_differential(const HTypeAlgebra& alg, const QRMapDescriptor& f,
                               const GroupPoint& p, double eps = 1e-5);

/// Formal Jacobian det(D_Hf) det(Lambda), Lambda the induced center map
/// defined by Lambda [u,v] = [D_Hf u, D_Hf v].  Throws if no consistent
/// Lambda exists (map not contact at p).
double formal_jacobian(const HTypeAlgebra& alg, const QRMapDescriptor& f, const GroupPoint& p);

struct Distortion {
    double K = 1.0;        // max singular-value ratio
    double K_O = 1.0;      // sup |D_Hf|^Q / J
    double K_I = 1.0;      // sup J / l(D_Hf)^Q
    double lambda_f = 1.0; // sup 1 / l(D_Hf)
    int skipped = 0;       // branch-locus samples skipped
};

/// Sampled distortion over the gauge ball of the given radius.
Distortion distortion(const KaplanNorm& K, const QRMapDescriptor& f, double radius, int samples,
                      uint64_t seed);

/// Exact analytic preimages of y with local indices; only those inside
/// B(0,r) are returned (r = infinity allowed).
std::vector<std::pair<GroupPoint, int>> preimages(const KaplanNorm& K, const QRMapDescriptor& f,
                                                  const GroupPoint& y, double r);

/// n(r,y): sum of local indices over preimages in B(0,r).
int counting_n(const KaplanNorm& K, const QRMapDescriptor& f, double r, const GroupPoint& y);

struct LiftResult {
    Curve alpha;
    bool branch_encountered = false;
    bool complete = false;  // reached the end of beta
};

/// Predictor-corrector f-lifting of beta starting at x0 (f(x0) = beta(0)
/// within 1e-6).  Stops with a flag when the lifted point's horizontal
/// radius falls below 1e-6 (branch locus).
LiftResult lift_curve(const KaplanNorm& K, const QRMapDescriptor& f, const Curve& beta,
                      const GroupPoint& x0, double tol = 1e-8);

struct SphereQuadrature;  // quadrature.hpp

struct InequalityVerdict {
    bool holds = false;
    double lhs = 0.0;   // certified bound on the smaller side
    double rhs = 0.0;
    double margin = 0.0;  // (rhs - lhs)/rhs
};

/// Verdicts for the three module inequalities on the radial family over E
/// in the ring a < N < b.  For conformal built-ins both sides are exact;
/// for the winding map the image-family modulus is sandwiched by ring
/// densities (the winding map sends radial flow lines to radial flow lines
/// with a direction-dependent radius scale mu in [1, sqrt(k)], so b/a must
/// exceed sqrt(k)).
struct ModuleInequalityReport {
    double sigma_domain = 0.0;     // sigma(E)
    double sigma_image = 0.0;      // sigma(E-hat), image direction set
    double modulus_domain = 0.0;   // M_Q of the radial family over E
    double image_lower = 0.0, image_upper = 0.0;  // certified M_Q(f(Gamma)) bounds
    double K_O = 1.0, K_I = 1.0;
    int multiplicity = 1;          // N(f, ring) = sup multiplicity
    int liftings = 1;              // m: liftings per image curve
    InequalityVerdict outer;    // M(Gamma) <= K_O N(f,A) M(f(Gamma))
    InequalityVerdict inner;    // M(f(Gamma)) <= K_I M(Gamma)
    // For the lifting verdict the given family is the radial family over
    // E-hat in the image ring and Gamma* collects its m liftings:
    // M(Gamma*) <= (K_I/m) M(Gamma).
    InequalityVerdict lifting;
};

ModuleInequalityReport module_inequality_report(const KaplanNorm& K, const SphereQuadrature& quad,
                                                const QRMapDescriptor& f, const SphereSet& E,
                                                double a, double b);

}  // namespace hcarnot
