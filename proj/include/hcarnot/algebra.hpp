#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hcarnot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point of a step-2 Carnot group in exponential (normal) coordinates,
/// split into the horizontal layer v and the center layer z.
struct GroupPoint {
    Vec v;
    Vec z;

    GroupPoint() = default;
    GroupPoint(Vec v_, Vec z_) : v(std::move(v_)), z(std::move(z_)) {}

    bool is_finite() const;
};

/// Step-2 stratified Lie algebra given by its bracket tensor
/// B[i][j][m] = m-th center component of [X_i, X_j].
///
/// Construction validates antisymmetry and the H-type condition: the map
/// J_Z defined by <J_Z u, w> = <Z, [u,w]> must square to -s <Z,Z> Id for a
/// single positive scale s (s = 16 for the Heisenberg +-2 convention).
class HTypeAlgebra {
  public:
    HTypeAlgebra(int n1, int n2, std::vector<double> bracket,
                 std::string name = "custom", double tol = 1e-9);

    static HTypeAlgebra heisenberg(int n);         // "H1" for n=1, "H2" for n=2
    static HTypeAlgebra by_name(const std::string& name);

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int homogeneous_dim() const { return n1_ + 2 * n2_; }   // Q
    int topological_dim() const { return n1_ + n2_; }       // N_top

    double bracket_entry(int i, int j, int m) const {
        return bracket_[(static_cast<size_t>(i) * n1_ + j) * n2_ + m];
    }

    /// [u, w] as a center vector (length n2).
    Vec bracket(const Vec& u, const Vec& w) const;

    /// J_Z acting on V_1 with the flat center pairing (no metric rescale).
    Mat j_map(const Vec& z) const;

    /// Scale s with J_Z^2 = -s |Z|^2 Id; the H-type center metric is Id/s.
    double j_scale() const { return j_scale_; }

    const std::string& name() const { return name_; }
    bool is_heisenberg() const { return heisenberg_; }

    GroupPoint origin() const;
    void check_point(const GroupPoint& p) const;

  private:
    int n1_, n2_;
    std::vector<double> bracket_;
    std::string name_;
    double j_scale_ = 0.0;
    bool heisenberg_ = false;

    void validate(double tol);
};

// Group operations. All pure; identity is the zero point.

/// BCH product for step 2: (v+v', z+z'+[v,v']/2).
GroupPoint multiply(const HTypeAlgebra& alg, const GroupPoint& p, const GroupPoint& q);
GroupPoint inverse(const HTypeAlgebra& alg, const GroupPoint& p);
GroupPoint dilate(const HTypeAlgebra& alg, double lambda, const GroupPoint& p);
GroupPoint left_translate(const HTypeAlgebra& alg, const GroupPoint& w, const GroupPoint& p);

/// Left-invariant horizontal frame at p: row j holds the coordinates of
/// X_j(p) = d/dv_j + (1/2) sum_m [v, e_j]_m d/dz_m, an n1 x N_top matrix.
Mat horizontal_frame(const HTypeAlgebra& alg, const GroupPoint& p);

GroupPoint point(std::initializer_list<double> v, std::initializer_list<double> z);

}  // namespace hcarnot
