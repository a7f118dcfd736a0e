#pragma once

#include <cstdint>
#include <vector>

#include "coilsim/rod.hpp"
#include "coilsim/types.hpp"

namespace coilsim {

// Stock-wire and imprint geometry of a coil. D1 is the stock wire diameter,
// D2 the diameter of the wound rod, D3 the imprinted secondary diameter.
struct CoilSpec {
  double D1 = 50e-6;          // [m]
  double D2 = 305e-6;         // [m]
  double D3 = 2e-3;           // [m]
  double pitch_factor = 1.1;  // p > 1, winding pitch p_c = D1 * p
  double length = 0.0;        // total centerline length [m]
  double E_w = 230e9;         // Young's modulus [Pa]
  double mu_w = 0.4;          // Poisson ratio
  double rho = 21e3;          // density [kg/m^3]

  double pitch() const { return D1 * pitch_factor; }
  void validate() const;
};

// Bending/twisting stiffness of the wound structure treated as a torsion
// spring: b = E D1^4 p_c / (32 (2+mu) D2), beta = E D1^4 p_c / (64 D2).
// The stretch penalty is a configuration constant, not a material property.
Stiffness spring_constants(const CoilSpec& spec, double stretch_alpha = 0.1);

// Lumped node mass conserving total wire mass: the stock-wire length wound
// into one centerline increment ell is ell * pi D2 / p_c.
double node_mass(const CoilSpec& spec, double edge_length);

// Collinear points spaced ell along +x; node count round(L/ell) + 1.
std::vector<Vec3> make_straight(double length, double edge_length);

// Helix of diameter D3 advancing helix_pitch per turn, sampled at uniform
// arclength. helix_pitch = 0 degenerates to a planar circle.
std::vector<Vec3> make_helix(double D3, double helix_pitch, double length, double edge_length);

// Ball-shaped natural imprint: a sequence of mutually rotated circular loops
// with radius in [0.4, 0.5] * D3, steered to stay inside a sphere of
// diameter ~D3 around its centroid. Deterministic for a fixed seed.
std::vector<Vec3> make_3d_frame_shape(double D3, double length, double edge_length, uint64_t seed);

// Discrete curvature of a regular sampling: 2 tan(theta/2) for per-edge
// turning angle theta (used by generator tests).
double polygon_curvature(double turning_angle);

}  // namespace coilsim
