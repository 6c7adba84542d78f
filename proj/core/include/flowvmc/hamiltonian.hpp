#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Core>

#include "flowvmc/ad.hpp"
#include "flowvmc/rng.hpp"

namespace flowvmc {

/**
 * Quartic bosonic Hamiltonian in field-amplitude form. The potential is
 *
 *   V(x) = alpha * ½ xᵀ h_xx x + ⅛ (x∘x)ᵀ u (x∘x),
 *
 * the ⅛ collecting the 1/4! and the multiplicity of the rank-4 contraction
 * 3 δ_ij δ_kl u_ik. The kinetic part is the flat Laplacian (h_pp = 1,
 * h_xp = 0). alpha in [0,1] rescales only the quadratic term and drives the
 * adiabatic retraining schedule.
 */
struct QuarticHamiltonian {
  int dim = 0;
  Eigen::MatrixXd h_xx;
  Eigen::MatrixXd u;
  double alpha = 1.0;
  std::uint64_t seed = 0;  // generation seed for random instances, else 0
};

/// Validates shapes, symmetry of both matrices, positive semidefiniteness
/// of u, and alpha in [0,1].
QuarticHamiltonian make_quartic(int dim, const Eigen::MatrixXd& h_xx,
                                const Eigen::MatrixXd& u, double alpha = 1.0);

/// V(x) = ½|x|²: h_xx = +identity, no quartic term.
QuarticHamiltonian oscillator_hamiltonian(int dim);

/**
 * Random instance: u = U Σ Uᵀ and h_xx = −U′ Σ′ U′ᵀ with independent Haar
 * bases and eigenvalues drawn uniformly from [0.1, 2], so u is SPD and h_xx
 * negative definite.
 */
QuarticHamiltonian random_hamiltonian(int dim, RngStream& rng);

/// Same draw from a fresh stream; the seed is recorded on the instance.
QuarticHamiltonian random_hamiltonian(int dim, std::uint64_t seed);

/// Copy with the quadratic term rescaled; the quartic term is untouched.
QuarticHamiltonian set_adiabatic_alpha(const QuarticHamiltonian& h,
                                       double alpha);

double potential(const QuarticHamiltonian& h, const Eigen::VectorXd& x);

ad::Var potential_taped(const QuarticHamiltonian& h, ad::Tape& tape,
                        std::span<const ad::Var> x);

void save_hamiltonian(const QuarticHamiltonian& h, const std::string& path);
QuarticHamiltonian load_hamiltonian(const std::string& path);

/// 1-D quadratic Hamiltonian ½(h_xx x² + h_xp(xp+px) + h_pp p²) with a
/// Gaussian ground state exp(−(a+ib)x²/2).
struct Quadratic1D {
  double h_xx = 1.0;
  double h_xp = 0.0;
  double h_pp = 1.0;
};

struct GroundParams {
  double a = 1.0;
  double b = 0.0;
};

/// Closed-form ground-state parameters; requires h_pp > 0 and a positive
/// discriminant h_xx h_pp − h_xp².
GroundParams quadratic1d_ground(const Quadratic1D& q);

}  // namespace flowvmc
