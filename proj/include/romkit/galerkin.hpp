#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "romkit/core/boundary.hpp"
#include "romkit/core/field.hpp"
#include "romkit/lifting.hpp"
#include "romkit/pod.hpp"

namespace romkit {

/// Everything the projection needs. Mode columns carry homogeneous boundary
/// data (`u_bc`, `p_bc`, `theta_bc` with zero Dirichlet values); lifts carry
/// their own unit data.
struct BasisSet {
  MeshPtr mesh;
  Eigen::MatrixXd velocity;  // POD modes followed by supremizers
  int n_supremizers = 0;
  Eigen::MatrixXd pressure;
  Eigen::MatrixXd temperature;
  Eigen::MatrixXd eddy;
  std::vector<LiftingFunction> velocity_lifts;
  std::vector<LiftingFunction> temperature_lifts;
  BoundaryConditions u_bc;
  BoundaryConditions p_bc;
  BoundaryConditions theta_bc;

  int n_u() const { return static_cast<int>(velocity.cols()); }
  int n_p() const { return static_cast<int>(pressure.cols()); }
  int n_t() const { return static_cast<int>(temperature.cols()); }
  int n_nu() const { return static_cast<int>(eddy.cols()); }
};

/// Reduced operators. "Augmented" indices run over the lifts first and then
/// the modes, so a coefficient vector [lift values, a] describes the full
/// field. Test indices (k) run over modes only.
///
///   M(k, j)      = <phi_j, phi_k>
///   B(k, j)      = <lap(phi^_j), phi_k>
///   BT(k, j)     = <div((grad phi^_j)^T), phi_k>
///   Q[k](i, j)   = <div(phi^_i (x) phi^_j), phi_k>
///   QT1[i](k, j) = <xi_i lap(phi^_j), phi_k>
///   QT2[i](k, j) = <div(xi_i (grad phi^_j)^T), phi_k>
///   P(k, i)      = <grad psi_i, phi_k>
///   R(i, j)      = <div(phi^_j), psi_i>
///   K(k, j)      = <chi_j, chi_k>
///   G[k](i, j)   = <div(phi^_i chi^_j), chi_k>
///   N(k, j)      = <lap(chi^_j), chi_k>
///   NT[i](k, j)  = <xi_i lap(chi^_j), chi_k>
///   XiMean(i, 0) = domain average of xi_i
struct ReducedOperators {
  int n_lift_u = 0;
  int n_u = 0;
  int n_sup = 0;
  int n_p = 0;
  int n_lift_t = 0;
  int n_t = 0;
  int n_nu = 0;

  Eigen::MatrixXd M, B, BT, P, R, K, N, XiMean;
  std::vector<Eigen::MatrixXd> Q, QT1, QT2, G, NT;

  int n_aug_u() const { return n_lift_u + n_u; }
  int n_aug_t() const { return n_lift_t + n_t; }
};

void assemble_velocity_operators(const BasisSet& bases, ReducedOperators& ops);
void assemble_thermal_operators(const BasisSet& bases, ReducedOperators& ops);
ReducedOperators assemble_operators(const BasisSet& bases);

/// Supremizer modes for a pressure basis: s_i solves (I - lap) s_i = -grad psi_i
/// with homogeneous velocity data, then is orthonormalized against
/// `velocity_modes` and the previous supremizers. Zero or dependent
/// supremizers are dropped. Throws EnrichmentError naming the mode when the
/// solve fails.
Eigen::MatrixXd supremizer_enrichment(const MeshPtr& mesh, const Eigen::MatrixXd& pressure_modes,
                                      const Eigen::MatrixXd& velocity_modes, const BoundaryConditions& u_bc,
                                      const BoundaryConditions& p_bc);

/// c_{ij} = <mode_i, snapshot_j>.
Eigen::MatrixXd project_snapshots(const Eigen::MatrixXd& snapshots, const Eigen::MatrixXd& modes,
                                  const Eigen::VectorXd& weights);

/// operators.rombin (dense float64 arrays) plus operators.txt (shapes).
void write_operators(const std::filesystem::path& dir, const ReducedOperators& ops);
ReducedOperators read_operators(const std::filesystem::path& dir);

}  // namespace romkit
