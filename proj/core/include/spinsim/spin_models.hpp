#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace spinsim {

// Dense complex matrix for spin Hamiltonians (dimension 2..4).
using HermitianMatrix =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using RealVector4 = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using RealMatrix4 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

// Zero-field splitting parameters. D is a signed energy scale: every
// Hamiltonian below is expressed in the same units as D, and reduced fields
// are measured against D (Zeeman energy = b * D).
struct ZeroFieldSplitting {
  double d = 1.0;
  double e = 0.0;

  static ZeroFieldSplitting from_ratio(double e_over_d, double d = 1.0) {
    return {d, e_over_d * d};
  }
  double e_over_d() const { return e / d; }
};

// Magnetic field in the defect frame, in reduced units g mu_B B / D.
// `b` is the in-plane magnitude at angle `phi` from the x axis; `bz` is the
// out-of-plane component.
class FieldVector {
 public:
  FieldVector() = default;

  static FieldVector in_plane(double b, double phi);
  static FieldVector along_z(double bz);
  static FieldVector general(double b, double phi, double bz);
  static FieldVector cartesian(double bx, double by, double bz);

  // Field from physical units. `d_mhz` is the ZFS scale D/h in MHz.
  static FieldVector from_gauss(double b_inplane_gauss, double phi, double bz_gauss,
                                double d_mhz, double g = 2.0);

  double b() const { return b_; }
  double phi() const { return phi_; }
  double bz() const { return bz_; }
  double bx() const;
  double by() const;
  double magnitude() const;

  double in_plane_gauss(double d_mhz, double g = 2.0) const;
  double bz_gauss(double d_mhz, double g = 2.0) const;

 private:
  FieldVector(double b, double phi, double bz);

  double b_ = 0.0;
  double phi_ = 0.0;
  double bz_ = 0.0;
};

// Eigen-decomposition of a spin Hamiltonian together with the populations of
// each eigenvector on the zero-field basis the Hamiltonian was written in:
// projections(mu, i) = |<basis_mu|eigenvector_i>|^2.
struct SpinEigensystem {
  RealVector4 eigenvalues;
  HermitianMatrix eigenvectors;
  RealMatrix4 projections;

  std::size_t dimension() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

// Triplet (S=1) in the ordered basis {|s_x>, |s_y>, |s_z>}.
HermitianMatrix triplet_hamiltonian(const ZeroFieldSplitting& zfs, const FieldVector& field);

// Quartet (S=3/2) in the S_x basis m_s = {3/2, 1/2, -1/2, -3/2}.
HermitianMatrix quartet_hamiltonian(const ZeroFieldSplitting& zfs, const FieldVector& field);

// Doublet (S=1/2), pure Zeeman, S_x basis {+1/2, -1/2}; energies in the
// reduced field units.
HermitianMatrix doublet_hamiltonian(const FieldVector& field);

// Hermitian eigensolver (cyclic Jacobi). Eigenvalues ascend; degenerate
// subspaces are canonicalized against the basis order and every eigenvector
// has its largest component real and positive.
SpinEigensystem eigensystem(const HermitianMatrix& h);

inline SpinEigensystem triplet_eigensystem(const ZeroFieldSplitting& zfs, const FieldVector& field) {
  return eigensystem(triplet_hamiltonian(zfs, field));
}

// Spin operators (S_x, S_y, S_z) for spin `twice_spin`/2 written in the S_x
// eigenbasis ordered m = S, S-1, ..., -S.
struct SpinOperators {
  HermitianMatrix sx;
  HermitianMatrix sy;
  HermitianMatrix sz;
};
SpinOperators spin_operators(int twice_spin);

}  // namespace spinsim
