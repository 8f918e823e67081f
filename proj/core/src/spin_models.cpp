#include "spinsim/spin_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {
namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string("non-finite ") + what);
}

void require_zfs(const ZeroFieldSplitting& zfs) {
  require_finite(zfs.d, "zero-field splitting D");
  require_finite(zfs.e, "zero-field splitting E");
  if (zfs.d == 0.0) throw ValidationError("zero-field splitting D must be nonzero");
}

// One Jacobi rotation zeroing a(p,q) of a Hermitian matrix, applied in place
// to `a` and accumulated into `v`.
void jacobi_rotate(HermitianMatrix& a, HermitianMatrix& v, Eigen::Index p, Eigen::Index q) {
  const cd apq = a(p, q);
  const double r = std::abs(apq);
  if (r == 0.0) return;
  const cd phase = apq / r;
  const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  // J = [[c, s*phase], [-s*conj(phase), c]] on the (p, q) plane.
  const cd jpq = s * phase;
  const cd jqp = -s * std::conj(phase);
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {  // a <- a * J
    const cd akp = a(k, p);
    const cd akq = a(k, q);
    a(k, p) = akp * c + akq * jqp;
    a(k, q) = akp * jpq + akq * c;
  }
  for (Eigen::Index k = 0; k < n; ++k) {  // a <- J^H * a
    const cd apk = a(p, k);
    const cd aqk = a(q, k);
    a(p, k) = c * apk + std::conj(jqp) * aqk;
    a(q, k) = std::conj(jpq) * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {  // v <- v * J
    const cd vkp = v(k, p);
    const cd vkq = v(k, q);
    v(k, p) = vkp * c + vkq * jqp;
    v(k, q) = vkp * jpq + vkq * c;
  }
}

double off_diagonal_norm(const HermitianMatrix& a) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) sum += std::norm(a(i, j));
  return std::sqrt(sum);
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> vec) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < vec.size(); ++k) best = std::max(best, std::abs(vec(k)));
  for (Eigen::Index k = 0; k < vec.size(); ++k) {
    if (std::abs(vec(k)) >= best - 1e-12) {
      const cd phase = std::conj(vec(k)) / std::abs(vec(k));
      vec *= phase;
      vec(k) = std::abs(vec(k));
      return;
    }
  }
}

}  // namespace

FieldVector::FieldVector(double b, double phi, double bz) : b_(b), phi_(phi), bz_(bz) {
  require_finite(b, "field magnitude");
  require_finite(phi, "field angle");
  require_finite(bz, "out-of-plane field");
  if (b < 0.0) throw ValidationError("in-plane field magnitude must be non-negative");
}

FieldVector FieldVector::in_plane(double b, double phi) { return {b, phi, 0.0}; }
FieldVector FieldVector::along_z(double bz) { return {0.0, 0.0, bz}; }
FieldVector FieldVector::general(double b, double phi, double bz) { return {b, phi, bz}; }

FieldVector FieldVector::cartesian(double bx, double by, double bz) {
  require_finite(bx, "field x component");
  require_finite(by, "field y component");
  return {std::hypot(bx, by), std::atan2(by, bx), bz};
}

FieldVector FieldVector::from_gauss(double b_inplane_gauss, double phi, double bz_gauss,
                                    double d_mhz, double g) {
  require_finite(d_mhz, "D (MHz)");
  require_finite(g, "g-factor");
  if (d_mhz == 0.0) throw ValidationError("D must be nonzero to reduce a field");
  const double scale = g * constants::kBohrMagnetonMHzPerGauss / d_mhz;
  if (b_inplane_gauss < 0.0) throw ValidationError("in-plane field magnitude must be non-negative");
  // Negative D flips the sign of the reduced field; keep b >= 0 by rotating phi.
  if (scale < 0.0) return {-b_inplane_gauss * scale, phi + std::numbers::pi, bz_gauss * scale};
  return {b_inplane_gauss * scale, phi, bz_gauss * scale};
}

double FieldVector::bx() const { return b_ * std::cos(phi_); }
double FieldVector::by() const { return b_ * std::sin(phi_); }
double FieldVector::magnitude() const { return std::hypot(b_, bz_); }

double FieldVector::in_plane_gauss(double d_mhz, double g) const {
  return b_ * std::abs(d_mhz) / (g * constants::kBohrMagnetonMHzPerGauss);
}

double FieldVector::bz_gauss(double d_mhz, double g) const {
  return bz_ * d_mhz / (g * constants::kBohrMagnetonMHzPerGauss);
}

HermitianMatrix triplet_hamiltonian(const ZeroFieldSplitting& zfs, const FieldVector& field) {
  require_zfs(zfs);
  const double d = zfs.d;
  const double e = zfs.e;
  const double zx = field.bx() * d;
  const double zy = field.by() * d;
  const double zz = field.bz() * d;

  HermitianMatrix h(3, 3);
  h << cd(-2.0 * d / 3.0), kI * zz, cd(zy),
       -kI * zz, cd(d / 3.0 - e), cd(zx),
       cd(zy), cd(zx), cd(d / 3.0 + e);
  return h;
}

SpinOperators spin_operators(int twice_spin) {
  if (twice_spin < 1 || twice_spin > 3) throw ValidationError("spin operators implemented for S = 1/2 .. 3/2");
  const Eigen::Index n = twice_spin + 1;
  const double s = twice_spin / 2.0;
  HermitianMatrix sx = HermitianMatrix::Zero(n, n);
  HermitianMatrix raise = HermitianMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double m = s - static_cast<double>(k);
    sx(k, k) = m;
    if (k > 0) raise(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  // Quantization along x, so the ladder operators are S_y +/- i S_z.
  const HermitianMatrix lower = raise.adjoint();
  SpinOperators ops;
  ops.sx = sx;
  ops.sy = (raise + lower) * 0.5;
  ops.sz = (raise - lower) * cd(0.0, -0.5);
  return ops;
}

HermitianMatrix quartet_hamiltonian(const ZeroFieldSplitting& zfs, const FieldVector& field) {
  require_zfs(zfs);
  const SpinOperators ops = spin_operators(3);
  const double s_s1 = 1.5 * 2.5;
  const HermitianMatrix id = HermitianMatrix::Identity(4, 4);
  HermitianMatrix h = zfs.d * (ops.sx * ops.sx - (s_s1 / 3.0) * id) +
                      zfs.e * (ops.sy * ops.sy - ops.sz * ops.sz) +
                      zfs.d * (field.bx() * ops.sx + field.by() * ops.sy + field.bz() * ops.sz);
  return h;
}

HermitianMatrix doublet_hamiltonian(const FieldVector& field) {
  const SpinOperators ops = spin_operators(1);
  return field.bx() * ops.sx + field.by() * ops.sy + field.bz() * ops.sz;
}

SpinEigensystem eigensystem(const HermitianMatrix& h) {
  const Eigen::Index n = h.rows();
  if (n == 0 || n != h.cols()) throw ValidationError("eigensystem requires a non-empty square matrix");
  if (!h.allFinite()) throw ValidationError("eigensystem input is not finite");
  const double scale = std::max(1.0, h.norm());
  if ((h - h.adjoint()).norm() > 1e-12 * scale) throw ValidationError("eigensystem input is not Hermitian");

  HermitianMatrix a = (h + h.adjoint()) * 0.5;
  HermitianMatrix v = HermitianMatrix::Identity(n, n);
  for (int sweep = 0; sweep < 64 && off_diagonal_norm(a) > 1e-15 * scale; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) jacobi_rotate(a, v, p, q);
  }
  if (off_diagonal_norm(a) > 1e-12 * scale) throw NumericalError("Jacobi eigensolver did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });

  Eigen::VectorXd values(n);
  Eigen::MatrixXcd vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = a(order[i], order[i]).real();
    vectors.col(i) = v.col(order[i]);
  }

  // Canonicalize degenerate subspaces: Gram-Schmidt of the basis vectors, in
  // basis order, projected into the subspace.
  const double degeneracy_tol = 1e-9 * scale;
  for (Eigen::Index begin = 0; begin < n;) {
    Eigen::Index end = begin + 1;
    while (end < n && values(end) - values(end - 1) <= degeneracy_tol) ++end;
    const Eigen::Index k = end - begin;
    if (k > 1) {
      const Eigen::MatrixXcd q = vectors.middleCols(begin, k);
      const Eigen::MatrixXcd projector = q * q.adjoint();
      Eigen::MatrixXcd accepted(n, k);
      Eigen::Index found = 0;
      for (Eigen::Index basis = 0; basis < n && found < k; ++basis) {
        Eigen::VectorXcd candidate = projector.col(basis);
        for (Eigen::Index j = 0; j < found; ++j)
          candidate -= accepted.col(j) * accepted.col(j).dot(candidate);
        const double norm = candidate.norm();
        if (norm > 1e-6) accepted.col(found++) = candidate / norm;
      }
      if (found != k) throw NumericalError("failed to canonicalize degenerate eigenspace");
      const double mean = values.segment(begin, k).mean();
      vectors.middleCols(begin, k) = accepted;
      values.segment(begin, k).setConstant(mean);
    }
    begin = end;
  }

  for (Eigen::Index i = 0; i < n; ++i) fix_phase(vectors.col(i));

  SpinEigensystem out;
  out.eigenvalues = values;
  out.eigenvectors = vectors;
  out.projections = vectors.cwiseAbs2();

  // Ties: descending weight on basis 0, then basis 1.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) {
    if (std::abs(values(x) - values(y)) > degeneracy_tol) return values(x) < values(y);
    const double px = out.projections(0, x), py = out.projections(0, y);
    if (std::abs(px - py) > 1e-12) return px > py;
    if (n > 1) return out.projections(1, x) > out.projections(1, y) + 1e-12;
    return false;
  });
  SpinEigensystem sorted = out;
  for (Eigen::Index i = 0; i < n; ++i) {
    sorted.eigenvalues(i) = out.eigenvalues(idx[i]);
    sorted.eigenvectors.col(i) = out.eigenvectors.col(idx[i]);
    sorted.projections.col(i) = out.projections.col(idx[i]);
  }
  return sorted;
}

}  // namespace spinsim
