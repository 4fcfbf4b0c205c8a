#ifndef MFPMP_SPECTRAL_HPP
#define MFPMP_SPECTRAL_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mfpmp {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Truncated Fourier series of a real 2π-periodic field,
///
///   c(x) = Σ_{n=-N/2}^{N/2} ĉ_n e^{inx},   ĉ_n = (1/2π) ∫ c(x) e^{-inx} dx.
///
/// The full index range is stored (no half-spectrum compression), so
/// coefficient arithmetic in the solvers reads literally. Indices outside
/// |n| <= N/2 are identically zero.
class FourierField {
 public:
  FourierField() = default;

  /// Zero field with `n_modes` retained harmonics (even, >= 2).
  explicit FourierField(int n_modes);

  int n_modes() const noexcept { return n_modes_; }
  int max_index() const noexcept { return n_modes_ / 2; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  /// Coefficient n; zero outside the retained range.
  cplx at(int n) const noexcept {
    return (n < -max_index() || n > max_index()) ? cplx{} : coeffs_[static_cast<std::size_t>(n + max_index())];
  }
  cplx& operator[](int n) noexcept { return coeffs_[static_cast<std::size_t>(n + max_index())]; }
  const cplx& operator[](int n) const noexcept { return coeffs_[static_cast<std::size_t>(n + max_index())]; }

  /// Storage ordered from n = -N/2 to n = N/2.
  std::span<cplx> data() noexcept { return coeffs_; }
  std::span<const cplx> data() const noexcept { return coeffs_; }

  /// Largest |ĉ_{-n} - conj(ĉ_n)|, including the imaginary part of ĉ_0.
  double hermitian_defect() const noexcept;

  /// Largest |ĉ_n|.
  double max_abs() const noexcept;

  /// Overwrites negative indices with conjugates of positive ones and drops
  /// the imaginary part of ĉ_0.
  void symmetrize_from_nonnegative() noexcept;

  FourierField& operator+=(const FourierField& other);
  FourierField& operator-=(const FourierField& other);
  FourierField& operator*=(cplx s) noexcept;

  friend FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
  friend FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
  friend FourierField operator*(cplx s, FourierField a) noexcept { return a *= s; }
  friend FourierField operator*(FourierField a, cplx s) noexcept { return a *= s; }

  bool operator==(const FourierField&) const = default;

 private:
  int n_modes_ = 0;
  std::vector<cplx> coeffs_;
};

/// Samples of a real periodic field at x_j = 2πj/N, j = 0..N-1.
struct RealGridField {
  std::vector<double> values;

  std::size_t n_points() const noexcept { return values.size(); }
  static double node(std::size_t j, std::size_t n_points) noexcept {
    return kTwoPi * static_cast<double>(j) / static_cast<double>(n_points);
  }
};

/// Imaginary residue accepted (and discarded) when reconstructing a real field.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Discrete Fourier transform scaled by 1/N. The Nyquist bin is split evenly
/// between ±N/2, so to_physical(to_spectral(f)) reproduces f exactly.
FourierField to_spectral(const RealGridField& field);

/// Evaluates the series on the N-point grid. Throws SymmetryError when the
/// coefficients are not Hermitian to kSymmetryTolerance.
RealGridField to_physical(const FourierField& field);

/// Evaluates the series on an M-point grid, M >= N (band-limited interpolation).
RealGridField to_physical(const FourierField& field, std::size_t n_points);

/// ∫₀^{2π} f g dx = 2π Σ_n f̂_n ĝ_{-n}.
double pairing(const FourierField& f, const FourierField& g);

/// (K*ρ)(x) = ∫ K(x-y) ρ(y) dy, coefficientwise 2π K̂_n ρ̂_n.
FourierField convolve(const FourierField& kernel, const FourierField& density);

/// d/dx: coefficient n multiplied by in.
FourierField derivative(const FourierField& field);

/// Pointwise product f·g truncated to |n| <= N/2. Evaluated on a zero-padded
/// grid large enough that the retained coefficients are alias-free.
FourierField multiply(const FourierField& f, const FourierField& g);

/// Coefficients of x ↦ c(x - shift): ĉ_n e^{-in·shift}.
FourierField translate(const FourierField& field, double shift);

/// Evaluates the series at a single point.
double evaluate(const FourierField& field, double x);

}  // namespace mfpmp

#endif  // MFPMP_SPECTRAL_HPP
