#ifndef MFPMP_MODELS_HPP
#define MFPMP_MODELS_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mfpmp/spectral.hpp"
#include "mfpmp/time_grid.hpp"

namespace mfpmp {

/// Compact convex control set U ⊂ R^m: a centred Euclidean ball or a box.
class AdmissibleSet {
 public:
  enum class Kind { ball, box };

  AdmissibleSet() = default;
  static AdmissibleSet ball(std::size_t dim, double radius);
  static AdmissibleSet box(std::vector<double> lower, std::vector<double> upper);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  double radius() const noexcept { return radius_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

  bool contains(std::span<const double> u, double tol = 1e-12) const;

  /// Euclidean projection (radial for the ball, clamp for the box).
  void project(std::span<double> u) const;

  /// Writes argmax_{v in U} v·d into `out`. Where the linear form vanishes
  /// (|d| < 1e-14 for the ball, d_j == 0 for a box coordinate) the entry of
  /// `current` is kept.
  void maximize_linear(std::span<const double> d, std::span<const double> current,
                       std::span<double> out) const;

 private:
  Kind kind_ = Kind::ball;
  std::size_t dim_ = 0;
  double radius_ = 0.0;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

ControlVector admissible_project(const ControlVector& u, const AdmissibleSet& set);

/// Control-affine nonlocal vector field on the circle,
///
///   V_t(x, μ, u) = V⁰_t(x, μ) + Σ_j u_j V^j_t(x, μ),
///
/// described entirely through Fourier coefficients.
class ControlledField {
 public:
  virtual ~ControlledField() = default;

  virtual std::size_t control_dim() const = 0;

  /// Coefficients of V^j_t(·, μ); j = 0 is the drift, j = 1..m the control directions.
  virtual FourierField component(std::size_t j, double t, const FourierField& mu) const = 0;

  /// Coefficients of x ↦ ∫ D_μV^j_t(y, μ, x) ζ(y) dy, the nonlocal part of
  /// the adjoint source.
  virtual FourierField nonlocal_response(std::size_t j, double t, const FourierField& mu,
                                         const FourierField& zeta) const = 0;

  FourierField velocity(double t, const FourierField& mu, std::span<const double> u) const;

  /// Coefficients of D_xV_t(·, μ, u).
  virtual FourierField dx_velocity(double t, const FourierField& mu, std::span<const double> u) const;

  /// dâ_n/dt = -in (V̂ρ)_n. The default evaluates the product on a padded grid.
  virtual void continuity_rhs(double t, const FourierField& a, std::span<const double> u,
                              FourierField& out) const;

  /// db̂/dt for the adjoint balance law in one space dimension,
  ///
  ///   ∂_t ζ = -∂_x(vζ) - (∂_x v) ζ - ρ Σ_j u_j ∫ D_μV^j(y, μ, ·) ζ(y) dy,  u_0 = 1.
  virtual void adjoint_rhs(double t, const FourierField& b, const FourierField& a,
                           std::span<const double> u, FourierField& out) const;

  /// d_j = ∫ V^j_t(x, μ) ζ(x) dx for j = 1..m.
  virtual void switching(double t, const FourierField& mu, const FourierField& zeta,
                         std::span<double> out) const;
};

/// V^j(x, μ) = f_j(x) + (K_j * μ)(x) for j = 0..m, with time-independent
/// external fields f_j and interaction kernels K_j. Serves as the generic
/// grid-evaluated adapter: kernels may be given pointwise.
class ConvolutionField final : public ControlledField {
 public:
  /// `external` and `kernels` hold m+1 fields each (index 0 is the drift).
  ConvolutionField(std::vector<FourierField> external, std::vector<FourierField> kernels);

  static ConvolutionField from_pointwise(int n_modes,
                                         const std::vector<std::function<double(double)>>& external,
                                         const std::vector<std::function<double(double)>>& kernels);

  std::size_t control_dim() const override { return external_.size() - 1; }
  FourierField component(std::size_t j, double t, const FourierField& mu) const override;
  FourierField nonlocal_response(std::size_t j, double t, const FourierField& mu,
                                 const FourierField& zeta) const override;

 private:
  std::vector<FourierField> external_;
  std::vector<FourierField> kernels_;
  std::vector<FourierField> response_kernels_;  // x ↦ -K_j'(-x)
};

/// Mean-field Kuramoto field with zero natural frequency,
///
///   V(x, μ, u) = u₁ + u₂ ∫ sin(y - x - α) dμ(y).
///
/// The continuity and adjoint right-hand sides are evaluated directly on the
/// coefficient sequences; only the n = ±1 modes of μ couple.
class KuramotoField final : public ControlledField {
 public:
  explicit KuramotoField(double alpha) : alpha_(alpha) {}

  double alpha() const noexcept { return alpha_; }

  std::size_t control_dim() const override { return 2; }
  FourierField component(std::size_t j, double t, const FourierField& mu) const override;
  FourierField nonlocal_response(std::size_t j, double t, const FourierField& mu,
                                 const FourierField& zeta) const override;

  void continuity_rhs(double t, const FourierField& a, std::span<const double> u,
                      FourierField& out) const override;
  void adjoint_rhs(double t, const FourierField& b, const FourierField& a, std::span<const double> u,
                   FourierField& out) const override;
  void switching(double t, const FourierField& mu, const FourierField& zeta,
                 std::span<double> out) const override;

  /// D_μV(y, μ, u, x) = u₂ cos(y - x + α).
  double dmu_kernel(double y, double x, double u2) const;

  /// Adjoint source kernels: K₁(x) = cos(-x + α), K₂(x) = cos(x + α).
  FourierField kernel_k1(int n_modes) const;
  FourierField kernel_k2(int n_modes) const;

  /// The same field expressed through ConvolutionField (kernel sin(-z - α)).
  ConvolutionField as_convolution_field(int n_modes) const;

 private:
  double alpha_;
};

/// Terminal cost ℓ(μ) with its flat and intrinsic derivatives.
class TerminalCost {
 public:
  virtual ~TerminalCost() = default;

  virtual double value(const FourierField& mu) const = 0;

  /// δℓ/δμ(μ, ·), normalized so that ∫ δℓ/δμ dμ = 0.
  virtual FourierField flat_derivative(const FourierField& mu) const = 0;

  /// D_μℓ(μ; ·) = ∂_x δℓ/δμ.
  virtual FourierField intrinsic_derivative(const FourierField& mu) const;

  /// Density of ν_T: ζ_T = -D_μℓ(μ_T)·ρ_T.
  virtual FourierField terminal_adjoint(const FourierField& mu_T) const;
};

/// ℓ(μ) = ∫ J(x) dμ(x) for a fixed real potential J.
class LinearCost final : public TerminalCost {
 public:
  explicit LinearCost(FourierField potential) : potential_(std::move(potential)) {}

  double value(const FourierField& mu) const override;
  FourierField flat_derivative(const FourierField& mu) const override;

 private:
  FourierField potential_;
};

/// ℓ(μ) = ∫ (1 - cos(x - x₀)) dμ(x), steering the ensemble towards phase x₀.
class SyncCost final : public TerminalCost {
 public:
  explicit SyncCost(double x0) : x0_(x0) {}

  double x0() const noexcept { return x0_; }

  double value(const FourierField& mu) const override;
  FourierField flat_derivative(const FourierField& mu) const override;
  FourierField intrinsic_derivative(const FourierField& mu) const override;
  FourierField terminal_adjoint(const FourierField& mu_T) const override;

 private:
  double x0_;
};

/// κ·ℓ for a wrapped cost ℓ.
class ScaledCost final : public TerminalCost {
 public:
  ScaledCost(std::shared_ptr<const TerminalCost> inner, double factor)
      : inner_(std::move(inner)), factor_(factor) {}

  double value(const FourierField& mu) const override { return factor_ * inner_->value(mu); }
  FourierField flat_derivative(const FourierField& mu) const override {
    return inner_->flat_derivative(mu) * cplx{factor_};
  }
  FourierField intrinsic_derivative(const FourierField& mu) const override {
    return inner_->intrinsic_derivative(mu) * cplx{factor_};
  }
  FourierField terminal_adjoint(const FourierField& mu_T) const override {
    return inner_->terminal_adjoint(mu_T) * cplx{factor_};
  }

 private:
  std::shared_ptr<const TerminalCost> inner_;
  double factor_;
};

/// Everything the solvers need to know about a problem instance.
struct ModelSpec {
  std::shared_ptr<const ControlledField> field;
  std::shared_ptr<const TerminalCost> cost;
  AdmissibleSet admissible;

  std::size_t control_dim() const { return field->control_dim(); }
};

struct KuramotoParams {
  double alpha = 0.0;
  double x0 = kPi;
  double radius = 1.4142135623730951;  // u₁² + u₂² <= 2

  bool operator==(const KuramotoParams&) const = default;
};

ModelSpec make_kuramoto_model(const KuramotoParams& params);
ModelSpec make_kuramoto_model(const KuramotoParams& params, const AdmissibleSet& admissible);

/// V̂ for the Kuramoto field; throws ConstraintError when u is outside U.
FourierField kuramoto_vf_coeffs(double t, const FourierField& mu, const ControlVector& u,
                                const KuramotoField& field, const AdmissibleSet& admissible);

/// 1 - 2π Re(e^{-ix₀} μ̂_{-1}); μ must be a normalized density.
double sync_cost_eval(const FourierField& mu, double x0);

/// Coefficients of sin(x - x₀).
FourierField sync_cost_dmu(const FourierField& mu, double x0);

/// Throws std::invalid_argument unless μ̂_0 = 1/(2π) to `tol`.
void require_normalized(const FourierField& mu, double tol = 1e-10);

}  // namespace mfpmp

#endif  // MFPMP_MODELS_HPP
