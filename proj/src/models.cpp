#include "mfpmp/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mfpmp/errors.hpp"

namespace mfpmp {

namespace {

constexpr cplx kI{0.0, 1.0};

void require_dim(std::span<const double> u, std::size_t dim, const char* where) {
  if (u.size() != dim) {
    throw std::invalid_argument(std::string(where) + ": expected control dimension " + std::to_string(dim) +
                                ", got " + std::to_string(u.size()));
  }
}

double control_at(std::span<const double> u, std::size_t j) { return j == 0 ? 1.0 : u[j - 1]; }

}  // namespace

// ---------------------------------------------------------------------------
// AdmissibleSet

AdmissibleSet AdmissibleSet::ball(std::size_t dim, double radius) {
  if (dim == 0) throw std::invalid_argument("AdmissibleSet::ball: dimension must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("AdmissibleSet::ball: radius must be positive and finite");
  }
  AdmissibleSet s;
  s.kind_ = Kind::ball;
  s.dim_ = dim;
  s.radius_ = radius;
  return s;
}

AdmissibleSet AdmissibleSet::box(std::vector<double> lower, std::vector<double> upper) {
  if (lower.empty() || lower.size() != upper.size()) {
    throw std::invalid_argument("AdmissibleSet::box: bounds must be non-empty and of equal length");
  }
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || lower[j] > upper[j]) {
      throw std::invalid_argument("AdmissibleSet::box: bounds must be finite with lower <= upper");
    }
  }
  AdmissibleSet s;
  s.kind_ = Kind::box;
  s.dim_ = lower.size();
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

bool AdmissibleSet::contains(std::span<const double> u, double tol) const {
  if (u.size() != dim_) return false;
  if (kind_ == Kind::ball) {
    double sq = 0.0;
    for (double v : u) sq += v * v;
    return std::sqrt(sq) <= radius_ + tol;
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    if (u[j] < lower_[j] - tol || u[j] > upper_[j] + tol) return false;
  }
  return true;
}

void AdmissibleSet::project(std::span<double> u) const {
  require_dim(u, dim_, "AdmissibleSet::project");
  if (kind_ == Kind::ball) {
    double sq = 0.0;
    for (double v : u) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > radius_) {
      const double scale = radius_ / norm;
      for (double& v : u) v *= scale;
    }
    return;
  }
  for (std::size_t j = 0; j < dim_; ++j) u[j] = std::clamp(u[j], lower_[j], upper_[j]);
}

void AdmissibleSet::maximize_linear(std::span<const double> d, std::span<const double> current,
                                    std::span<double> out) const {
  require_dim(d, dim_, "AdmissibleSet::maximize_linear");
  require_dim(current, dim_, "AdmissibleSet::maximize_linear");
  if (kind_ == Kind::ball) {
    double sq = 0.0;
    for (double v : d) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < 1e-14) {
      std::copy(current.begin(), current.end(), out.begin());
      return;
    }
    for (std::size_t j = 0; j < dim_; ++j) out[j] = radius_ * d[j] / norm;
    return;
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    if (d[j] > 0.0) {
      out[j] = upper_[j];
    } else if (d[j] < 0.0) {
      out[j] = lower_[j];
    } else {
      out[j] = current[j];
    }
  }
}

ControlVector admissible_project(const ControlVector& u, const AdmissibleSet& set) {
  ControlVector out = u;
  set.project(out);
  return out;
}

// ---------------------------------------------------------------------------
// ControlledField defaults

FourierField ControlledField::velocity(double t, const FourierField& mu, std::span<const double> u) const {
  require_dim(u, control_dim(), "ControlledField::velocity");
  FourierField v = component(0, t, mu);
  for (std::size_t j = 1; j <= control_dim(); ++j) v += component(j, t, mu) * cplx{u[j - 1]};
  return v;
}

FourierField ControlledField::dx_velocity(double t, const FourierField& mu, std::span<const double> u) const {
  return derivative(velocity(t, mu, u));
}

void ControlledField::continuity_rhs(double t, const FourierField& a, std::span<const double> u,
                                     FourierField& out) const {
  const FourierField flux = multiply(velocity(t, a, u), a);
  out = FourierField(a.n_modes());
  for (int n = 0; n <= a.max_index(); ++n) out[n] = -kI * static_cast<double>(n) * flux[n];
  out.symmetrize_from_nonnegative();
}

void ControlledField::adjoint_rhs(double t, const FourierField& b, const FourierField& a,
                                  std::span<const double> u, FourierField& out) const {
  const FourierField v = velocity(t, a, u);
  const FourierField flux = multiply(v, b);
  const FourierField stretch = multiply(derivative(v), b);

  FourierField response(a.n_modes());
  for (std::size_t j = 0; j <= control_dim(); ++j) {
    const double weight = control_at(u, j);
    if (weight == 0.0) continue;
    response += nonlocal_response(j, t, a, b) * cplx{weight};
  }
  const FourierField source = multiply(a, response);

  out = FourierField(a.n_modes());
  for (int n = 0; n <= a.max_index(); ++n) {
    out[n] = -kI * static_cast<double>(n) * flux[n] - stretch[n] - source[n];
  }
  out.symmetrize_from_nonnegative();
}

void ControlledField::switching(double t, const FourierField& mu, const FourierField& zeta,
                                std::span<double> out) const {
  require_dim(out, control_dim(), "ControlledField::switching");
  for (std::size_t j = 1; j <= control_dim(); ++j) out[j - 1] = pairing(component(j, t, mu), zeta);
}

// ---------------------------------------------------------------------------
// ConvolutionField

ConvolutionField::ConvolutionField(std::vector<FourierField> external, std::vector<FourierField> kernels)
    : external_(std::move(external)), kernels_(std::move(kernels)) {
  if (external_.size() < 2 || external_.size() != kernels_.size()) {
    throw std::invalid_argument("ConvolutionField: need m+1 external fields and kernels, m >= 1");
  }
  const int n_modes = external_.front().n_modes();
  for (std::size_t j = 0; j < external_.size(); ++j) {
    if (external_[j].n_modes() != n_modes || kernels_[j].n_modes() != n_modes) {
      throw std::invalid_argument("ConvolutionField: mismatched mode counts");
    }
    FourierField response(n_modes);
    for (int n = -response.max_index(); n <= response.max_index(); ++n) {
      response[n] = kI * static_cast<double>(n) * kernels_[j][-n];
    }
    response_kernels_.push_back(std::move(response));
  }
}

ConvolutionField ConvolutionField::from_pointwise(int n_modes,
                                                  const std::vector<std::function<double(double)>>& external,
                                                  const std::vector<std::function<double(double)>>& kernels) {
  auto sample = [n_modes](const std::function<double(double)>& f) {
    RealGridField grid;
    grid.values.resize(static_cast<std::size_t>(n_modes));
    for (std::size_t j = 0; j < grid.values.size(); ++j) {
      grid.values[j] = f ? f(RealGridField::node(j, grid.values.size())) : 0.0;
    }
    return to_spectral(grid);
  };
  std::vector<FourierField> ext;
  std::vector<FourierField> ker;
  for (const auto& f : external) ext.push_back(sample(f));
  for (const auto& k : kernels) ker.push_back(sample(k));
  return ConvolutionField(std::move(ext), std::move(ker));
}

FourierField ConvolutionField::component(std::size_t j, double /*t*/, const FourierField& mu) const {
  return external_.at(j) + convolve(kernels_.at(j), mu);
}

FourierField ConvolutionField::nonlocal_response(std::size_t j, double /*t*/, const FourierField& /*mu*/,
                                                 const FourierField& zeta) const {
  return convolve(response_kernels_.at(j), zeta);
}

// ---------------------------------------------------------------------------
// KuramotoField

FourierField KuramotoField::component(std::size_t j, double /*t*/, const FourierField& mu) const {
  FourierField v(mu.n_modes());
  switch (j) {
    case 0:
      break;
    case 1:
      v[0] = 1.0;
      break;
    case 2:
      v[1] = kI * kPi * mu[1] * std::polar(1.0, alpha_);
      v[-1] = std::conj(v[1]);
      break;
    default:
      throw std::out_of_range("KuramotoField::component: index out of range");
  }
  return v;
}

FourierField KuramotoField::nonlocal_response(std::size_t j, double /*t*/, const FourierField& mu,
                                              const FourierField& zeta) const {
  FourierField r(mu.n_modes());
  if (j == 2) {
    r[1] = kPi * std::polar(1.0, -alpha_) * zeta[1];
    r[-1] = std::conj(r[1]);
  } else if (j > 2) {
    throw std::out_of_range("KuramotoField::nonlocal_response: index out of range");
  }
  return r;
}

void KuramotoField::continuity_rhs(double /*t*/, const FourierField& a, std::span<const double> u,
                                   FourierField& out) const {
  require_dim(u, 2, "KuramotoField::continuity_rhs");
  if (out.n_modes() != a.n_modes()) out = FourierField(a.n_modes());
  const double u1 = u[0];
  const double u2 = u[1];
  const cplx rot = std::polar(1.0, alpha_);
  const cplx a1 = a.at(1) * rot;
  const cplx am1 = a.at(-1) * std::conj(rot);
  const int half = a.max_index();
  for (int n = 0; n <= half; ++n) {
    const double dn = static_cast<double>(n);
    out[n] = -kI * dn * u1 * a[n] + kPi * dn * u2 * (a1 * a.at(n - 1) - am1 * a.at(n + 1));
  }
  out.symmetrize_from_nonnegative();
}

void KuramotoField::adjoint_rhs(double /*t*/, const FourierField& b, const FourierField& a,
                                std::span<const double> u, FourierField& out) const {
  require_dim(u, 2, "KuramotoField::adjoint_rhs");
  if (out.n_modes() != b.n_modes()) out = FourierField(b.n_modes());
  const double u1 = u[0];
  const double u2 = u[1];
  const cplx rot = std::polar(1.0, alpha_);
  const cplx rotc = std::conj(rot);
  const cplx a1 = a.at(1);
  const cplx am1 = a.at(-1);
  const cplx b1 = b.at(1);
  const cplx bm1 = b.at(-1);
  const int half = b.max_index();
  for (int n = 0; n <= half; ++n) {
    const double dn = static_cast<double>(n);
    const cplx bl = b.at(n - 1);
    const cplx br = b.at(n + 1);
    const cplx al = a.at(n - 1);
    const cplx ar = a.at(n + 1);
    out[n] = -kI * dn * u1 * b[n] + kPi * dn * u2 * (a1 * bl * rot - am1 * br * rotc) +
             kPi * u2 * ((a1 * bl - bm1 * ar) * rot + (am1 * br - b1 * al) * rotc);
  }
  out.symmetrize_from_nonnegative();
}

void KuramotoField::switching(double /*t*/, const FourierField& mu, const FourierField& zeta,
                              std::span<double> out) const {
  require_dim(out, 2, "KuramotoField::switching");
  out[0] = kTwoPi * zeta[0].real();
  const cplx v1 = kI * kPi * mu.at(1) * std::polar(1.0, alpha_);
  out[1] = 2.0 * kTwoPi * (v1 * zeta.at(-1)).real();
}

double KuramotoField::dmu_kernel(double y, double x, double u2) const { return u2 * std::cos(y - x + alpha_); }

FourierField KuramotoField::kernel_k1(int n_modes) const {
  FourierField k(n_modes);
  k[1] = 0.5 * std::polar(1.0, -alpha_);
  k[-1] = std::conj(k[1]);
  return k;
}

FourierField KuramotoField::kernel_k2(int n_modes) const {
  FourierField k(n_modes);
  k[1] = 0.5 * std::polar(1.0, alpha_);
  k[-1] = std::conj(k[1]);
  return k;
}

ConvolutionField KuramotoField::as_convolution_field(int n_modes) const {
  FourierField zero(n_modes);
  FourierField one(n_modes);
  one[0] = 1.0;
  FourierField kernel(n_modes);  // sin(-z - α)
  kernel[1] = 0.5 * kI * std::polar(1.0, alpha_);
  kernel[-1] = std::conj(kernel[1]);
  return ConvolutionField({zero, one, zero}, {zero, zero, kernel});
}

// ---------------------------------------------------------------------------
// Costs

FourierField TerminalCost::intrinsic_derivative(const FourierField& mu) const {
  return derivative(flat_derivative(mu));
}

FourierField TerminalCost::terminal_adjoint(const FourierField& mu_T) const {
  return multiply(intrinsic_derivative(mu_T), mu_T) * cplx{-1.0};
}

double LinearCost::value(const FourierField& mu) const { return pairing(potential_, mu); }

FourierField LinearCost::flat_derivative(const FourierField& mu) const {
  FourierField flat = potential_;
  flat[0] -= value(mu);
  return flat;
}

void require_normalized(const FourierField& mu, double tol) {
  if (std::abs(mu[0] - cplx{1.0 / kTwoPi}) > tol) {
    throw std::invalid_argument("density is not normalized: mu_0 = " + std::to_string(mu[0].real()));
  }
}

double sync_cost_eval(const FourierField& mu, double x0) {
  require_normalized(mu);
  return 1.0 - kTwoPi * (std::polar(1.0, -x0) * mu.at(-1)).real();
}

FourierField sync_cost_dmu(const FourierField& mu, double x0) {
  FourierField d(mu.n_modes());
  d[1] = -0.5 * kI * std::polar(1.0, -x0);
  d[-1] = std::conj(d[1]);
  return d;
}

double SyncCost::value(const FourierField& mu) const { return sync_cost_eval(mu, x0_); }

FourierField SyncCost::flat_derivative(const FourierField& mu) const {
  FourierField flat(mu.n_modes());
  flat[0] = 1.0 - value(mu);
  flat[1] = -0.5 * std::polar(1.0, -x0_);
  flat[-1] = std::conj(flat[1]);
  return flat;
}

FourierField SyncCost::intrinsic_derivative(const FourierField& mu) const { return sync_cost_dmu(mu, x0_); }

FourierField SyncCost::terminal_adjoint(const FourierField& mu_T) const {
  FourierField b(mu_T.n_modes());
  const cplx left = std::polar(1.0, -x0_);
  const cplx right = std::polar(1.0, x0_);
  for (int n = 0; n <= b.max_index(); ++n) {
    b[n] = 0.5 * kI * (mu_T.at(n - 1) * left - mu_T.at(n + 1) * right);
  }
  b.symmetrize_from_nonnegative();
  return b;
}

// ---------------------------------------------------------------------------

ModelSpec make_kuramoto_model(const KuramotoParams& params) {
  return make_kuramoto_model(params, AdmissibleSet::ball(2, params.radius));
}

ModelSpec make_kuramoto_model(const KuramotoParams& params, const AdmissibleSet& admissible) {
  if (admissible.dim() != 2) throw std::invalid_argument("Kuramoto model needs a 2-dimensional control set");
  return ModelSpec{std::make_shared<KuramotoField>(params.alpha), std::make_shared<SyncCost>(params.x0),
                   admissible};
}

FourierField kuramoto_vf_coeffs(double t, const FourierField& mu, const ControlVector& u,
                                const KuramotoField& field, const AdmissibleSet& admissible) {
  if (!admissible.contains(u)) throw ConstraintError("kuramoto_vf_coeffs: control outside the admissible set");
  return field.velocity(t, mu, u);
}

}  // namespace mfpmp
