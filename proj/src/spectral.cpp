#include "mfpmp/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

#include "mfpmp/errors.hpp"

namespace mfpmp {

namespace {

void require_valid_modes(int n_modes) {
  if (n_modes < 2 || n_modes % 2 != 0) {
    throw std::invalid_argument("FourierField: mode count must be even and >= 2, got " +
                                std::to_string(n_modes));
  }
}

void require_same_modes(const FourierField& a, const FourierField& b, const char* op) {
  if (a.n_modes() != b.n_modes()) {
    throw std::invalid_argument(std::string(op) + ": mismatched mode counts " +
                                std::to_string(a.n_modes()) + " vs " + std::to_string(b.n_modes()));
  }
}

// FFTW planning is not thread-safe, execution with new-array execute is.
// Plans are created once per (size, sign) and reused for every transform.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_plan plan = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (plan == nullptr) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

struct FftwDeleter {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

FftwBuffer make_buffer(std::size_t n) {
  FftwBuffer buf(fftw_alloc_complex(n));
  if (!buf) throw std::bad_alloc();
  std::fill_n(reinterpret_cast<double*>(buf.get()), 2 * n, 0.0);
  return buf;
}

// Unnormalized DFT: out_k = Σ_j in_j e^{sign·2πi jk/n}.
void run_dft(int n, int sign, fftw_complex* in, fftw_complex* out) {
  fftw_execute_dft(PlanCache::instance().get(n, sign), in, out);
}

// Places coefficients on an M-point grid (M >= N) and evaluates
// Σ ĉ_n e^{inx_j}. Returns complex samples.
FftwBuffer synthesize(const FourierField& field, std::size_t m) {
  const int half = field.max_index();
  auto spec = make_buffer(m);
  auto out = make_buffer(m);
  const auto mm = static_cast<long>(m);
  for (int n = -half; n <= half; ++n) {
    const auto slot = static_cast<std::size_t>(((n % mm) + mm) % mm);
    spec[slot][0] += field[n].real();
    spec[slot][1] += field[n].imag();
  }
  run_dft(static_cast<int>(m), FFTW_BACKWARD, spec.get(), out.get());
  return out;
}

}  // namespace

FourierField::FourierField(int n_modes) : n_modes_(n_modes) {
  require_valid_modes(n_modes);
  coeffs_.assign(static_cast<std::size_t>(n_modes + 1), cplx{});
}

double FourierField::hermitian_defect() const noexcept {
  double defect = 0.0;
  for (int n = 0; n <= max_index(); ++n) {
    defect = std::max(defect, std::abs((*this)[-n] - std::conj((*this)[n])));
  }
  return defect;
}

double FourierField::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

void FourierField::symmetrize_from_nonnegative() noexcept {
  (*this)[0] = cplx{(*this)[0].real(), 0.0};
  for (int n = 1; n <= max_index(); ++n) (*this)[-n] = std::conj((*this)[n]);
}

FourierField& FourierField::operator+=(const FourierField& other) {
  require_same_modes(*this, other, "FourierField::operator+=");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

FourierField& FourierField::operator-=(const FourierField& other) {
  require_same_modes(*this, other, "FourierField::operator-=");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

FourierField& FourierField::operator*=(cplx s) noexcept {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

FourierField to_spectral(const RealGridField& field) {
  const std::size_t n_points = field.n_points();
  if (n_points < 4 || n_points % 2 != 0) {
    throw std::invalid_argument("to_spectral: grid size must be even and >= 4, got " +
                                std::to_string(n_points));
  }
  const int n_modes = static_cast<int>(n_points);
  auto in = make_buffer(n_points);
  auto out = make_buffer(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    if (!std::isfinite(field.values[j])) throw std::invalid_argument("to_spectral: non-finite sample");
    in[j][0] = field.values[j];
  }
  run_dft(n_modes, FFTW_FORWARD, in.get(), out.get());

  FourierField result(n_modes);
  const int half = n_modes / 2;
  const double scale = 1.0 / static_cast<double>(n_points);
  for (int n = 0; n < half; ++n) {
    result[n] = cplx{out[n][0], out[n][1]} * scale;
    if (n > 0) {
      const auto k = static_cast<std::size_t>(n_modes - n);
      result[-n] = cplx{out[k][0], out[k][1]} * scale;
    }
  }
  const cplx nyquist = cplx{out[half][0], out[half][1]} * (0.5 * scale);
  result[half] = nyquist;
  result[-half] = nyquist;
  return result;
}

RealGridField to_physical(const FourierField& field) {
  return to_physical(field, static_cast<std::size_t>(field.n_modes()));
}

RealGridField to_physical(const FourierField& field, std::size_t n_points) {
  if (n_points < static_cast<std::size_t>(field.n_modes())) {
    throw std::invalid_argument("to_physical: grid coarser than the spectrum");
  }
  const double defect = field.hermitian_defect();
  if (defect > kSymmetryTolerance) {
    throw SymmetryError("to_physical: coefficients are not Hermitian (defect " + std::to_string(defect) + ")");
  }
  auto samples = synthesize(field, n_points);
  RealGridField result;
  result.values.resize(n_points);
  // Each coefficient pair contributes at most its defect to the residue.
  const double residue_bound = kSymmetryTolerance * static_cast<double>(field.size());
  for (std::size_t j = 0; j < n_points; ++j) {
    if (std::abs(samples[j][1]) > residue_bound) {
      throw SymmetryError("to_physical: imaginary residue above tolerance");
    }
    result.values[j] = samples[j][0];
  }
  return result;
}

double pairing(const FourierField& f, const FourierField& g) {
  require_same_modes(f, g, "pairing");
  cplx sum{};
  for (int n = -f.max_index(); n <= f.max_index(); ++n) sum += f[n] * g[-n];
  return kTwoPi * sum.real();
}

FourierField convolve(const FourierField& kernel, const FourierField& density) {
  require_same_modes(kernel, density, "convolve");
  FourierField result(kernel.n_modes());
  for (int n = -kernel.max_index(); n <= kernel.max_index(); ++n) {
    result[n] = kTwoPi * kernel[n] * density[n];
  }
  return result;
}

FourierField derivative(const FourierField& field) {
  FourierField result(field.n_modes());
  for (int n = -field.max_index(); n <= field.max_index(); ++n) {
    result[n] = cplx{0.0, static_cast<double>(n)} * field[n];
  }
  return result;
}

FourierField multiply(const FourierField& f, const FourierField& g) {
  require_same_modes(f, g, "multiply");
  // The product has bandwidth N; retained indices |n| <= N/2 stay alias-free
  // on any grid with M > 3N/2.
  const auto m = static_cast<std::size_t>(2 * f.n_modes());
  auto fs = synthesize(f, m);
  auto gs = synthesize(g, m);
  auto prod = make_buffer(m);
  auto out = make_buffer(m);
  for (std::size_t j = 0; j < m; ++j) {
    const cplx p = cplx{fs[j][0], fs[j][1]} * cplx{gs[j][0], gs[j][1]};
    prod[j][0] = p.real();
    prod[j][1] = p.imag();
  }
  run_dft(static_cast<int>(m), FFTW_FORWARD, prod.get(), out.get());

  FourierField result(f.n_modes());
  const double scale = 1.0 / static_cast<double>(m);
  for (int n = -f.max_index(); n <= f.max_index(); ++n) {
    const auto slot = static_cast<std::size_t>(n >= 0 ? n : static_cast<long>(m) + n);
    result[n] = cplx{out[slot][0], out[slot][1]} * scale;
  }
  return result;
}

FourierField translate(const FourierField& field, double shift) {
  FourierField result(field.n_modes());
  for (int n = -field.max_index(); n <= field.max_index(); ++n) {
    result[n] = field[n] * std::polar(1.0, -static_cast<double>(n) * shift);
  }
  return result;
}

double evaluate(const FourierField& field, double x) {
  cplx sum{};
  for (int n = -field.max_index(); n <= field.max_index(); ++n) {
    sum += field[n] * std::polar(1.0, static_cast<double>(n) * x);
  }
  return sum.real();
}

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::divergence: return "divergence";
    case ErrorCategory::line_search: return "line-search";
    case ErrorCategory::io: return "io";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::constraint: return "constraint";
    case ErrorCategory::symmetry: return "symmetry";
  }
  return "unknown";
}

}  // namespace mfpmp
