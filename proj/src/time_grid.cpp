#include "mfpmp/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfpmp {

TimeGrid::TimeGrid(double horizon, double tau) : horizon_(horizon), tau_(tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("TimeGrid: tau must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("TimeGrid: horizon must be positive");
  const double ratio = horizon / tau;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("TimeGrid: T/tau = " + std::to_string(ratio) + " is not an integer");
  }
  steps_ = static_cast<std::size_t>(rounded);
}

std::size_t TimeGrid::nearest_step(double t) const noexcept {
  if (t <= 0.0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(t / tau_));
  return std::min(k, steps_);
}

ControlSignal::ControlSignal(const TimeGrid& grid, std::size_t dim, double fill)
    : grid_(grid), dim_(dim), values_(grid.steps() * dim, fill) {
  if (dim == 0) throw std::invalid_argument("ControlSignal: control dimension must be positive");
}

ControlSignal ControlSignal::sample(const TimeGrid& grid, std::size_t dim,
                                    const std::function<ControlVector(double)>& f) {
  ControlSignal u(grid, dim);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const ControlVector v = f(grid.time_at_step(k));
    if (v.size() != dim) throw std::invalid_argument("ControlSignal::sample: wrong control dimension");
    std::copy(v.begin(), v.end(), u.at(k).begin());
  }
  return u;
}

ControlSignal ControlSignal::interpolate(const ControlSignal& other, double lambda) const {
  if (!(grid_ == other.grid_) || dim_ != other.dim_) {
    throw std::invalid_argument("ControlSignal::interpolate: grid mismatch");
  }
  ControlSignal out(*this);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out.values_[i] = values_[i] + lambda * (other.values_[i] - values_[i]);
  }
  return out;
}

double ControlSignal::inner(const ControlSignal& a, const ControlSignal& b) {
  if (!(a.grid_ == b.grid_) || a.dim_ != b.dim_) {
    throw std::invalid_argument("ControlSignal::inner: grid mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values_.size(); ++i) sum += a.values_[i] * b.values_[i];
  return a.grid_.tau() * sum;
}

}  // namespace mfpmp
