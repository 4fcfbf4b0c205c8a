#ifndef MFPMP_TIME_GRID_HPP
#define MFPMP_TIME_GRID_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mfpmp {

/// Uniform grid on [0, T] with full steps τ and half-step nodes t_h = h·τ/2.
class TimeGrid {
 public:
  TimeGrid() = default;

  /// Throws std::invalid_argument unless τ > 0 and T/τ is an integer.
  TimeGrid(double horizon, double tau);

  double horizon() const noexcept { return horizon_; }
  double tau() const noexcept { return tau_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t half_nodes() const noexcept { return 2 * steps_ + 1; }

  double time_at_step(std::size_t k) const noexcept { return static_cast<double>(k) * tau_; }
  double time_at_half(std::size_t h) const noexcept { return static_cast<double>(h) * (0.5 * tau_); }

  /// Nearest full-step index to t, clamped to [0, steps].
  std::size_t nearest_step(double t) const noexcept;

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_ = 0.0;
  double tau_ = 0.0;
  std::size_t steps_ = 0;
};

/// A point of R^m.
using ControlVector = std::vector<double>;

/// Piecewise-constant control: value k holds on [t_k, t_{k+1}).
class ControlSignal {
 public:
  ControlSignal() = default;
  ControlSignal(const TimeGrid& grid, std::size_t dim, double fill = 0.0);

  /// Samples f(t_k) on every interval.
  static ControlSignal sample(const TimeGrid& grid, std::size_t dim,
                              const std::function<ControlVector(double)>& f);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t intervals() const noexcept { return grid_.steps(); }

  std::span<double> at(std::size_t k) noexcept { return {values_.data() + k * dim_, dim_}; }
  std::span<const double> at(std::size_t k) const noexcept { return {values_.data() + k * dim_, dim_}; }

  std::span<const double> raw() const noexcept { return values_; }

  /// u + λ(other - u), intervalwise.
  ControlSignal interpolate(const ControlSignal& other, double lambda) const;

  /// Rectangle-rule L² pairing τ Σ_k a_k·b_k.
  static double inner(const ControlSignal& a, const ControlSignal& b);

  bool operator==(const ControlSignal&) const = default;

 private:
  TimeGrid grid_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

}  // namespace mfpmp

#endif  // MFPMP_TIME_GRID_HPP
