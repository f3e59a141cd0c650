#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace filt_snn {

/// Time constants (ms) and potentials (mV) of the simplified spike response
/// model. Defaults are the values used throughout the project.
struct KernelParams {
  double tau_m = 10.0;
  double tau_s = 5.0;
  double eps0 = 4.0;
  double u_r = 0.0;
  double v_t = 15.0;
  double tau_q = 10.0;

  /// Throws std::invalid_argument unless tau_m > tau_s > 0, tau_q > 0, v_t > u_r.
  void validate() const;

  /// Offset at which the PSP kernel peaks, tau_m*tau_s/(tau_m-tau_s)*ln(tau_m/tau_s).
  double psp_peak_time() const;
  double psp_peak() const;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// PSP kernel. Strictly causal: zero for s <= 0.
double psp_kernel(double s, const KernelParams& p);

/// Reset kernel. Strictly causal: zero for s <= 0.
double reset_kernel(double s, const KernelParams& p);

/// Strictly increasing, non-negative spike times (ms). An empty train means
/// "no spike"; there is no numeric encoding of an infinite time.
class SpikeTrain {
 public:
  SpikeTrain() = default;
  explicit SpikeTrain(std::vector<double> times);

  static SpikeTrain single(double t) { return SpikeTrain({t}); }

  std::span<const double> times() const { return times_; }
  bool empty() const { return times_.empty(); }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }

  std::optional<double> first() const;

  /// Appends a spike; throws std::invalid_argument if t does not exceed the last spike.
  void append(double t);

  bool within(double duration) const;

  friend bool operator==(const SpikeTrain&, const SpikeTrain&) = default;

 private:
  std::vector<double> times_;
};

/// Earliest spike of a train, if any.
inline std::optional<double> first_spike(const SpikeTrain& train) { return train.first(); }

/// Simulation window [0, duration] sampled every dt.
struct SimWindow {
  double duration = 10.0;
  double dt = 0.1;

  void validate() const;
  /// Number of dt steps in the window; grid points are k*dt for k = 0..steps().
  std::size_t steps() const;
  double time_at(std::size_t k) const { return static_cast<double>(k) * dt; }
};

struct WeightedInput {
  double weight = 0.0;
  SpikeTrain train;
};

/// Exact membrane potential at time t: weighted PSPs of all input spikes plus
/// the reset kernels of the neuron's own spikes.
double membrane_potential(double t, std::span<const WeightedInput> inputs,
                          const SpikeTrain& own_spikes, const KernelParams& p);

/// Scans the window grid and emits a spike at every grid point where the
/// potential reaches threshold. Each emitted spike's reset kernel is part of
/// the potential from the next grid point on.
SpikeTrain simulate_neuron(std::span<const WeightedInput> inputs, const KernelParams& p,
                           const SimWindow& window);

/// Threshold scan over a precomputed feed-forward drive (one value per grid
/// point). Shared by simulate_neuron and the layer simulation in network.
SpikeTrain fire_from_drive(std::span<const double> drive, const KernelParams& p,
                           const SimWindow& window);

}  // namespace filt_snn
