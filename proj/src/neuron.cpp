#include "filt_snn/neuron.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace filt_snn {

void KernelParams::validate() const {
  if (!(tau_s > 0.0) || !(tau_m > tau_s)) {
    throw std::invalid_argument("kernel params: require tau_m > tau_s > 0");
  }
  if (!(tau_q > 0.0)) {
    throw std::invalid_argument("kernel params: require tau_q > 0");
  }
  if (!(v_t > u_r)) {
    throw std::invalid_argument("kernel params: require v_t > u_r");
  }
  if (!std::isfinite(eps0)) {
    throw std::invalid_argument("kernel params: eps0 must be finite");
  }
}

double KernelParams::psp_peak_time() const {
  return tau_m * tau_s / (tau_m - tau_s) * std::log(tau_m / tau_s);
}

double KernelParams::psp_peak() const { return psp_kernel(psp_peak_time(), *this); }

double psp_kernel(double s, const KernelParams& p) {
  if (s <= 0.0) {
    return 0.0;
  }
  return p.eps0 * (std::exp(-s / p.tau_m) - std::exp(-s / p.tau_s));
}

double reset_kernel(double s, const KernelParams& p) {
  if (s <= 0.0) {
    return 0.0;
  }
  return (p.u_r - p.v_t) * std::exp(-s / p.tau_m);
}

SpikeTrain::SpikeTrain(std::vector<double> times) : times_(std::move(times)) {
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || times_[i] < 0.0) {
      throw std::invalid_argument("spike train: times must be finite and non-negative");
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("spike train: times must be strictly increasing");
    }
  }
}

std::optional<double> SpikeTrain::first() const {
  if (times_.empty()) {
    return std::nullopt;
  }
  return times_.front();
}

void SpikeTrain::append(double t) {
  if (!std::isfinite(t) || t < 0.0 || (!times_.empty() && !(t > times_.back()))) {
    throw std::invalid_argument("spike train: appended time " + std::to_string(t) +
                                " breaks ordering");
  }
  times_.push_back(t);
}

bool SpikeTrain::within(double duration) const {
  return times_.empty() || times_.back() <= duration;
}

void SimWindow::validate() const {
  if (!(duration > 0.0) || !(dt > 0.0) || dt > duration) {
    throw std::invalid_argument("sim window: require duration > 0 and 0 < dt <= duration");
  }
  const double ratio = duration / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw std::invalid_argument("sim window: duration must be an integer multiple of dt");
  }
}

std::size_t SimWindow::steps() const {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

double membrane_potential(double t, std::span<const WeightedInput> inputs,
                          const SpikeTrain& own_spikes, const KernelParams& p) {
  double u = 0.0;
  for (const auto& in : inputs) {
    for (double tj : in.train.times()) {
      u += in.weight * psp_kernel(t - tj, p);
    }
  }
  for (double ti : own_spikes.times()) {
    u += reset_kernel(t - ti, p);
  }
  return u;
}

SpikeTrain fire_from_drive(std::span<const double> drive, const KernelParams& p,
                           const SimWindow& window) {
  SpikeTrain out;
  for (std::size_t k = 0; k < drive.size(); ++k) {
    const double t = window.time_at(k);
    double u = drive[k];
    for (double ts : out.times()) {
      u += reset_kernel(t - ts, p);
    }
    if (u >= p.v_t) {
      out.append(t);
    }
  }
  return out;
}

SpikeTrain simulate_neuron(std::span<const WeightedInput> inputs, const KernelParams& p,
                           const SimWindow& window) {
  const std::size_t n = window.steps() + 1;
  std::vector<double> drive(n, 0.0);
  for (const auto& in : inputs) {
    for (double tj : in.train.times()) {
      for (std::size_t k = 0; k < n; ++k) {
        drive[k] += in.weight * psp_kernel(window.time_at(k) - tj, p);
      }
    }
  }
  return fire_from_drive(drive, p, window);
}

}  // namespace filt_snn
