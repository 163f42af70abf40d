#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace sfpme {

/// Time series of the total mass F_u(t) = int u dx together with the
/// accumulated noise integral int_0^t int sigma(u) W(dx, ds).
struct MassProcessRecord {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> noise_integral;
  double initial_mass = 0.0;

  void push(double t, double f_u, double accumulated_noise) {
    times.push_back(t);
    mass.push_back(f_u);
    noise_integral.push_back(accumulated_noise);
  }

  std::size_t size() const noexcept { return times.size(); }
};

/// max_k |F_u[k] - F_u(0) - noise_integral[k]|.
inline double mass_identity_residual(const MassProcessRecord& rec) {
  double worst = 0.0;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    worst = std::max(worst,
                     std::abs(rec.mass[k] - rec.initial_mass - rec.noise_integral[k]));
  }
  return worst;
}

/// Acceptance threshold of the identity, 1e-10 (1 + |F_u(0)|).
inline double mass_identity_tolerance(const MassProcessRecord& rec) {
  return 1e-10 * (1.0 + std::abs(rec.initial_mass));
}

}  // namespace sfpme
