#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "sfpme/grid.hpp"

namespace sfpme {

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (d, n, direction) and never freed.
// FFTW_UNALIGNED keeps the executed codelets independent of buffer alignment
// so results are bit-identical for every caller.
inline fftw_plan cached_plan(int dim, std::size_t n, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans;
  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(dim, n, sign);
  if (auto it = plans.find(key); it != plans.end()) return it->second;

  const std::size_t total = dim == 1 ? n : n * n;
  std::vector<std::complex<double>> in(total), out(total);
  auto* pin = reinterpret_cast<fftw_complex*>(in.data());
  auto* pout = reinterpret_cast<fftw_complex*>(out.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan =
      dim == 1 ? fftw_plan_dft_1d(static_cast<int>(n), pin, pout, sign, flags)
               : fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), pin,
                                  pout, sign, flags);
  plans.emplace(key, plan);
  return plan;
}

inline void execute(const LatticeGrid& g, const Spectrum& in, Spectrum& out,
                    int sign) {
  fftw_plan plan = cached_plan(g.dim(), g.points_per_dim(), sign);
  // fftw_execute_dft does not write to `in` for out-of-place plans.
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(
                       const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Forward DFT with kernel e^{-i xi x}, unnormalized: F_k = sum_j f_j e^{-2 pi i jk/n}.
inline Spectrum forward(const Field& f) {
  Spectrum in(f.size()), out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) in[i] = f.values[i];
  detail::execute(f.grid, in, out, FFTW_FORWARD);
  return out;
}

/// Inverse DFT carrying the 1/n^d factor; returns the real part.
inline Field inverse_real(const LatticeGrid& g, const Spectrum& spec,
                          double time = 0.0) {
  if (spec.size() != g.size()) throw ContractError("spectrum size mismatch");
  Spectrum out(spec.size());
  detail::execute(g, spec, out, FFTW_BACKWARD);
  Field f(g, time);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = out[i].real() * scale;
  return f;
}

/// Applies a real radial multiplier m(|xi|) in Fourier space.
template <class Multiplier>
Field apply_multiplier(const Field& f, Multiplier&& m) {
  Spectrum s = forward(f);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= m(i);
  return inverse_real(f.grid, s, f.time);
}

}  // namespace sfpme
