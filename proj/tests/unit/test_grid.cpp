#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sfpme/fft.hpp"
#include "sfpme/grid.hpp"

using namespace sfpme;
using Catch::Approx;
constexpr double kPi = std::numbers::pi;

TEST_CASE("lattice grid rejects invalid shapes", "[grid]") {
  CHECK_THROWS_AS(LatticeGrid(3, 64, 1.0), DomainError);
  CHECK_THROWS_AS(LatticeGrid(1, 4, 1.0), DomainError);
  CHECK_THROWS_AS(LatticeGrid(1, 48, 1.0), DomainError);
  CHECK_THROWS_AS(LatticeGrid(1, 64, 0.0), DomainError);
  CHECK_THROWS_AS(LatticeGrid(1, 64, -1.0), DomainError);
  CHECK_NOTHROW(LatticeGrid(2, 8, 2.0 * kPi));
}

TEST_CASE("spacing times n reproduces the side length", "[grid]") {
  for (std::size_t n : {8u, 64u, 256u, 1024u}) {
    for (double L : {1.0, 2.0 * kPi, 20.0, 2.0 * kPi * 10.0}) {
      const LatticeGrid g(1, n, L);
      CHECK(g.spacing() * static_cast<double>(n) == L);
    }
  }
}

TEST_CASE("coordinates and wavenumbers follow the FFT layout", "[grid]") {
  const LatticeGrid g(1, 8, 2.0 * kPi);
  CHECK(g.coordinate(0) == -kPi);
  CHECK(g.coordinate(4) == Approx(0.0).margin(1e-15));
  const long expected[] = {0, 1, 2, 3, -4, -3, -2, -1};
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(g.wave_index(j) == expected[j]);
    CHECK(g.wavenumber(j) == Approx(static_cast<double>(expected[j])));
  }
  const LatticeGrid g2(2, 8, 4.0 * kPi);
  // row 1, column 7: xi = (0.5, -0.5)
  CHECK(g2.wavenumber_norm(1 * 8 + 7) == Approx(std::sqrt(0.5)));
  CHECK(g2.size() == 64);
  CHECK(g2.cell_volume() == Approx(g2.spacing() * g2.spacing()));
  CHECK(g2.volume() == Approx(16.0 * kPi * kPi));
}

TEST_CASE("field construction checks length and time tag", "[grid]") {
  const LatticeGrid g(1, 16, 1.0);
  CHECK_THROWS_AS(Field(g, std::vector<double>(15, 0.0)), ContractError);
  CHECK_THROWS_AS(Field(g, std::vector<double>(16, 0.0), -1.0), DomainError);
  Field f(g, std::vector<double>(16, 0.0));
  f[3] = std::nan("");
  CHECK_FALSE(all_finite(f.values));
  CHECK_THROWS_AS(require_finite(f, "test"), InputError);
}

TEST_CASE("lattice integrals are Riemann sums", "[grid]") {
  const LatticeGrid g(1, 64, 2.0 * kPi);
  const Field s = Field::sample(g, [](double x, double) { return std::sin(x); });
  const Field one = Field::sample(g, [](double, double) { return 1.0; });
  CHECK(integral(one) == Approx(2.0 * kPi));
  CHECK(integral(s) == Approx(0.0).margin(1e-14));
  CHECK(l2_norm_sq(s) == Approx(kPi).epsilon(1e-13));
  CHECK(l1_norm(s) == Approx(4.0).epsilon(1e-2));
  CHECK(inner(s, one) == Approx(0.0).margin(1e-14));
  CHECK(max_abs(s) == Approx(1.0));
  const LatticeGrid other(1, 32, 2.0 * kPi);
  CHECK_THROWS_AS(inner(s, Field(other)), ContractError);
}

TEST_CASE("forward transform matches the brute-force DFT", "[fft]") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  SECTION("one dimension") {
    const LatticeGrid g(1, 64, 3.0);
    Field f(g);
    for (auto& v : f.values) v = nd(rng);
    const auto fast = forward(f);
    const auto slow = oracle::dft_1d(f.values);
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(std::abs(fast[k] - slow[k]) < 1e-11);
    }
  }
  SECTION("two dimensions") {
    const LatticeGrid g(2, 16, 3.0);
    Field f(g);
    for (auto& v : f.values) v = nd(rng);
    const auto fast = forward(f);
    const auto slow = oracle::dft_2d(f.values, 16);
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(std::abs(fast[k] - slow[k]) < 1e-11);
    }
  }
}

TEST_CASE("inverse transform undoes the forward transform", "[fft]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int d : {1, 2}) {
    const LatticeGrid g(d, 32, 5.0);
    Field f(g, 0.25);
    for (auto& v : f.values) v = ud(rng);
    const Field back = inverse_real(g, forward(f), f.time);
    CHECK(max_abs_diff(f, back) < 1e-14);
    CHECK(back.time == 0.25);
  }
}
