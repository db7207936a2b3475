#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "bohmsim/fft.hpp"
#include "bohmsim/grid.hpp"
#include "bohmsim/rng.hpp"
#include "bohmsim/stats.hpp"

using namespace bohmsim;

namespace {

// Brute-force DFT reference.
std::vector<Complex> dft(const std::vector<Complex>& input, bool inverse) {
  const std::size_t n = input.size();
  std::vector<Complex> out(n, {0.0, 0.0});
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sign * 2.0 * M_PI * static_cast<double>(k * j) / static_cast<double>(n);
      out[k] += input[j] * Complex{std::cos(ang), std::sin(ang)};
    }
    if (inverse) out[k] /= static_cast<double>(n);
  }
  return out;
}

}  // namespace

TEST_CASE("fft matches brute-force dft for power-of-two and general sizes") {
  RandomStream rng(42, 0);
  for (std::size_t n : {std::size_t{16}, std::size_t{37}, std::size_t{100}, std::size_t{128},
                        std::size_t{255}, std::size_t{1024}}) {
    std::vector<Complex> input(n);
    for (auto& x : input) x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const auto want = dft(input, false);
    auto got = fft_copy(input, false);
    double err = 0.0;
    for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(got[k] - want[k]));
    CHECK(err < 1e-9 * std::sqrt(static_cast<double>(n)));

    auto back = fft_copy(got, true);
    double rt = 0.0;
    for (std::size_t k = 0; k < n; ++k) rt = std::max(rt, std::abs(back[k] - input[k]));
    CHECK(rt < 1e-10);
  }
}

TEST_CASE("chi-square survival function: dof 2 closed form and monotonicity") {
  for (double x : {0.5, 1.0, 3.0, 10.0})
    CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-0.5 * x)).epsilon(1e-10));
  CHECK(chi_square_sf(0.0, 5) == 1.0);
  CHECK(chi_square_sf(100.0, 5) < 1e-15);
  CHECK(chi_square_sf(4.0, 4) > chi_square_sf(5.0, 4));
}

TEST_CASE("gamma_p against erf identity") {
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0})
    CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
}

TEST_CASE("chi_square_test accepts matching counts and rejects gross mismatch") {
  std::vector<double> expected(20, 50.0);
  std::vector<double> observed = expected;
  CHECK(chi_square_test(observed, expected) == doctest::Approx(1.0));
  observed[3] = 200.0;
  observed[4] = 0.0;
  CHECK(chi_square_test(observed, expected) < 1e-6);
}

TEST_CASE("ks statistic small for ideal uniform sample") {
  const std::size_t n = 2000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = (static_cast<double>(i) + 0.5) / n;
  const double d = ks_statistic(xs, [](double x) { return x; });
  CHECK(d <= 0.5 / n + 1e-12);
}

TEST_CASE("normal cdf basics") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-6));
}

TEST_CASE("random stream: determinism, uniformity, independence across streams") {
  RandomStream a(7, 3), b(7, 3), c(7, 4);
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }

  RandomStream u(2024, 0);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = u.uniform();
  const double d = ks_statistic(xs, [](double x) { return x; });
  CHECK(d < 1.63 / std::sqrt(20000.0));  // alpha = 0.01

  RandomStream g(2024, 1);
  std::vector<double> ns(20000);
  for (auto& x : ns) x = g.normal();
  CHECK(std::abs(mean(ns)) < 3.0 / std::sqrt(20000.0));
  CHECK(variance(ns) == doctest::Approx(1.0).epsilon(0.05));
}
