#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mqn/photonics.hpp"

using namespace mqn;

TEST_CASE("snspd_detect") {
  Rng rng(1);
  DetectorParams quiet{1.0, 0.0, 0.0, 1e12, 1e-3};
  for (int i = 0; i < 1000; ++i) CHECK(snspd_detect(0.0, quiet, 1e-6, rng) == 0);

  // Poisson oracle: mean 100, SD of the sample mean 10/sqrt(1e5)
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += snspd_detect(100.0, quiet, 4e-6, rng);
  CHECK(std::abs(sum / n - 100.0) < 3.0 * 10.0 / std::sqrt(n));
  CHECK(std::abs(sum / n - 100.0) < 1.0);

  // dark counts add dark_rate * gate
  DetectorParams dark{1.0, 1e5, 0.0, 1e12, 1e-3};
  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += snspd_detect(0.5, dark, 1e-5, rng);
  const double expect = 0.5 + 1.0;
  CHECK(std::abs(sum / n - expect) < 3.0 * std::sqrt(expect / n));

  // latching: flux above threshold gives nothing
  DetectorParams latch{1.0, 0.0, 0.0, 1e7, 1e-3};
  for (int i = 0; i < 100; ++i) CHECK(snspd_detect(100.0, latch, 1e-6, rng) == 0);

  Snspd det(latch);
  CHECK(det.detect(0.0, 100.0, 1e-6, rng) == 0);
  CHECK(det.latched_at(0.5e-3));
  CHECK(det.detect(0.5e-3, 1.0, 1e-6, rng) == 0);  // still inside the latch window
  CHECK_FALSE(det.latched_at(2e-3));

  // dead time caps the count
  DetectorParams slow{1.0, 0.0, 1e-6, 1e12, 1e-3};
  for (int i = 0; i < 100; ++i) CHECK(snspd_detect(1000.0, slow, 4e-6, rng) <= 5);
}

TEST_CASE("snspd_detect_tagged") {
  Rng rng(2);
  DetectorParams p{1.0, 0.0, 0.0, 1e12, 1e-3};
  int signal = 0, noise = 0;
  for (int i = 0; i < 20000; ++i) {
    for (const auto& c : snspd_detect_tagged(0, 0.3, 0.1, p, 1.0, 1e-7, rng)) {
      CHECK(c.timestamp >= 1.0);
      CHECK(c.timestamp <= 1.0 + 1e-7);
      (c.origin == ClickOrigin::Signal ? signal : noise)++;
    }
  }
  CHECK(std::abs(signal / 20000.0 - 0.3) < 0.02);
  CHECK(std::abs(noise / 20000.0 - 0.1) < 0.01);
}

TEST_CASE("interfere_fields") {
  auto [a, b] = interfere_fields(50, 50, 0.0, 1.0);
  CHECK(a == doctest::Approx(100.0));
  CHECK(b == doctest::Approx(0.0));
  auto [c, d] = interfere_fields(50, 50, std::numbers::pi / 2, 1.0);
  CHECK(c == doctest::Approx(50.0));
  CHECK(d == doctest::Approx(50.0));
  auto [e, f] = interfere_fields(50, 50, std::numbers::pi / 3, 1.0);
  CHECK(e == doctest::Approx(75.0));
  CHECK(f == doctest::Approx(25.0));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double na = 200 * rng.uniform(), nb = 200 * rng.uniform();
    auto [x, y] = interfere_fields(na, nb, 10 * rng.uniform(), rng.uniform());
    CHECK(x + y == doctest::Approx(na + nb).epsilon(1e-14));
  }
}

TEST_CASE("hom_g2 and invert_g2") {
  CHECK(hom_g2(0.02, 0.04, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(hom_g2(0.03, 0.03, 0.0) == doctest::Approx(1.25));
  CHECK(hom_g2(0.02, 0.04, 0.9) == doctest::Approx(0.7111).epsilon(1e-4));
  CHECK(invert_g2(2.0 / 3.0, 0.02, 0.04) == doctest::Approx(1.0));
  const double eta = invert_g2(0.716, 0.02, 0.04);
  CHECK(eta > 0.86);
  CHECK(eta < 0.94);
  CHECK(std::abs(invert_g2(hom_g2(0.02, 0.04, 0.75), 0.02, 0.04) - 0.75) < 1e-9);
  CHECK_THROWS_AS(invert_g2(0.5, 0.02, 0.04), std::invalid_argument);
  CHECK_THROWS_AS(hom_g2(0.0, 0.0, 1.0), std::invalid_argument);

  // g2 >= 2/3 with equality only at eta = 1 and p_ep = 2 p_ro
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double pro = 0.001 + 0.199 * rng.uniform(), pep = 0.001 + 0.199 * rng.uniform();
    const double g = hom_g2(pro, pep, rng.uniform());
    CHECK(g >= 2.0 / 3.0 - 1e-12);
  }
  CHECK(hom_g2(0.02, 0.05, 1.0) > 2.0 / 3.0 + 1e-6);
  CHECK(hom_g2(0.02, 0.04, 0.99) > 2.0 / 3.0 + 1e-6);
}
