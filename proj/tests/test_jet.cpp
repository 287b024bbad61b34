#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lagan/jet.hpp"
#include "lagan/rng.hpp"

using namespace lagan;

TEST_CASE("pixel centers span the grid") {
  auto [e0, p0] = pixel_center(12, 12);
  REQUIRE(e0 == 0.0);
  REQUIRE(p0 == 0.0);
  auto [e1, p1] = pixel_center(0, 0);
  REQUIRE(e1 == Catch::Approx(-1.2).margin(1e-15));
  REQUIRE(p1 == Catch::Approx(-1.2).margin(1e-15));
  auto [e2, p2] = pixel_center(24, 24);
  REQUIRE(e2 == Catch::Approx(1.2).margin(1e-15));
  REQUIRE(p2 == Catch::Approx(1.2).margin(1e-15));
  REQUIRE_THROWS_AS(pixel_center(25, 0), Error);
  REQUIRE_THROWS_AS(pixel_center(0, -1), Error);
}

TEST_CASE("pixel index round-trips through center coordinates") {
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      auto [eta, phi] = pixel_center(i, j);
      REQUIRE(pixel_bin(eta) == i);
      REQUIRE(pixel_bin(phi) == j);
    }
  REQUIRE(pixel_bin(-1.3) == -1);
  REQUIRE(pixel_bin(1.3) == -1);
}

TEST_CASE("occupancy counts pixels above threshold") {
  JetImage img;
  REQUIRE(occupancy(img, 0.0) == 0.0);
  img.at(3, 4) = 2.0;
  REQUIRE(occupancy(img, 0.0) == Catch::Approx(1.0 / 625.0));
  REQUIRE(occupancy(img, 2.0) == 0.0);  // strictly above
  REQUIRE_THROWS_AS(occupancy(img, -1.0), Error);
}

TEST_CASE("phi wrapping stays in (-pi, pi]") {
  REQUIRE(wrap_phi(kPi) == Catch::Approx(kPi));
  REQUIRE(wrap_phi(-kPi) == Catch::Approx(kPi));
  REQUIRE(wrap_phi(3.1 + 0.2) == Catch::Approx(3.3 - 2.0 * kPi));
  SplitRng rng(17);
  for (int k = 0; k < 1000; ++k) {
    double w = wrap_phi(rng.uniform(-50.0, 50.0));
    REQUIRE(w > -kPi);
    REQUIRE(w <= kPi);
  }
}

TEST_CASE("constituent four-vector is massless") {
  SplitRng rng(19);
  for (int k = 0; k < 100; ++k) {
    Constituent c{rng.uniform(1.0, 300.0), rng.uniform(-1.2, 1.2), rng.uniform(-kPi, kPi)};
    double e = c.energy();
    double p2 = c.px() * c.px() + c.py() * c.py() + c.pz() * c.pz();
    REQUIRE(e * e == Catch::Approx(p2).epsilon(1e-12));

    Constituent back = Constituent::from_momentum(c.px(), c.py(), c.pz());
    REQUIRE(back.pt == Catch::Approx(c.pt).epsilon(1e-12));
    REQUIRE(back.eta == Catch::Approx(c.eta).margin(1e-12));
    REQUIRE(back.phi == Catch::Approx(c.phi).margin(1e-12));
  }
}
