#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "upconv/components.hpp"
#include "upconv/error.hpp"

using namespace upconv;

namespace {

FilterElement random_filter(oracle::Lcg& rng) {
  const double center = rng.uniform(500.0, 2000.0);
  const double peak = rng.uniform(0.0, 1.0);
  switch (rng.integer(0, 4)) {
    case 0: return FilterElement::short_pass("sp", center, peak, rng.uniform(0.01, 20.0));
    case 1: return FilterElement::band_pass("bp", center, rng.uniform(0.01, 50.0), peak);
    case 2:
      return FilterElement::band_pass("bp", center, rng.uniform(0.01, 50.0), peak,
                                      Lineshape::top_hat);
    case 3: return FilterElement::grating("g", center, rng.uniform(0.01, 5.0), peak);
    default: return FilterElement::loss("loss", rng.uniform(0.0, 30.0));
  }
}

}  // namespace

TEST_CASE("grating peak and half maximum") {
  const VbgState vbg = VbgState::nominal(863.5714);
  CHECK(transmission(vbg, Wavelength(863.5714)) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(transmission(vbg, Wavelength(863.5714 + 0.025)) == doctest::Approx(0.475).epsilon(1e-6));
  CHECK(transmission(vbg, Wavelength(863.5714 - 0.025)) == doctest::Approx(0.475).epsilon(1e-6));
}

TEST_CASE("top-hat grating") {
  const auto g = FilterElement::grating("g", 860.0, 0.5, 0.9, Lineshape::top_hat);
  CHECK(transmission(g, Wavelength(860.1)) == 0.9);
  CHECK(transmission(g, Wavelength(860.25)) == doctest::Approx(0.45));
  CHECK(transmission(g, Wavelength(859.75)) == doctest::Approx(0.45));
  CHECK(transmission(g, Wavelength(860.3)) == 0.0);
}

TEST_CASE("short-pass filter blocks pump and its second harmonic") {
  const auto spf = FilterElement::short_pass("spf945", 945.0);
  CHECK(transmission(spf, Wavelength(1950.0)) < 1e-6);
  CHECK(transmission(spf, Wavelength(975.0)) < 1e-6);
  CHECK(transmission(spf, Wavelength(863.57)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(transmission(spf, Wavelength(945.0)) == doctest::Approx(0.5));
  const std::vector<FilterElement> chain{FilterElement::band_pass("bpf", 857.0, 20.0), spf};
  CHECK(chain_transmission(chain, Wavelength(975.0)) < 1e-6);
}

TEST_CASE("grating tuning range") {
  const VbgState vbg = VbgState::nominal(863.0);
  CHECK(vbg.tuned_to(870.0).center_nm() == 870.0);
  CHECK(vbg.center_nm() == 863.0);  // retuning returns a new value
  CHECK_THROWS_AS((void)vbg.tuned_to(849.0), RangeError);
  CHECK_THROWS_AS((void)vbg.tuned_to(881.0), RangeError);
  CHECK_THROWS_AS(VbgState(FilterElement::band_pass("bp", 860.0, 1.0), 860.0), DomainError);
}

TEST_CASE("filter validation") {
  CHECK_THROWS_AS((void)FilterElement::band_pass("bp", 860.0, 0.0), DomainError);
  CHECK_THROWS_AS((void)FilterElement::band_pass("bp", 860.0, 1.0, 1.5), DomainError);
  CHECK_THROWS_AS((void)FilterElement::short_pass("sp", 945.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS((void)FilterElement::loss("l", -1.0), DomainError);
  CHECK(FilterElement::loss("l", 3.0).peak == doctest::Approx(std::pow(10.0, -0.3)));
  CHECK(filter_kind_from_string("reflective_grating") == FilterKind::reflective_grating);
  CHECK_THROWS_AS((void)filter_kind_from_string("notch"), DomainError);
  CHECK(lineshape_from_string(to_string(Lineshape::top_hat)) == Lineshape::top_hat);
}

TEST_CASE("detector defaults") {
  const ApdSpec apd;
  CHECK(apd.dark_rate_cps == 25.0);
  CHECK(apd.dead_time_s == 0.0);
  CHECK(apd.afterpulse_probability == 0.0);
  ApdSpec bad;
  bad.quantum_efficiency = 1.2;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("chain transmission composition") {
  CHECK_THROWS_AS((void)chain_transmission({}, Wavelength(860.0)), InputError);
  oracle::Lcg rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<FilterElement> a;
    std::vector<FilterElement> b;
    for (int i = rng.integer(1, 4); i > 0; --i) a.push_back(random_filter(rng));
    for (int i = rng.integer(1, 4); i > 0; --i) b.push_back(random_filter(rng));
    const Wavelength w(rng.uniform(400.0, 2500.0));
    std::vector<FilterElement> joined = a;
    joined.insert(joined.end(), b.begin(), b.end());
    REQUIRE(chain_transmission(joined, w) ==
            doctest::Approx(chain_transmission(a, w) * chain_transmission(b, w)).epsilon(1e-15));
    std::vector<FilterElement> reversed(joined.rbegin(), joined.rend());
    REQUIRE(std::abs(chain_transmission(reversed, w) - chain_transmission(joined, w)) <= 1e-15);
    REQUIRE(chain_transmission(std::span(a.data(), 1), w) == transmission(a[0], w));
  }
}

TEST_CASE("transmissions stay in [0, 1] under fuzzing") {
  oracle::Lcg rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const FilterElement f = random_filter(rng);
    for (int k = 0; k < 20; ++k) {
      const double t = transmission(f, Wavelength(rng.uniform(101.0, 19999.0)));
      REQUIRE(t >= 0.0);
      REQUIRE(t <= 1.0);
    }
    // Band shapes are symmetric about the center.
    if (f.kind == FilterKind::band_pass && f.lineshape == Lineshape::gaussian) {
      const double d = rng.uniform(0.0, 3.0 * f.fwhm_nm);
      REQUIRE(std::abs(transmission(f, Wavelength(f.center_nm + d)) -
                       transmission(f, Wavelength(f.center_nm - d))) <= 1e-12);
    }
  }
}
