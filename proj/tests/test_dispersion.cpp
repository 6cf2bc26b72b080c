#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "upconv/dispersion.hpp"
#include "upconv/error.hpp"

using namespace upconv;

namespace {

WaveguideSpec single_anchor() {
  const TuningAnchor a{1950.0, 1550.0};
  return calibrate_operating_point(WaveguideSpec{}, std::span(&a, 1));
}

WaveguideSpec three_anchor() {
  const TuningAnchor a[] = {{1920.0, 1570.9}, {1950.0, 1550.0}, {1980.0, 1532.9}};
  return calibrate_operating_point(WaveguideSpec{}, a);
}

}  // namespace

TEST_CASE("wavelength bounds and frequency round trip") {
  CHECK_THROWS_AS(Wavelength(50.0), DomainError);
  CHECK_THROWS_AS(Wavelength(25000.0), DomainError);
  for (double nm : {400.0, 863.5714, 1550.0, 1950.0, 4500.0}) {
    const Wavelength w(nm);
    const Wavelength back = Wavelength::from_frequency(w.frequency_hz());
    CHECK(back.nm() == doctest::Approx(nm).epsilon(1e-12));
  }
}

TEST_CASE("refractive index matches direct Sellmeier evaluation") {
  const auto medium = SellmeierCoefficients::congruent_lithium_niobate();
  for (double nm : {500.0, 863.571, 1550.0, 1950.0, 3000.0}) {
    for (double t : {20.0, 56.0, 120.0}) {
      CHECK(refractive_index(Wavelength(nm), t, medium) ==
            doctest::Approx(oracle::ln_index(nm, t)).epsilon(1e-13));
    }
  }
  CHECK(refractive_index(Wavelength(1550.0), 56.0, medium) == doctest::Approx(2.13910).epsilon(5e-6));
}

TEST_CASE("refractive index correction adds c0 per micrometre") {
  const auto medium = SellmeierCoefficients::congruent_lithium_niobate();
  const DispersionCorrection corr{{0.0125}};
  for (double nm : {900.0, 1550.0, 1950.0}) {
    const double bare = refractive_index(Wavelength(nm), 56.0, medium);
    CHECK(refractive_index(Wavelength(nm), 56.0, medium, corr) - bare ==
          doctest::Approx(0.0125 * nm * 1e-3).epsilon(1e-12));
  }
}

TEST_CASE("refractive index outside the validity window names the window") {
  const auto medium = SellmeierCoefficients::congruent_lithium_niobate();
  try {
    (void)refractive_index(Wavelength(300.0), 56.0, medium);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("400") != std::string::npos);
    CHECK(msg.find("5000") != std::string::npos);
  }
}

TEST_CASE("normal dispersion from 800 to 2000 nm") {
  const auto medium = SellmeierCoefficients::congruent_lithium_niobate();
  for (double nm = 800.0; nm <= 2000.0; nm += 5.0) {
    const double d = refractive_index(Wavelength(nm + 0.01), 56.0, medium) -
                     refractive_index(Wavelength(nm - 0.01), 56.0, medium);
    REQUIRE(d < 0.0);
  }
}

TEST_CASE("energy conservation") {
  CHECK(sfg_wavelength(Wavelength(1550.0), Wavelength(1950.0)).nm() ==
        doctest::Approx(1550.0 * 1950.0 / 3500.0).epsilon(1e-14));
  CHECK(sfg_wavelength(Wavelength(1550.0), Wavelength(1950.0)).nm() ==
        doctest::Approx(863.571).epsilon(1e-6));
  CHECK(sfg_wavelength(Wavelength(1300.0), Wavelength(1300.0)).nm() ==
        doctest::Approx(650.0).epsilon(1e-15));
  CHECK(sfg_wavelength(Wavelength(1532.9), Wavelength(1980.0)).nm() ==
        doctest::Approx(864.0).epsilon(1e-5));
  oracle::Lcg rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform(400.0, 5000.0);
    const double p = rng.uniform(400.0, 5000.0);
    const double out = sfg_wavelength(Wavelength(s), Wavelength(p)).nm();
    const double residual = (1.0 / out - 1.0 / s - 1.0 / p) * out;
    REQUIRE(std::abs(residual) < 1e-12);
  }
}

TEST_CASE("sinc squared lineshape") {
  CHECK(sinc_squared(0.0) == 1.0);
  for (int m = 1; m <= 6; ++m) {
    CHECK(sinc_squared(m * oracle::pi) < 1e-12);
    CHECK(sinc_squared(-m * oracle::pi) < 1e-12);
  }
  oracle::Lcg rng(3);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-20.0, 20.0);
    CHECK(sinc_squared(x) == sinc_squared(-x));
    CHECK(sinc_squared(x) == doctest::Approx(std::pow(std::sin(x) / x, 2)).epsilon(1e-12));
  }
  CHECK(sinc_squared(1e-9) == doctest::Approx(1.0));
}

TEST_CASE("qpm mismatch at the calibrated operating point") {
  const auto wg = single_anchor();
  const auto st = qpm_mismatch(Wavelength(1550.0), Wavelength(1950.0), wg);
  CHECK(std::abs(st.delta_k_rad_per_um) < 1e-9);
  CHECK(st.efficiency_factor == doctest::Approx(1.0).epsilon(1e-9));

  // Sign change through the root, located independently by bisection.
  const auto dk = [&](double s) {
    return qpm_mismatch(Wavelength(s), Wavelength(1950.0), wg).delta_k_rad_per_um;
  };
  for (double d : {0.01, 0.1, 1.0}) {
    CHECK(dk(1550.0 - d) * dk(1550.0 + d) < 0.0);
  }
  const double root = oracle::bisect(dk, 1540.0, 1560.0);
  CHECK(root == doctest::Approx(1550.0).epsilon(1e-9));
}

TEST_CASE("efficiency factor vanishes at the first sinc null") {
  const auto wg = single_anchor();
  const auto dk = [&](double s) {
    return std::abs(qpm_mismatch(Wavelength(s), Wavelength(1950.0), wg).delta_k_rad_per_um) *
               wg.length_um() / 2.0 - oracle::pi;
  };
  const double null = oracle::bisect(dk, 1550.0, 1552.0);
  CHECK(qpm_mismatch(Wavelength(null), Wavelength(1950.0), wg).efficiency_factor < 1e-12);
}

TEST_CASE("tuning map with single-anchor calibration") {
  const auto wg = single_anchor();
  CHECK(phase_matched_signal(Wavelength(1950.0), wg).nm() == doctest::Approx(1550.0).epsilon(1e-9));
  // Anti-correlated: longer pump, shorter signal. The short-pump end lands
  // within 2 nm of 1570.9 nm; the long-pump end is checked (and reported)
  // by the acceptance suite.
  CHECK(std::abs(phase_matched_signal(Wavelength(1920.0), wg).nm() - 1570.9) < 2.0);
  double previous = phase_matched_signal(Wavelength(1920.0), wg).nm();
  for (double p = 1920.1; p <= 1980.0 + 1e-9; p += 0.1) {
    const double s = phase_matched_signal(Wavelength(p), wg).nm();
    REQUIRE(s < previous);
    previous = s;
    const auto st = qpm_mismatch(Wavelength(s), Wavelength(p), wg);
    REQUIRE(std::abs(st.delta_k_rad_per_um) < 1e-9);
  }
}

TEST_CASE("tuning map inverse consistency") {
  const auto wg = single_anchor();
  for (double p = 1920.0; p <= 1980.0; p += 7.5) {
    const Wavelength s = phase_matched_signal(Wavelength(p), wg);
    CHECK(std::abs(phase_matched_pump(s, wg).nm() - p) < 0.01);
  }
}

TEST_CASE("no phase match reports the searched interval") {
  WaveguideSpec wg = single_anchor();
  wg.qpm_period_um = 40.0;
  try {
    (void)phase_matched_signal(Wavelength(1950.0), wg);
    FAIL("expected TuningError");
  } catch (const TuningError& e) {
    CHECK(std::string(e.what()).find("nm") != std::string::npos);
  }
}

TEST_CASE("acceptance bandwidth") {
  const auto wg = single_anchor();
  const auto band = acceptance_bandwidth(wg, Wavelength(1950.0));
  CHECK(band.signal_fwhm_nm > 0.0);
  CHECK(band.sfg_fwhm_nm > 0.0);
  CHECK(band.signal_center_nm == doctest::Approx(1550.0));
  // Against the grating's 0.05 nm: "ten times" within a factor 2, signal band.
  const double ratio = band.signal_fwhm_nm / 0.05;
  CHECK(ratio > 5.0);
  CHECK(ratio < 20.0);
  // At fixed pump the SFG width is the signal width scaled by (l3/ls)^2.
  const double scale = std::pow(863.5714285714286 / 1550.0, 2);
  CHECK(band.sfg_fwhm_nm == doctest::Approx(band.signal_fwhm_nm * scale).epsilon(1e-3));

  // Independent half-max search on the sinc^2 lineshape.
  const auto half = [&](double s) {
    return qpm_mismatch(Wavelength(s), Wavelength(1950.0), wg).efficiency_factor - 0.5;
  };
  const double hi = oracle::bisect(half, 1550.0, 1551.0);
  const double lo = oracle::bisect(half, 1549.0, 1550.0);
  CHECK(band.signal_fwhm_nm == doctest::Approx(hi - lo).epsilon(1e-6));

  WaveguideSpec longer = wg;
  longer.length_mm *= 2.0;
  const auto band2 = acceptance_bandwidth(longer, Wavelength(1950.0));
  CHECK(band2.signal_fwhm_nm / band.signal_fwhm_nm == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("calibration anchors are exact") {
  const auto wg1 = single_anchor();
  CHECK(wg1.correction.coefficients.size() == 1);

  const auto wg3 = three_anchor();
  CHECK(wg3.correction.coefficients.size() == 3);
  for (auto [p, s] : {std::pair{1920.0, 1570.9}, {1950.0, 1550.0}, {1980.0, 1532.9}}) {
    CHECK(std::abs(qpm_mismatch(Wavelength(s), Wavelength(p), wg3).delta_k_rad_per_um) < 1e-9);
    CHECK(phase_matched_signal(Wavelength(p), wg3).nm() == doctest::Approx(s).epsilon(1e-8));
  }
}

TEST_CASE("recalibration is a fixed point") {
  const TuningAnchor a[] = {{1920.0, 1570.9}, {1950.0, 1550.0}, {1980.0, 1532.9}};
  const auto once = calibrate_operating_point(WaveguideSpec{}, a);
  const auto twice = calibrate_operating_point(once, a);
  REQUIRE(once.correction.coefficients.size() == twice.correction.coefficients.size());
  for (std::size_t k = 0; k < once.correction.coefficients.size(); ++k) {
    CHECK(twice.correction.coefficients[k] ==
          doctest::Approx(once.correction.coefficients[k]).epsilon(1e-12));
  }
}

TEST_CASE("calibration rejects duplicate anchors") {
  const TuningAnchor a[] = {{1950.0, 1550.0}, {1950.0, 1551.0}};
  CHECK_THROWS_AS((void)calibrate_operating_point(WaveguideSpec{}, a), CalibrationError);
  CHECK_THROWS_AS((void)calibrate_operating_point(WaveguideSpec{}, std::span<const TuningAnchor>{}),
                  CalibrationError);
}

TEST_CASE("design period at the operating point") {
  const auto wg = single_anchor();
  const double period = design_qpm_period(Wavelength(1550.0), Wavelength(1950.0), 56.0, wg);
  CHECK(std::abs(period - 19.6) < 0.05);
  WaveguideSpec designed = wg;
  designed.qpm_period_um = period;
  CHECK(std::abs(qpm_mismatch(Wavelength(1550.0), Wavelength(1950.0), designed).delta_k_rad_per_um) <
        1e-9);
  // A different point gets its own period, and that period phase matches it.
  const double other = design_qpm_period(Wavelength(1310.0), Wavelength(1950.0), 56.0, wg);
  designed.qpm_period_um = other;
  CHECK(std::abs(qpm_mismatch(Wavelength(1310.0), Wavelength(1950.0), designed).delta_k_rad_per_um) <
        1e-9);
}

TEST_CASE("design fails without a period in range") {
  WaveguideSpec flat;
  flat.medium.a = {4.6, 0.0, 0.1, 0.0, 11.0, 0.0};
  flat.medium.b = {0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS((void)design_qpm_period(Wavelength(1550.0), Wavelength(1950.0), 56.0, flat),
                  DesignError);
}
