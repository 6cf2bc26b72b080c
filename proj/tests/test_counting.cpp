#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "upconv/counting.hpp"
#include "upconv/error.hpp"

using namespace upconv;

namespace {

struct Moments {
  double mean;
  double variance;
};

Moments moments_of(double mean, int n, std::uint64_t seed) {
  double sum = 0.0;
  double sum2 = 0.0;
  const SeedPath root{seed, {}};
  for (int i = 0; i < n; ++i) {
    const double c = static_cast<double>(sample_counts(mean, 1.0, root.child(i)).counts);
    sum += c;
    sum2 += c * c;
  }
  const double m = sum / n;
  return {m, (sum2 - n * m * m) / (n - 1)};
}

}  // namespace

TEST_CASE("Poisson sampler mean and Fano factor") {
  constexpr int n = 100000;
  for (double mean : {0.3, 5.0, 29.9, 30.0, 60.0, 1000.0, 2.5e5}) {
    CAPTURE(mean);
    const Moments m = moments_of(mean, n, 1234);
    CHECK(std::abs(m.mean - mean) <= 3.0 * std::sqrt(mean / n));
    // Var of the sample variance for Poisson is about mean/n * (1 + 2 mean).
    const double fano_sigma = std::sqrt((1.0 + 2.0 * mean) / (mean * n));
    CHECK(std::abs(m.variance / mean - 1.0) <= 3.0 * fano_sigma);
  }
}

TEST_CASE("zero rate never counts") {
  const SeedPath root{7, {}};
  for (int i = 0; i < 1000; ++i) REQUIRE(sample_counts(0.0, 1.0, root.child(i)).counts == 0);
  CHECK_THROWS_AS((void)sample_counts(-1.0, 1.0, root), DomainError);
  CHECK_THROWS_AS((void)sample_counts(1.0, 0.0, root), DomainError);
}

TEST_CASE("seed paths") {
  const SeedPath root{42, {}};
  CHECK(root.child(3).derive() == SeedPath{42, {3}}.derive());
  CHECK(root.child(3).derive() != root.child(4).derive());
  CHECK(root.child(1).child(2).derive() != root.child(2).child(1).derive());
  CHECK(SeedPath{43, {}}.child(3).derive() != root.child(3).derive());
  // Drawing in a different order gives the same per-point values.
  std::vector<std::uint64_t> forward;
  std::vector<std::uint64_t> backward(100);
  for (int i = 0; i < 100; ++i) forward.push_back(sample_counts(50.0, 1.0, root.child(i)).counts);
  for (int i = 99; i >= 0; --i) backward[i] = sample_counts(50.0, 1.0, root.child(i)).counts;
  CHECK(forward == backward);
}

TEST_CASE("photon rates") {
  CHECK(photon_rate(dbm_to_watts(-98.9), Wavelength(1550.0)) ==
        doctest::Approx(1.005206e6).epsilon(1e-6));
  CHECK(photon_rate(dbm_to_watts(-98.9), Wavelength(1550.0)) ==
        doctest::Approx(dbm_to_watts(-98.9) / oracle::photon_energy(1550.0)).epsilon(1e-12));
  CHECK(photon_rate(dbm_to_watts(-135.0), Wavelength(1550.0)) == doctest::Approx(246.75).epsilon(1e-4));
  CHECK(photon_rate(0.0, Wavelength(1550.0)) == 0.0);
  CHECK_THROWS_AS((void)photon_rate(-1e-15, Wavelength(1550.0)), DomainError);
  oracle::Lcg rng(3);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform(0.0, 1e-9);
    const double k = rng.uniform(0.0, 10.0);
    REQUIRE(photon_rate(k * p, Wavelength(1550.0)) ==
            doctest::Approx(k * photon_rate(p, Wavelength(1550.0))).epsilon(1e-14));
  }
}

namespace {

struct Setup {
  Instrument ins = fixture::instrument();
  ScanPlan plan = fixture::short_plan(1940.0, 1960.0);
  std::vector<double> grid = default_signal_grid(plan, ins);
  ResponseKernel kernel = build_kernel(ins, 0.2, plan, grid);
};

}  // namespace

TEST_CASE("detectability of the reference inputs") {
  const Setup s;
  ModeComb comb;
  comb.total_power_w = dbm_to_watts(-98.9);
  const ScanResult bright = forward_scan(synthesize_mode_comb(comb, s.grid), s.kernel, 60.0, s.plan);
  const DetectionReport b = detectability(bright, 1550.0, {0.161});
  CHECK(b.detected);
  CHECK(b.significance > 100.0);

  const Spectrum line = synthesize_line(1550.0, 0.02, dbm_to_watts(-135.0), s.grid);
  int detected = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ScanPlan plan = s.plan;
    plan.seed = seed;
    const DetectionReport r = detectability(forward_scan(line, s.kernel, 60.0, plan), 1550.0,
                                            {0.161, 5.0, 2.0, 60.0});
    detected += r.detected ? 1 : 0;
  }
  CHECK(detected >= 18);

  const Spectrum zero{s.grid, std::vector<double>(s.grid.size(), 0.0)};
  int false_alarms = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ScanPlan plan = s.plan;
    plan.seed = seed;
    false_alarms +=
        detectability(forward_scan(zero, s.kernel, 60.0, plan), 1550.0, {0.161}).detected ? 1 : 0;
  }
  CHECK(false_alarms == 0);
}

TEST_CASE("detectability of inconsistent scans") {
  ScanResult empty;
  const DetectionReport r = detectability(empty, 1550.0);
  CHECK_FALSE(r.detected);
  CHECK_FALSE(r.note.empty());
}
