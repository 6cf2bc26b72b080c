#include "upconv/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "upconv/error.hpp"

namespace upconv {
namespace {

// Forward operator A[i][j] = K[i][j] w_j t_i restricted to the support
// columns: maps a spectral density (W/nm) to expected signal counts.
class ScanOperator {
 public:
  ScanOperator(const ResponseKernel& kernel, std::vector<double> dwell,
               std::vector<char> active)
      : kernel_(kernel), dwell_(std::move(dwell)), active_(std::move(active)) {}

  void apply(const std::vector<double>& x, std::vector<double>& out) const {
    const auto& w = kernel_.bin_widths();
    out.assign(kernel_.rows(), 0.0);
    for (std::size_t i = 0; i < kernel_.rows(); ++i) {
      const auto row = kernel_.row(i);
      double acc = 0.0;
      for (std::size_t j = kernel_.row_begin(i); j < kernel_.row_end(i); ++j) {
        if (active_[j]) acc += row[j] * w[j] * x[j];
      }
      out[i] = acc * dwell_[i];
    }
  }

  void apply_transpose(const std::vector<double>& v, std::vector<double>& out) const {
    const auto& w = kernel_.bin_widths();
    out.assign(kernel_.cols(), 0.0);
    for (std::size_t i = 0; i < kernel_.rows(); ++i) {
      const auto row = kernel_.row(i);
      const double scale = v[i] * dwell_[i];
      if (scale == 0.0) continue;
      for (std::size_t j = kernel_.row_begin(i); j < kernel_.row_end(i); ++j) {
        if (active_[j]) out[j] += row[j] * w[j] * scale;
      }
    }
  }

  [[nodiscard]] std::size_t rows() const { return kernel_.rows(); }
  [[nodiscard]] std::size_t cols() const { return kernel_.cols(); }
  [[nodiscard]] bool active(std::size_t j) const { return active_[j] != 0; }

 private:
  const ResponseKernel& kernel_;
  std::vector<double> dwell_;
  std::vector<char> active_;
};

double poisson_deviance(const std::vector<double>& data, const std::vector<double>& mu) {
  double dev = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double m = std::max(mu[i], 1e-300);
    dev += data[i] > 0.0 ? data[i] * std::log(data[i] / m) - (data[i] - m) : m;
  }
  return 2.0 * dev;
}

double log_likelihood(const std::vector<double>& data, const std::vector<double>& mu) {
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double m = std::max(mu[i], 1e-300);
    ll += data[i] * std::log(m) - m;
  }
  return ll;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

}  // namespace

std::string_view to_string(DeconvolutionAlgorithm a) noexcept {
  return a == DeconvolutionAlgorithm::richardson_lucy ? "richardson_lucy" : "tikhonov";
}

std::string_view to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::discrepancy_reached: return "discrepancy_reached";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::stagnation: return "stagnation";
  }
  return "?";
}

DeconvolutionAlgorithm deconvolution_algorithm_from_string(std::string_view name) {
  if (name == "richardson_lucy") return DeconvolutionAlgorithm::richardson_lucy;
  if (name == "tikhonov") return DeconvolutionAlgorithm::tikhonov;
  throw DomainError("unknown deconvolution algorithm '" + std::string(name) + "'");
}

DeconvolutionResult deconvolve(const ScanResult& raw, const ResponseKernel& kernel,
                               const DeconvolutionOptions& options) {
  const std::size_t n = raw.size();
  if (n < 3) throw InputError("deconvolution needs at least 3 scan points");
  if (raw.counts.size() != n || raw.dwell_s.size() != n ||
      (options.use_expected_rates && raw.expected_rate_cps.size() != n)) {
    throw InputError("scan columns differ in length");
  }
  if (kernel.rows() != n) {
    throw InputError("kernel has " + std::to_string(kernel.rows()) + " pump rows but the scan has " +
                     std::to_string(n) + " points");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(kernel.pump_grid()[i] - raw.pump_nm[i]) > 1e-6) {
      throw InputError("kernel pump grid does not match the scan at index " + std::to_string(i));
    }
    if (!(raw.dwell_s[i] > 0.0)) throw InputError("scan dwell must be > 0 s");
  }
  if (options.max_iterations < 1) throw InputError("max_iterations must be >= 1");

  DeconvolutionResult result;
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = options.use_expected_rates ? raw.expected_rate_cps[i] * raw.dwell_s[i]
                                         : static_cast<double>(raw.counts[i]);
  }
  if (options.background_cps) {
    if (!(*options.background_cps >= 0.0)) throw InputError("background must be >= 0 cps");
    result.background_cps = *options.background_cps;
  } else if (options.use_expected_rates) {
    ScanResult expected = raw;
    for (std::size_t i = 0; i < n; ++i) {
      expected.counts[i] = static_cast<std::uint64_t>(std::llround(data[i]));
    }
    result.background_cps = estimate_background(expected);
  } else {
    result.background_cps = estimate_background(raw);
  }
  std::vector<double> pedestal(n);
  for (std::size_t i = 0; i < n; ++i) pedestal[i] = result.background_cps * raw.dwell_s[i];

  // Support columns: the requested band, else the mapped signal range.
  const auto& grid = kernel.signal_grid();
  double lo = grid.front();
  double hi = grid.back();
  if (options.support_nm) {
    lo = options.support_nm->first;
    hi = options.support_nm->second;
  } else if (kernel.mapped_signal_nm.size() == n) {
    const auto [a, b] =
        std::minmax_element(kernel.mapped_signal_nm.begin(), kernel.mapped_signal_nm.end());
    lo = *a;
    hi = *b;
  }
  std::vector<char> active(kernel.cols(), 0);
  for (std::size_t j = 0; j < kernel.cols(); ++j) active[j] = grid[j] >= lo && grid[j] <= hi;
  const ScanOperator op(kernel, raw.dwell_s, active);

  std::vector<double> ones(n, 1.0);
  std::vector<double> sensitivity;
  op.apply_transpose(ones, sensitivity);
  std::size_t active_count = 0;
  for (std::size_t j = 0; j < kernel.cols(); ++j) {
    if (!op.active(j)) continue;
    ++active_count;
    if (!(sensitivity[j] > 0.0)) {
      std::ostringstream os;
      os << "no scan point responds to " << grid[j]
         << " nm; that band cannot be recovered from this scan";
      throw UnrecoverableBandError(os.str());
    }
  }
  if (active_count == 0) throw InputError("support band contains no signal grid points");

  double measured_signal = 0.0;
  for (std::size_t i = 0; i < n; ++i) measured_signal += std::max(data[i] - pedestal[i], 0.0);

  if (options.discrepancy_target) {
    result.discrepancy_target = *options.discrepancy_target;
  } else if (options.auto_discrepancy && !options.use_expected_rates) {
    // Expected deviance of a correct model plus two of its standard deviations.
    const double points = static_cast<double>(n);
    result.discrepancy_target = points + 2.0 * std::sqrt(2.0 * points);
  }
  const bool use_target = result.discrepancy_target > 0.0;

  std::vector<double> x(kernel.cols(), 0.0);
  std::vector<double> mu;

  if (options.algorithm == DeconvolutionAlgorithm::richardson_lucy) {
    // Flat start carrying the measured excess flux.
    double total_sensitivity = 0.0;
    for (std::size_t j = 0; j < kernel.cols(); ++j) {
      if (op.active(j)) total_sensitivity += sensitivity[j];
    }
    const double start = (measured_signal > 0.0 ? measured_signal : 1e-12) / total_sensitivity;
    for (std::size_t j = 0; j < kernel.cols(); ++j) x[j] = op.active(j) ? start : 0.0;

    // The iteration runs on clamped background-subtracted counts; the
    // discrepancy is judged on the raw counts against signal + pedestal.
    std::vector<double> signal(n);
    for (std::size_t i = 0; i < n; ++i) signal[i] = std::max(data[i] - pedestal[i], 0.0);
    std::vector<double> ratio(n);
    std::vector<double> correction;
    std::vector<double> predicted;
    std::vector<double> with_pedestal(n);
    result.stop_reason = StopReason::max_iterations;
    for (int it = 0; it < options.max_iterations; ++it) {
      op.apply(x, predicted);
      if (options.record_trace) result.log_likelihood_trace.push_back(log_likelihood(signal, predicted));
      if (use_target) {
        for (std::size_t i = 0; i < n; ++i) with_pedestal[i] = predicted[i] + pedestal[i];
        if (poisson_deviance(data, with_pedestal) <= result.discrepancy_target) {
          result.stop_reason = StopReason::discrepancy_reached;
          break;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        ratio[i] = predicted[i] > 0.0 ? signal[i] / predicted[i] : 0.0;
      }
      op.apply_transpose(ratio, correction);
      double change = 0.0;
      double norm = 0.0;
      for (std::size_t j = 0; j < kernel.cols(); ++j) {
        if (!op.active(j)) continue;
        const double next = x[j] * correction[j] / sensitivity[j];
        change += std::abs(next - x[j]);
        norm += std::abs(next);
        x[j] = next;
      }
      result.iterations_used = it + 1;
      if (norm == 0.0 || change <= options.stagnation_tolerance * norm) {
        result.stop_reason = StopReason::stagnation;
        break;
      }
    }
  } else {
    // Conjugate gradients on (A^T A + alpha I) x = A^T (d - b).
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = data[i] - pedestal[i];
    double max_col = 0.0;
    {
      // Column norms squared of A.
      std::vector<double> col(kernel.cols(), 0.0);
      const auto& w = kernel.bin_widths();
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = kernel.row(i);
        for (std::size_t j = kernel.row_begin(i); j < kernel.row_end(i); ++j) {
          if (!op.active(j)) continue;
          const double a = row[j] * w[j] * raw.dwell_s[i];
          col[j] += a * a;
        }
      }
      max_col = *std::max_element(col.begin(), col.end());
    }
    const double alpha = options.tikhonov_alpha * max_col;
    const auto normal = [&](const std::vector<double>& v, std::vector<double>& out) {
      std::vector<double> tmp;
      op.apply(v, tmp);
      op.apply_transpose(tmp, out);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = op.active(j) ? out[j] + alpha * v[j] : 0.0;
    };
    std::vector<double> r;
    op.apply_transpose(y, r);
    std::vector<double> p = r;
    std::vector<double> q;
    double rr = dot(r, r);
    const double rr0 = rr;
    result.stop_reason = StopReason::max_iterations;
    for (int it = 0; it < options.max_iterations && rr > 0.0; ++it) {
      normal(p, q);
      const double step = rr / dot(p, q);
      for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] += step * p[j];
        r[j] -= step * q[j];
      }
      const double rr_next = dot(r, r);
      result.iterations_used = it + 1;
      if (rr_next <= options.stagnation_tolerance * options.stagnation_tolerance * rr0) {
        result.stop_reason = StopReason::stagnation;
        break;
      }
      for (std::size_t j = 0; j < x.size(); ++j) p[j] = r[j] + (rr_next / rr) * p[j];
      rr = rr_next;
    }
    for (double& v : x) v = std::max(v, 0.0);
  }

  op.apply(x, mu);
  double predicted_signal = 0.0;
  double resid2 = 0.0;
  double data2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    predicted_signal += mu[i];
    const double y = data[i] - pedestal[i];
    resid2 += (y - mu[i]) * (y - mu[i]);
    data2 += y * y;
    mu[i] += pedestal[i];
  }
  result.residual_norm = data2 > 0.0 ? std::sqrt(resid2 / data2) : std::sqrt(resid2);
  result.discrepancy = poisson_deviance(data, mu);
  result.flux_ratio = measured_signal != 0.0 ? predicted_signal / measured_signal : 0.0;
  result.estimate = Spectrum{grid, std::move(x), SpectrumUnit::watts_per_nm};
  return result;
}

double estimate_background(const ScanResult& raw) {
  const std::size_t n = raw.size();
  if (n == 0 || raw.counts.size() != n || raw.dwell_s.size() != n) {
    throw EstimationError("background estimation needs a non-empty, consistent scan");
  }
  std::vector<double> rates(n);
  for (std::size_t i = 0; i < n; ++i) {
    rates[i] = static_cast<double>(raw.counts[i]) / raw.dwell_s[i];
  }
  std::vector<double> sorted = rates;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t decile = std::max<std::size_t>(1, n / 10);
  double level = median_of({sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(decile)});

  std::vector<double> kept;
  for (int pass = 0; pass < 100; ++pass) {
    kept.clear();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // At least one count of variance, so an all-zero pedestal still clips.
      const double sigma = std::sqrt(std::max(level * raw.dwell_s[i], 1.0)) / raw.dwell_s[i];
      if (std::abs(rates[i] - level) <= 4.0 * sigma) {
        kept.push_back(static_cast<double>(raw.counts[i]));
        sum += rates[i];
      }
    }
    if (kept.size() < 5) {
      throw EstimationError("only " + std::to_string(kept.size()) +
                            " scan points are consistent with a flat background; supply one");
    }
    const double next = sum / static_cast<double>(kept.size());
    if (std::abs(next - level) <= 1e-12 * std::max(1.0, level)) {
      level = next;
      break;
    }
    level = next;
  }

  const double count_mean =
      std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
  if (count_mean > 0.0) {
    double var = 0.0;
    for (double c : kept) var += (c - count_mean) * (c - count_mean);
    var /= static_cast<double>(kept.size() - 1);
    const double fano = var / count_mean;
    const double limit = 1.0 + 5.0 * std::sqrt(2.0 / static_cast<double>(kept.size() - 1));
    if (fano > limit) {
      std::ostringstream os;
      os << "background points are over-dispersed (Fano factor " << fano << " > " << limit
         << "); the scan has no signal-free region, supply a background";
      throw EstimationError(os.str());
    }
  }
  return level;
}

double estimate_background(const ScanResult& /*raw*/, const NoiseModel& model, double pump_mw) {
  return noise_rate(model, pump_mw);
}

}  // namespace upconv
