#include "cdse/dsp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "cdse/error.hpp"

namespace cdse::dsp {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(int n) : n_(n), plan_(nullptr), inverse_plan_(nullptr) {
  require(n > 0, ErrorCode::kMalformed, "FFT size must be positive");
  std::vector<double> in(static_cast<std::size_t>(n));
  std::vector<fftw_complex> out(static_cast<std::size_t>(bins()));
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, out.data(), in.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void RealFft::forward(std::span<const double> in, std::vector<std::complex<double>>& out) const {
  std::vector<double> buf(static_cast<std::size_t>(n_), 0.0);
  std::copy_n(in.begin(), std::min<std::size_t>(in.size(), buf.size()), buf.begin());
  out.resize(static_cast<std::size_t>(bins()));
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_), buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

std::vector<double> RealFft::power(std::span<const double> in) const {
  std::vector<std::complex<double>> spec;
  forward(in, spec);
  std::vector<double> p(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) p[k] = std::norm(spec[k]);
  return p;
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::vector<double>& out) const {
  require(static_cast<int>(in.size()) == bins(), ErrorCode::kMalformed, "inverse FFT needs n/2 + 1 bins");
  // c2r overwrites its input.
  std::vector<std::complex<double>> buf(in.begin(), in.end());
  out.resize(static_cast<std::size_t>(n_));
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(buf.data()), out.data());
  const double scale = 1.0 / n_;
  for (auto& v : out) v *= scale;
}

std::vector<double> hann_window(int n, bool periodic) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const double denom = periodic ? n : n - 1;
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / denom);
  return w;
}

std::vector<double> hamming_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (n - 1));
  return w;
}

}  // namespace cdse::dsp
