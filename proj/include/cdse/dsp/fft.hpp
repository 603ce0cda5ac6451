#pragma once

#include <complex>
#include <span>
#include <vector>

namespace cdse::dsp {

// Real-to-complex FFT of a fixed size. Plans are created under a global lock
// (FFTW planning is not thread-safe); execution on caller buffers is.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const noexcept { return n_; }
  int bins() const noexcept { return n_ / 2 + 1; }

  // `in` may be shorter than size(); it is zero-padded.
  void forward(std::span<const double> in, std::vector<std::complex<double>>& out) const;
  // |X_k|^2 for k = 0 .. n/2.
  std::vector<double> power(std::span<const double> in) const;
  // Inverse of forward(), scaled by 1/n. `in` holds bins() values.
  void inverse(std::span<const std::complex<double>> in, std::vector<double>& out) const;

 private:
  int n_;
  void* plan_;
  void* inverse_plan_;
};

std::vector<double> hann_window(int n, bool periodic = false);
std::vector<double> hamming_window(int n);

}  // namespace cdse::dsp
