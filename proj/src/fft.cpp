// SPDX-License-Identifier: Apache-2.0
#include "dqan/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace dqan::fft {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Plan {
 public:
  Plan(std::size_t n, Complex* data, int sign) {
    std::lock_guard lock(planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(data);
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, sign, FFTW_ESTIMATE);
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  void execute(Complex* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan_, p, p);
  }

 private:
  fftw_plan plan_;
};

void transform(ComplexVec& x, int sign) {
  if (x.empty()) return;
  Plan plan(x.size(), x.data(), sign);
  plan.execute(x.data());
}

}  // namespace

void forward_inplace(ComplexVec& x) { transform(x, FFTW_FORWARD); }

void inverse_inplace(ComplexVec& x) {
  transform(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : x) v *= scale;
}

ComplexVec forward(std::span<const Complex> x) {
  ComplexVec out(x.begin(), x.end());
  forward_inplace(out);
  return out;
}

ComplexVec inverse(std::span<const Complex> spectrum) {
  ComplexVec out(spectrum.begin(), spectrum.end());
  inverse_inplace(out);
  return out;
}

std::size_t good_size(std::size_t n) {
  if (n <= 1) return 1;
  std::size_t best = 1;
  while (best < n) best *= 2;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5) {
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v *= 2;
      if (v < best) best = v;
    }
  }
  return best;
}

}  // namespace dqan::fft
