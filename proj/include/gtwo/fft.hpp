#pragma once

#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "gtwo/errors.hpp"

namespace gtwo {

/// Forward DFT X_k = sum_n x_n exp(-2 pi i k n / M) of `in` zero-padded to
/// length `padded_size`. Plan creation in FFTW is not thread-safe, so it is
/// serialized; execution is not.
inline std::vector<std::complex<double>>
dft_padded(std::span<const std::complex<double>> in, std::size_t padded_size) {
  if (in.empty())
    throw DomainError("DFT of an empty signal");
  if (padded_size < in.size())
    throw DomainError("DFT padded size smaller than the signal");

  struct FftwFree {
    void operator()(void *p) const { fftw_free(p); }
  };
  struct PlanFree {
    void operator()(fftw_plan_s *p) const { fftw_destroy_plan(p); }
  };
  static std::mutex plan_mutex;

  const auto n = padded_size;
  std::unique_ptr<fftw_complex, FftwFree> buf(
      static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n)));
  if (!buf)
    throw std::bad_alloc();
  std::unique_ptr<fftw_plan_s, PlanFree> plan;
  {
    std::lock_guard lock(plan_mutex);
    plan.reset(fftw_plan_dft_1d(static_cast<int>(n), buf.get(), buf.get(),
                                FFTW_FORWARD, FFTW_ESTIMATE));
  }
  std::memset(buf.get(), 0, sizeof(fftw_complex) * n);
  std::memcpy(buf.get(), in.data(), sizeof(fftw_complex) * in.size());
  fftw_execute(plan.get());

  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = {buf.get()[k][0], buf.get()[k][1]};
  {
    std::lock_guard lock(plan_mutex);
    plan.reset();
  }
  return out;
}

} // namespace gtwo
