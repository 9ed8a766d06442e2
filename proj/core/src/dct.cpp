#include "dct.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

#include "gibbsfwi/error.hpp"

namespace gfwi::detail {
namespace {

// FFTW planning is not thread-safe; execution with new arrays is.
std::mutex plan_mutex;

struct PlanKey {
  int kind;
  int n0;
  int n1;
  auto operator<=>(const PlanKey&) const = default;
};

std::map<PlanKey, fftw_plan>& plans() {
  static std::map<PlanKey, fftw_plan> cache;
  return cache;
}

constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_plan plan_for(int kind, int n0, int n1) {
  std::lock_guard lock(plan_mutex);
  auto& cache = plans();
  const PlanKey key{kind, n0, n1};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<double> a(static_cast<std::size_t>(n0) * n1 + 2 * n0 + 2);
  std::vector<fftw_complex> c(static_cast<std::size_t>(n0) * (n1 / 2 + 1) + 1);
  fftw_plan p = nullptr;
  switch (kind) {
    case 0:
      p = fftw_plan_r2r_1d(n0, a.data(), a.data() + n0, FFTW_REDFT10, kFlags);
      break;
    case 1:
      p = fftw_plan_r2r_1d(n0, a.data(), a.data() + n0, FFTW_REDFT01, kFlags);
      break;
    case 2:
      p = fftw_plan_dft_r2c_2d(n0, n1, a.data(), c.data(), kFlags);
      break;
    default:
      p = fftw_plan_dft_c2r_2d(n0, n1, c.data(), a.data(), kFlags);
      break;
  }
  if (!p) throw NumericError("FFTW planning failed");
  cache.emplace(key, p);
  return p;
}

}  // namespace

void dct2(std::span<const double> in, std::span<double> out) {
  const int n = static_cast<int>(in.size());
  if (out.size() != in.size()) throw ShapeError("dct2: size mismatch");
  if (n == 0) return;
  std::vector<double> src(in.begin(), in.end());
  fftw_execute_r2r(plan_for(0, n, 1), src.data(), out.data());
}

void dct3(std::span<const double> in, std::span<double> out) {
  const int n = static_cast<int>(in.size());
  if (out.size() != in.size()) throw ShapeError("dct3: size mismatch");
  if (n == 0) return;
  std::vector<double> src(in.begin(), in.end());
  fftw_execute_r2r(plan_for(1, n, 1), src.data(), out.data());
}

void rfft2(int n0, int n1, std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() != static_cast<std::size_t>(n0) * n1 ||
      out.size() != static_cast<std::size_t>(n0) * (n1 / 2 + 1))
    throw ShapeError("rfft2: size mismatch");
  std::vector<double> src(in.begin(), in.end());
  fftw_execute_dft_r2c(plan_for(2, n0, n1), src.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft2(int n0, int n1, std::span<const std::complex<double>> in, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(n0) * n1 ||
      in.size() != static_cast<std::size_t>(n0) * (n1 / 2 + 1))
    throw ShapeError("irfft2: size mismatch");
  // c2r destroys its input.
  std::vector<std::complex<double>> src(in.begin(), in.end());
  fftw_execute_dft_c2r(plan_for(3, n0, n1), reinterpret_cast<fftw_complex*>(src.data()),
                       out.data());
}

}  // namespace gfwi::detail
