// SPDX-License-Identifier: Apache-2.0
#include "nmog/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace nmog::kernels {

bool avx2_available() {
#ifdef NMOG_HAVE_AVX2_KERNELS
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const Ops* select() {
  const char* env = std::getenv("NMOG_SIMD");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return &scalar::ops;
#ifdef NMOG_HAVE_AVX2_KERNELS
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return &avx2::ops;
#endif
    // anything else (including "auto") falls through to detection
  }
#ifdef NMOG_HAVE_AVX2_KERNELS
  if (avx2_available()) return &avx2::ops;
#endif
  return &scalar::ops;
}

} // namespace

const Ops& active() {
  static const Ops* selected = select();
  return *selected;
}

} // namespace nmog::kernels
