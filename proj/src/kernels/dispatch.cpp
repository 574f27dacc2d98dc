// SPDX-License-Identifier: Apache-2.0

#include "cssl/kernels.hpp"

#include <atomic>

namespace cssl::kernels {

#if defined(__AVX2__) || defined(CSSL_AVX2_TU)
const Backend* avx2_backend_impl();
#endif
#if defined(__aarch64__)
const Backend* neon_backend_impl();
#endif

const Backend* avx2_backend() {
#if defined(CSSL_AVX2_TU)
#if defined(__x86_64__) || defined(__i386__)
  if (__builtin_cpu_supports("avx2")) return avx2_backend_impl();
#endif
#endif
  return nullptr;
}

const Backend* neon_backend() {
#if defined(__aarch64__)
  return neon_backend_impl();
#else
  return nullptr;
#endif
}

namespace {

const Backend* pick() {
  if (const Backend* b = avx2_backend()) return b;
  if (const Backend* b = neon_backend()) return b;
  return &scalar_backend();
}

std::atomic<const Backend*> g_override{nullptr};

}  // namespace

const Backend& active() {
  if (const Backend* b = g_override.load(std::memory_order_relaxed)) return *b;
  static const Backend* chosen = pick();
  return *chosen;
}

void set_backend(const Backend* b) { g_override.store(b, std::memory_order_relaxed); }

}  // namespace cssl::kernels
