// SPDX-License-Identifier: Apache-2.0

#include "pear/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace pear::kernels {

namespace scalar {
extern const Ops kOps;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const Ops kOps;
}
#endif

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend detect_backend() {
    if (const char* env = std::getenv("PEAR_KERNELS")) {
        const std::string v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2") {
            if (!cpu_supports_avx2()) {
                throw std::runtime_error("PEAR_KERNELS=avx2 but CPU lacks AVX2/FMA");
            }
            return Backend::Avx2;
        }
        throw std::runtime_error("PEAR_KERNELS: unknown backend '" + v + "'");
    }
    return cpu_supports_avx2() ? Backend::Avx2 : Backend::Scalar;
}

Backend& backend_state() {
    static Backend b = detect_backend();
    return b;
}

}  // namespace

Backend active_backend() { return backend_state(); }

std::string backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !cpu_supports_avx2()) {
        throw std::runtime_error("set_backend: CPU lacks AVX2/FMA");
    }
    backend_state() = b;
}

const Ops& ops_for(Backend b) {
#if defined(__x86_64__) || defined(_M_X64)
    if (b == Backend::Avx2) return avx2::kOps;
#else
    if (b == Backend::Avx2) throw std::runtime_error("AVX2 backend not built on this arch");
#endif
    return scalar::kOps;
}

const Ops& ops() { return ops_for(active_backend()); }

}  // namespace pear::kernels
