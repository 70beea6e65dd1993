#include "mstab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>

namespace mstab::kernels {

namespace {
std::atomic<const Kernels*> g_active{nullptr};

const Kernels* resolve(const std::string& mode) {
    if (mode == "scalar") return &scalar();
    if (mode == "avx2") {
        const Kernels* k = avx2();
        if (!k) throw std::runtime_error("MSTAB_KERNEL=avx2 requested but CPU lacks AVX2+FMA");
        return k;
    }
    if (mode == "auto" || mode.empty()) {
        const Kernels* k = avx2();
        return k ? k : &scalar();
    }
    throw std::invalid_argument("unknown kernel mode '" + mode + "' (auto|scalar|avx2)");
}
} // namespace

void select(const std::string& mode) { g_active.store(resolve(mode)); }

const Kernels& active() {
    const Kernels* k = g_active.load();
    if (!k) {
        const char* env = std::getenv("MSTAB_KERNEL");
        k = resolve(env ? env : "auto");
        g_active.store(k);
    }
    return *k;
}

} // namespace mstab::kernels
