#include "tlab/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tlab::kernels {

#ifdef TLAB_HAVE_AVX2
const Ops* avx2_ops_impl();
#endif

namespace {

const Ops* detect_avx2() {
#ifdef TLAB_HAVE_AVX2
    if (__builtin_cpu_supports("avx2")) return avx2_ops_impl();
#endif
    return nullptr;
}

struct Dispatch {
    const Ops* avx2 = detect_avx2();
    const Ops* current = nullptr;
    std::string name;

    Dispatch() {
        const char* env = std::getenv("TLAB_KERNELS");
        set(env != nullptr ? env : "auto");
    }

    void set(std::string_view which) {
        if (which == "scalar") {
            current = &scalar_ops();
            name = "scalar";
        } else if (which == "avx2") {
            if (avx2 == nullptr) throw std::runtime_error("kernels: avx2 not available on this host");
            current = avx2;
            name = "avx2";
        } else if (which == "auto") {
            current = avx2 != nullptr ? avx2 : &scalar_ops();
            name = avx2 != nullptr ? "avx2" : "scalar";
        } else {
            throw std::invalid_argument("kernels: unknown selection '" + std::string(which) +
                                        "' (expected scalar, avx2 or auto)");
        }
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

}  // namespace

const Ops* avx2_ops() { return dispatch().avx2; }

bool avx2_available() { return dispatch().avx2 != nullptr; }

const Ops& active() { return *dispatch().current; }

void select(std::string_view name) { dispatch().set(name); }

std::string_view active_name() { return dispatch().name; }

}  // namespace tlab::kernels
