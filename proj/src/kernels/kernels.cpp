#include "trajrest/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace trajrest::kernels {
namespace {

Isa detect() {
  if (const char* env = std::getenv("TRAJREST_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && avx2_available()) return Isa::kAvx2;
  }
  return avx2_available() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

void select(Isa isa) {
  if (isa == Isa::kAvx2 && !avx2_available()) isa = Isa::kScalar;
  current().store(isa);
}

Isa selected() { return current().load(); }

template <typename T>
const KernelTable<T>& active() {
  return selected() == Isa::kAvx2 ? avx2_table<T>() : scalar_table<T>();
}

template const KernelTable<float>& active<float>();
template const KernelTable<double>& active<double>();

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace trajrest::kernels
