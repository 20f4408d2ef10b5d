#include "adgan/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

namespace adgan {

template <typename T>
bool all_finite(const TensorT<T>& t) {
  for (const T& v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace pool {

namespace {

struct Bin {
  std::vector<std::vector<unsigned char>> dummy;  // placeholder, unused
};

template <typename T>
struct FreeList {
  // size -> stack of buffers; bounded so long runs cannot hoard memory
  std::unordered_map<std::int64_t, std::vector<std::vector<T>>> bins;
  std::int64_t held = 0;
  static constexpr std::int64_t kMaxHeldElems = 192ll * 1024 * 1024;  // per scalar type
};

template <typename T>
FreeList<T>& free_list() {
  static thread_local FreeList<T> fl;
  return fl;
}

}  // namespace

template <typename T>
std::vector<T> take(std::int64_t n) {
  if (n > 0) {
    auto& fl = free_list<T>();
    auto it = fl.bins.find(n);
    if (it != fl.bins.end() && !it->second.empty()) {
      std::vector<T> buf = std::move(it->second.back());
      it->second.pop_back();
      fl.held -= n;
      return buf;
    }
  }
  return std::vector<T>(static_cast<std::size_t>(n));
}

template <typename T>
void give(std::vector<T>&& buf) {
  const auto n = static_cast<std::int64_t>(buf.size());
  if (n < 4096) return;  // small buffers are cheap to reallocate
  auto& fl = free_list<T>();
  if (fl.held + n > FreeList<T>::kMaxHeldElems) return;
  fl.held += n;
  fl.bins[n].push_back(std::move(buf));
}

template std::vector<float> take<float>(std::int64_t);
template std::vector<double> take<double>(std::int64_t);
template void give<float>(std::vector<float>&&);
template void give<double>(std::vector<double>&&);

}  // namespace pool

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

template struct TensorT<float>;
template struct TensorT<double>;
template bool all_finite(const TensorT<float>&);
template bool all_finite(const TensorT<double>&);

}  // namespace adgan
