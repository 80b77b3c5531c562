#include "slummap/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace slummap {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Pcg32& rng) {
    if (k > n) throw std::invalid_argument("cannot sample more items than available");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below64(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace slummap
