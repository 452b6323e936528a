#include "qmamis/seeding.hpp"

namespace qmamis {

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
{
    for (auto c : path) seed = derive_seed(seed, c);
    return seed;
}

} // namespace qmamis
