#include "qmamis/pointgen.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <ostream>
#include <string>

#include "qmamis/error.hpp"
#include "qmamis/seeding.hpp"

namespace qmamis {

namespace {

struct SobolPolynomial {
    std::uint32_t poly;
    std::uint32_t init[9];
};

#include "sobol_directions.inc"

constexpr int kBits = 32;
constexpr double kTwoPowMinus32 = 1.0 / 4294967296.0;
constexpr double kTwoPowMinus53 = 1.0 / 9007199254740992.0;

using DirectionTable = std::array<std::array<std::uint32_t, kBits>, kSobolTableDims>;

DirectionTable build_directions()
{
    DirectionTable v{};
    for (int j = 0; j < kBits; ++j) v[0][j] = 1u << (kBits - 1 - j);

    for (int dim = 1; dim < kSobolTableDims; ++dim) {
        const auto& entry = kSobolTable[dim];
        const int s = std::bit_width(entry.poly) - 1;
        std::array<std::uint32_t, kBits> m{};
        for (int k = 0; k < s; ++k) m[k] = entry.init[k];
        for (int k = s; k < kBits; ++k) {
            std::uint32_t mk = m[k - s] ^ (m[k - s] << s);
            for (int r = 1; r < s; ++r) {
                // coefficient a_r of x^(s-r), read from the interior polynomial bits
                if ((entry.poly >> (s - r)) & 1u) mk ^= m[k - r] << r;
            }
            m[k] = mk;
        }
        for (int k = 0; k < kBits; ++k) v[dim][k] = m[k] << (kBits - 1 - k);
    }
    return v;
}

const DirectionTable& directions()
{
    static const DirectionTable table = build_directions();
    return table;
}

void check_sobol_args(int m, std::size_t d)
{
    QMAMIS_REQUIRE(m >= 0 && m <= kMaxSobolLog2, InvalidArgument,
                   "Sobol' log2 point count must lie in [0, " + std::to_string(kMaxSobolLog2) +
                       "], got " + std::to_string(m));
    QMAMIS_REQUIRE(d >= 1, InvalidArgument, "Sobol' dimension must be at least 1");
    if (d > sobol_max_dimension())
        throw UnsupportedDimension("Sobol' dimension " + std::to_string(d) +
                                   " exceeds the direction-number table (" +
                                   std::to_string(sobol_max_dimension()) + ")");
}

} // namespace

std::string_view to_string(SamplerKind kind) noexcept
{
    return kind == SamplerKind::IID ? "mc" : "rqmc";
}

SamplerKind parse_sampler(std::string_view name)
{
    if (name == "mc" || name == "iid") return SamplerKind::IID;
    if (name == "rqmc" || name == "sobol") return SamplerKind::ScrambledSobol;
    throw InvalidArgument("unknown sampler '" + std::string(name) + "' (expected mc or rqmc)");
}

std::size_t sobol_max_dimension() noexcept
{
    return kSobolTableDims;
}

UniformPointSet::UniformPointSet(SamplerKind kind, std::size_t n, std::size_t d,
                                 std::uint64_t seed, std::vector<double> values)
    : kind_(kind), n_(n), d_(d), seed_(seed), values_(std::move(values))
{
    QMAMIS_REQUIRE(values_.size() == n_ * d_, InvalidArgument,
                   "point set storage does not match n x d");
}

namespace detail {

std::uint32_t owen_scramble(std::uint32_t bits, std::uint64_t key) noexcept
{
    std::uint32_t out = bits;
    for (int depth = 0; depth < kBits; ++depth) {
        // the flip at this depth depends only on the digits above it
        const std::uint64_t prefix = depth == 0 ? 0 : bits >> (kBits - depth);
        const std::uint64_t node = (std::uint64_t{1} << depth) | prefix;
        const auto flip = static_cast<std::uint32_t>(mix64(key ^ (node * 0xd1342543de82ef95ULL)) >> 63);
        out ^= flip << (kBits - 1 - depth);
    }
    return out;
}

std::uint32_t sobol_bits(std::uint64_t index, std::size_t dim) noexcept
{
    const auto& v = directions()[dim];
    std::uint32_t x = 0;
    for (int j = 0; index != 0; ++j, index >>= 1)
        if (index & 1u) x ^= v[j];
    return x;
}

} // namespace detail

UniformPointSet generate_sobol_unscrambled(int m, std::size_t d)
{
    check_sobol_args(m, d);
    const std::size_t n = std::size_t{1} << m;
    std::vector<double> values(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            values[i * d + j] = detail::sobol_bits(i, j) * kTwoPowMinus32;
    return UniformPointSet(SamplerKind::ScrambledSobol, n, d, 0, std::move(values));
}

UniformPointSet generate_sobol(int m, std::size_t d, std::uint64_t seed)
{
    check_sobol_args(m, d);
    const std::size_t n = std::size_t{1} << m;
    std::vector<double> values(n * d);
    for (std::size_t j = 0; j < d; ++j) {
        const std::uint64_t key = derive_seed(seed, j);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t raw = detail::sobol_bits(i, j);
            values[i * d + j] = detail::owen_scramble(raw, key) * kTwoPowMinus32;
        }
    }
    return UniformPointSet(SamplerKind::ScrambledSobol, n, d, seed, std::move(values));
}

UniformPointSet generate_iid(std::size_t n, std::size_t d, std::uint64_t seed)
{
    QMAMIS_REQUIRE(n >= 1 && d >= 1, InvalidArgument, "iid point set needs n >= 1 and d >= 1");
    std::vector<double> values(n * d);
    const std::uint64_t key = mix64(seed);
    for (std::size_t k = 0; k < n * d; ++k)
        values[k] = (derive_seed(key, k) >> 11) * kTwoPowMinus53;
    return UniformPointSet(SamplerKind::IID, n, d, seed, std::move(values));
}

UniformPointSet generate_points(SamplerKind kind, std::size_t n, std::size_t d, std::uint64_t seed)
{
    if (kind == SamplerKind::IID) return generate_iid(n, d, seed);
    QMAMIS_REQUIRE(n >= 1 && std::has_single_bit(n), InvalidArgument,
                   "RQMC point count must be a power of two, got " + std::to_string(n));
    return generate_sobol(std::countr_zero(n), d, seed);
}

bool dyadic_stratification_check(const UniformPointSet& ps, std::size_t coordinate, int m)
{
    QMAMIS_REQUIRE(m >= 0 && m < 63 && ps.n() == (std::size_t{1} << m), InvalidArgument,
                   "stratification check needs n == 2^m");
    QMAMIS_REQUIRE(coordinate < ps.d(), InvalidArgument, "coordinate out of range");
    const std::size_t bins = ps.n();
    std::vector<unsigned char> seen(bins, 0);
    for (std::size_t i = 0; i < ps.n(); ++i) {
        const double u = ps(i, coordinate);
        if (!(u >= 0.0 && u < 1.0)) return false;
        auto bin = static_cast<std::size_t>(u * static_cast<double>(bins));
        if (bin >= bins) bin = bins - 1;
        if (seen[bin]++) return false;
    }
    return true;
}

void write_points(std::ostream& os, const UniformPointSet& ps)
{
    char buf[32];
    for (std::size_t i = 0; i < ps.n(); ++i) {
        for (std::size_t j = 0; j < ps.d(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ps(i, j));
            if (j) os << ' ';
            os << buf;
        }
        os << '\n';
    }
}

} // namespace qmamis
