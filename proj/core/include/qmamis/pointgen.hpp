#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace qmamis {

/// How a uniform point set was produced: plain Monte Carlo or RQMC.
enum class SamplerKind { IID, ScrambledSobol };

std::string_view to_string(SamplerKind kind) noexcept;
/// Accepts "mc"/"iid" and "rqmc"/"sobol".
SamplerKind parse_sampler(std::string_view name);

/// Largest supported log2 point count for Sobol' sets.
inline constexpr int kMaxSobolLog2 = 20;
/// Number of coordinates covered by the shipped direction-number table.
std::size_t sobol_max_dimension() noexcept;

/// An immutable n x d block of values in [0,1), stored row-major.
class UniformPointSet {
public:
    UniformPointSet(SamplerKind kind, std::size_t n, std::size_t d, std::uint64_t seed,
                    std::vector<double> values);

    std::size_t n() const noexcept { return n_; }
    std::size_t d() const noexcept { return d_; }
    SamplerKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * d_ + j]; }
    std::span<const double> row(std::size_t i) const noexcept
    {
        return {values_.data() + i * d_, d_};
    }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const UniformPointSet&, const UniformPointSet&) = default;

private:
    SamplerKind kind_;
    std::size_t n_;
    std::size_t d_;
    std::uint64_t seed_;
    std::vector<double> values_;
};

/// 2^m Owen-scrambled Sobol' points in d dimensions. Each coordinate is
/// scrambled by nested uniform digit permutations keyed by (seed, coordinate).
UniformPointSet generate_sobol(int m, std::size_t d, std::uint64_t seed);

/// The first 2^m points of the raw Sobol' digital net (no scrambling).
UniformPointSet generate_sobol_unscrambled(int m, std::size_t d);

/// n i.i.d. uniforms from a counter-based generator keyed by seed.
UniformPointSet generate_iid(std::size_t n, std::size_t d, std::uint64_t seed);

/// Dispatches on kind; for ScrambledSobol, n must be a power of two.
UniformPointSet generate_points(SamplerKind kind, std::size_t n, std::size_t d,
                                std::uint64_t seed);

/// True iff every dyadic interval [j 2^-m, (j+1) 2^-m) holds exactly one
/// value of the given coordinate. Requires ps.n() == 2^m.
bool dyadic_stratification_check(const UniformPointSet& ps, std::size_t coordinate, int m);

/// Debug dump: one point per line, space separated, 17 significant digits.
void write_points(std::ostream& os, const UniformPointSet& ps);

namespace detail {
/// Nested uniform scramble of a 32-digit binary fraction.
std::uint32_t owen_scramble(std::uint32_t bits, std::uint64_t key) noexcept;
/// Unscrambled 32-bit Sobol' coordinate `dim` of point `index`.
std::uint32_t sobol_bits(std::uint64_t index, std::size_t dim) noexcept;
} // namespace detail

} // namespace qmamis
