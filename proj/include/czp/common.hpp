// common.hpp -- error taxonomy, deterministic RNG, hashing.
//
// Every stochastic code path in this library draws from Rng, a splitmix64
// stream that behaves identically on every platform. std::random
// distributions are implementation-defined and never used.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace czp {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors

enum class Errc {
    invalid_argument,
    capacity,
    instability,
    not_diagonalizable,
    non_decaying_mode,
    degenerate_denominator,
    singular_pole,
    degenerate_impedance,
    fit_failure,
    ill_conditioned,
    numeric,
    invalid_state,
    io,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_argument:       return "invalid-argument";
        case Errc::capacity:               return "capacity";
        case Errc::instability:            return "instability";
        case Errc::not_diagonalizable:     return "not-diagonalizable";
        case Errc::non_decaying_mode:      return "non-decaying-mode";
        case Errc::degenerate_denominator: return "degenerate-denominator";
        case Errc::singular_pole:          return "singular-pole";
        case Errc::degenerate_impedance:   return "degenerate-impedance";
        case Errc::fit_failure:            return "fit-failure";
        case Errc::ill_conditioned:        return "ill-conditioned";
        case Errc::numeric:                return "numeric";
        case Errc::invalid_state:          return "invalid-state";
        case Errc::io:                     return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool ok, Errc code, const std::string& message) {
    if (!ok) fail(code, message);
}

// ---------------------------------------------------------------------------
// Deterministic RNG

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Stateless mix of a base seed and a stream index; used to give every
// record/restart/epoch its own independent stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ull + index * 0x9e3779b97f4a7c15ull);
    splitmix64(s);
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // standard normal via Box-Muller; one spare value cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    int uniform_int(int n) {  // in [0, n)
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

  private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Hashing (FNV-1a, used for manifests and config fingerprints)

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v);

}  // namespace czp
