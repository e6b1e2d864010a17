#pragma once

#include <cstdint>

namespace oqs {

// Counter-based generator: the output stream is a pure function of
// (key, counter), so any (trajectory, step) stream can be opened at O(1)
// cost and results never depend on worker scheduling.
//
// Mixing function is the splitmix64 finalizer; the key is derived by
// chaining it over (master_seed, stream, substream).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t master_seed,
                        std::uint64_t stream = 0,
                        std::uint64_t substream = 0)
        : key_(derive(derive(derive(0x853c49e6748fea9bULL, master_seed), stream),
                      substream)) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // modulo bias is < 2^-53 for the n used here (n <= a few thousand)
        return next_u64() % n;
    }

private:
    static std::uint64_t derive(std::uint64_t acc, std::uint64_t v) {
        std::uint64_t z = acc ^ (v + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace oqs
