#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lcdn {

// splitmix64; used to derive independent seeds from (seed, key...) tuples.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(seed) ^ a) ^ b);
}

// mt19937_64 plus hand-rolled distribution mappings. The standard specifies the
// engine bit-exactly but not the distributions, so mapping ourselves keeps runs
// reproducible across standard library implementations.
class Rng {
  public:
    Rng() : engine_(0) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // [0, 1)
    double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // (0, 1), both ends excluded
    double u01_open() { return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52; }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // integer in [lo, hi], inclusive
    int uniform_int(int lo, int hi) {
        const int span = hi - lo + 1;
        int v = lo + static_cast<int>(u01() * span);
        return v > hi ? hi : v;
    }

    // index in [0, n)
    std::size_t index(std::size_t n) {
        std::size_t v = static_cast<std::size_t>(u01() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

    bool coin(double p) { return u01() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices drawn uniformly from [0, n), in draw order
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k && i < n; ++i) {
            std::size_t j = i + index(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

    std::string save_state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace lcdn
