#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace plangan {

// Deterministic random source. All draws are defined in terms of the raw
// mt19937_64 stream so results are identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // standard normal via Box-Muller
    double normal();

    std::vector<double> normal_vec(int n);

    // partial Fisher-Yates: k distinct indices out of [0, n)
    std::vector<int> sample_without_replacement(int n, int k);

    void shuffle(std::vector<int>& v);

    // derived independent stream
    Rng fork(std::uint64_t stream);

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace plangan
