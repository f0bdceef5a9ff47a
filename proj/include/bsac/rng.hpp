#pragma once

#include <array>
#include <cstdint>

#include "bsac/tensor.hpp"

namespace bsac {

// Deterministic random source: xoshiro256++ seeded through SplitMix64.
// Normal draws use the Marsaglia polar method with a cached spare, so a
// given seed yields the same draw sequence on every run and platform.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0);

    uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    // Unbiased-enough index draw in [0, n); n must be > 0.
    uint64_t below(uint64_t n);

    // Standard normal draw.
    double normal();

    Tensor normal_tensor(std::vector<int> shape);
    Tensor uniform_tensor(std::vector<int> shape, double lo, double hi);

    struct State {
        std::array<uint64_t, 4> s;
        bool has_spare;
        double spare;
    };
    State state() const { return {s_, has_spare_, spare_}; }
    void set_state(const State& st);

    // Stateless seed mixer for deriving independent child seeds.
    static uint64_t mix(uint64_t a, uint64_t b);

  private:
    std::array<uint64_t, 4> s_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bsac
