#include "parasrc/observation.hpp"

#include "parasrc/error.hpp"

#include <limits>
#include <random>

namespace parasrc {

namespace {

// Counter-based bit source: a splitmix64 stream started at a hashed key.
// Feeding it to std::normal_distribution gives one independent draw per key.
class KeyedBits {
public:
    using result_type = std::uint64_t;
    explicit KeyedBits(std::uint64_t state) : state_(state) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    KeyedBits g(a ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
    return g();
}

} // namespace

NoiseModel::NoiseModel(double delta, std::uint64_t seed) : delta_(delta), seed_(seed) {
    if (!(delta >= 0.0)) throw InvalidArgument("noise level must be nonnegative");
}

double NoiseModel::standard_normal(ObservedField field, std::uint64_t key) const {
    KeyedBits bits(mix(mix(seed_, static_cast<std::uint64_t>(field) + 1), key));
    std::normal_distribution<double> normal(0.0, 1.0);
    return normal(bits);
}

double NoiseModel::multiplier(ObservedField field, std::uint64_t key) const {
    if (delta_ == 0.0) return 1.0;
    return 1.0 + delta_ * standard_normal(field, key);
}

ObservationData inject_noise(ObservationData data, double delta, std::uint64_t seed) {
    data.noise = NoiseModel(delta, seed);
    return data;
}

} // namespace parasrc
