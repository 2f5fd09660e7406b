#pragma once

#include "parasrc/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>

namespace parasrc {

/// Observation fields that receive independent noise.
enum class ObservedField : std::uint8_t { Q = 0, DtQ, P, Rx, Ry, DtRx, DtRy };

/// Multiplicative noise z -> z (1 + delta * xi), xi standard normal, keyed by
/// (field, quadrature-point id). The multiplier of a key depends only on
/// (seed, field, key), so the realization is reproducible and independent of
/// evaluation order.
class NoiseModel {
public:
    NoiseModel() = default;
    NoiseModel(double delta, std::uint64_t seed);

    double delta() const { return delta_; }
    std::uint64_t seed() const { return seed_; }
    double standard_normal(ObservedField field, std::uint64_t key) const;
    double multiplier(ObservedField field, std::uint64_t key) const;
    /// Returns `exact` untouched when delta == 0.
    double apply(ObservedField field, std::uint64_t key, double exact) const {
        return delta_ == 0.0 ? exact : exact * multiplier(field, key);
    }

private:
    double delta_ = 0.0;
    std::uint64_t seed_ = 0;
};

/// Observational data: (q, ∂ₜq) on ω x I, p ≈ Au(t0) on Ω and, without
/// boundary information, r ≈ ∇u on ω x I together with ∂ₜr.
struct ObservationData {
    using TimeField = std::function<double(Point, double)>;
    using VectorTimeField = std::function<std::array<double, 2>(Point, double)>;

    TimeField q;
    TimeField dtq;
    std::function<double(Point)> p;
    VectorTimeField r;   // may be empty
    VectorTimeField dtr; // may be empty
    NoiseModel noise;

    bool has_gradient() const { return static_cast<bool>(r) && static_cast<bool>(dtr); }
};

/// Returns `data` with the noise realization (delta, seed) attached.
ObservationData inject_noise(ObservationData data, double delta, std::uint64_t seed);

} // namespace parasrc
