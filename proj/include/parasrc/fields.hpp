#pragma once

#include "parasrc/geometry.hpp"

#include <functional>

namespace parasrc {

/// Partial derivative multi-index: d^dx/dx d^dy/dy d^dt/dt.
struct Derivative {
    int dx = 0;
    int dy = 0;
    int dt = 0;
};

/// Scalar field on Ω with access to its partial derivatives.
using SpaceField = std::function<double(Point, Derivative)>;
/// Scalar field on Ω x I with access to its partial derivatives.
using SpaceTimeField = std::function<double(Point, double, Derivative)>;
/// Plain pointwise function on Ω.
using PointFunction = std::function<double(Point)>;

} // namespace parasrc
