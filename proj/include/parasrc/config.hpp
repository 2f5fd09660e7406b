#pragma once

#include "parasrc/inverse.hpp"

#include <string>

namespace parasrc {

/// JSON problem description. Keys (all optional):
///   example        1 | 2 | 3, preset applied before the other keys
///   dim            1 | 2
///   domain, omega, omega0
///                  [x0, x1] in 1D, [x0, x1, y0, y1] in 2D
///   t0, zeta       observation window (t0 - zeta, t0 + zeta)
///   diffusion, reaction
///                  A v = -diffusion * Laplacian(v) + reaction * v
///   truth          "manufactured" | "forward"
///   wave           wave number of the sine factor
///   fine_factor    forward-solve refinement (>= 4)
///   forward_start  initial time of the forward solve
///   h, tau         mesh denominators (h = 1/h)
///   mode           "lip" | "hol"
///   gamma_f, gamma_u, delta, seed
///   noise          "nodal" | "quadrature"
/// Unknown keys and mistyped values raise InvalidArgument.
ProblemConfig parse_config(const std::string& text);
ProblemConfig load_config(const std::string& path);

/// Inverse of parse_config (every key written).
std::string to_json(const ProblemConfig& config);

FormKind parse_mode(const std::string& s);
NoisePlacement parse_noise_placement(const std::string& s);
std::string noise_placement_name(NoisePlacement p);

} // namespace parasrc
