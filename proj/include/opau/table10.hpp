#pragma once

#include "opau/activations.hpp"

namespace opau {

/// Bundled leaky-ReLU (alpha = 0.01) initialization coefficients for each
/// basis: k = 5, l = 4, safe form, 17-significant-digit fidelity.
OpauParams bundled_table10(BasisKind kind);

}  // namespace opau
