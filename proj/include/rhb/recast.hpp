#ifndef RHB_RECAST_HPP
#define RHB_RECAST_HPP

#include "rhb/expr.hpp"
#include "rhb/poly.hpp"

namespace rhb {

/// Rewrites every non-polynomial construct of `sys` into an equivalent
/// polynomial DAE: order reduction to first derivatives, companion variables
/// for rational powers / reciprocals / elementary transcendental functions,
/// consistent companion initial values derived from the point constraints.
/// Throws RecastError for constructs without a rewrite rule.
PolySystem recast(const OdeSystem& sys);

/// Recasting an already-polynomial system is the identity.
PolySystem recast(const PolySystem& sys);

} // namespace rhb

#endif
