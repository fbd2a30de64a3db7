#pragma once

#include <iosfwd>

namespace eosprobe::verify {

/// Built-in oracle suite behind the `verify` CLI subcommand: finite-difference
/// gradient/HVP checks, HVP symmetry and linearity, block eigensolver against
/// a dense decomposition of the explicitly assembled Hessian, decomposition
/// identities and evaluation determinism, on bundled tiny fixtures. Prints
/// one pass/fail line per property; returns true when everything passed.
bool run_verify(std::ostream& out);

}  // namespace eosprobe::verify
