#pragma once

// Deliberate defects for verifying that the gradient harness catches them.
// Never enabled outside of tests and `dircn gradcheck --inject-fault`.

namespace dircn::ad::fault {

// Drops the x*s*(1-s) term from the SiLU derivative.
void corrupt_silu_derivative(bool enabled);
bool silu_derivative_corrupted();

}  // namespace dircn::ad::fault
