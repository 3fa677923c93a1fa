#pragma once

#include <stdexcept>
#include <string>

#include "pga/syntax.hpp"

namespace pga {

// Raised by normalization and rewrite passes on inputs outside a pass's
// domain (units where none are allowed, unsupported placements, ...).
struct PassError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canonical form: derivably-equal representative with instructions after a
// repetition dropped, nested repetitions flattened, the period reduced to its
// primitive root, and the prefix minimized by absorbing its tail into period
// rotations. Canonical-form equality is structural equality.
// Rejects unit instructions and probabilistic-choice sugar.
InstructionSequence normalize(const Term& t);

// Re-establishes the canonical invariants on an explicitly built sequence.
InstructionSequence canonicalize(InstructionSequence s);

// Rewrites every {P}+_(p){Q} to +prb(p);[P;#2];[Q], recursively.
TermPtr desugar_prchoice(const Term& t);

// Inlines unit-instruction payloads, relocating every jump so control flow is
// preserved: a jump that counted a unit as one instruction jumps past the
// whole payload afterwards. Tests and bounded probabilistic jumps whose
// hardwired targets would land inside a widened payload are first wrapped in
// a unit of forwarding jumps, which the same relocation then resolves.
// Rejects repetition inside payloads (parser-enforced), choice sugar, and
// unbounded probabilistic jumps alongside multi-instruction units.
TermPtr eliminate_units(const Term& t);

}  // namespace pga
