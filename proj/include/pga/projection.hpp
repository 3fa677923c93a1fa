#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pga/syntax.hpp"
#include "pga/transform.hpp"

namespace pga {

struct PassReport {
    std::string name;
    std::size_t input_size = 0;   // instruction count, period counted once
    std::size_t output_size = 0;
    std::size_t gadget_count = 0;
};

std::string to_string(const PassReport& r);

enum class ServiceStyle { PerQService, SingleService };

struct ProjectionOptions {
    ServiceStyle service_style = ServiceStyle::PerQService;
    std::vector<std::string> passes;  // ordered subset of available_passes()

    static ProjectionOptions defaults();
};

// desugar, units, normalize, jumps-unbounded, jumps-bounded, fair-coin,
// services - in pipeline order. fair-coin is not in the default pipeline.
const std::vector<std::string>& available_passes();

struct PassResult {
    InstructionSequence seq;
    PassReport report;
};

// Replaces every prb(q) test by a fair-coin gadget driven by the binary
// expansion of mkprob(q): one coin per bit, resolve on mismatch, continue on
// match; the eventually periodic tail loops through the sequence period (PGA
// has no backward jumps), so the whole program is rebuilt as a single period
// when any gadget is needed. Plain prb(q) becomes bare prb, q in {0,1}
// degenerates to a deterministic jump, q = 1/2 to the bare coin.
// Requires an input without probabilistic jumps.
PassResult realize_prb_fair(const InstructionSequence& s);

// Replaces #H{k} by a cascade of k-1 tests with probabilities 1/k .. 1/2 and
// #G{q}{k} by k tests of probability mkprob(q), residual mass to inaction.
// The sequence is rebuilt in uniform-width blocks so every surrounding jump
// and test skip relocates exactly.
PassResult eliminate_bounded_jumps(const InstructionSequence& s);

// Compiles #GU{q}{l} into a coin ladder woven through the period: each block
// carries a landing test that either lands l blocks ahead or forwards to the
// next test l blocks ahead. Every position reachable by the jump must lie in
// the period; rejects placements where that fails and rejects l = 0.
PassResult eliminate_unbounded_jumps(const InstructionSequence& s);

// prb(q) -> random(q).get (per-q service) or random.get(q) (single service).
PassResult to_service_calls(const InstructionSequence& s, ServiceStyle style);

std::pair<InstructionSequence, std::vector<PassReport>> project_full(const Term& t,
                                                                     const ProjectionOptions& opts);

// The random-assignment pattern #H{k};[x.set_1;#k];...;[x.set_k;#1].
TermPtr build_random_assignment(const std::string& x, std::uint64_t k);

}  // namespace pga
