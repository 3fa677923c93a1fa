#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pga/rational.hpp"
#include "pga/syntax.hpp"
#include "pga/transform.hpp"

namespace pga {

// Finite reactive probabilistic transition system. One state per instruction
// position of the canonical sequence (prefix positions, then period slots),
// plus one shared inaction state appended at the end. Halt positions are
// Terminated states of their own. apply_environment resolves action nodes
// into chance nodes that keep their label, so traces can report them.
struct ReactivePts {
    struct ActionNode {
        BasicAction label;
        std::uint32_t on_true = 0;
        std::uint32_t on_false = 0;
    };
    struct ChanceNode {
        std::optional<BasicAction> label;  // set when resolved from an action node
        std::vector<std::pair<std::uint32_t, Rational>> dist;  // masses sum to exactly 1
    };
    struct TerminatedNode {};
    struct InactionNode {};
    using Node = std::variant<ActionNode, ChanceNode, TerminatedNode, InactionNode>;

    std::vector<Node> nodes;
    std::uint32_t initial = 0;
    std::size_t position_count = 0;  // nodes[0..position_count) mirror instruction positions
};

struct Environment {
    struct Model {
        enum Kind { AlwaysTrue, AlwaysFalse, Bernoulli };
        Kind kind = AlwaysTrue;
        Rational q;  // Bernoulli only, q in [0,1]
    };
    Model fallback{Model::AlwaysTrue, Rational(1)};
    std::map<BasicAction, Model> overrides;

    static Environment all_true() { return Environment{}; }
    static Environment all_false() {
        Environment e;
        e.fallback.kind = Model::AlwaysFalse;
        return e;
    }
    const Model& lookup(const BasicAction& a) const {
        auto it = overrides.find(a);
        return it == overrides.end() ? fallback : it->second;
    }
};

// Line-based format: `default = true|false|bernoulli N/D`,
// `focus.method = true|false|bernoulli N/D`, `#` comments.
Environment parse_environment_file(const std::string& text);

// Service-call conventions produced by projection: focus `random(q)` with
// method `get`, or focus `random` with method `get(q)`.
bool is_random_service_action(const BasicAction& a);
std::optional<Rational> service_probability(const BasicAction& a);

// Adds Bernoulli models for every service call appearing in s (existing
// overrides win).
Environment with_service_models(Environment base, const InstructionSequence& s);

// `N` or `N/D` with optional sign.
Rational parse_rational_literal(const std::string& text);

// Direct semantics of a canonical, unit-free sequence, including the exact
// closed-form distributions of the probabilistic jumps.
ReactivePts build_pts(const InstructionSequence& s);

ReactivePts apply_environment(const ReactivePts& p, const Environment& e);

struct Absorption {
    Rational terminated;
    Rational inaction;
    Rational divergence;
};

// Exact absorption analysis of an environment-resolved system.
Absorption absorption(const ReactivePts& applied);

// Expected number of executed instructions before the run ends; the halt
// instruction counts, a missing next instruction does not. Empty when the
// run diverges with positive probability.
std::optional<Rational> expected_steps(const ReactivePts& applied);

// Expected visits to the marked states (mark is indexed by state id).
std::optional<Rational> expected_visits(const ReactivePts& applied, const std::vector<bool>& mark);

std::vector<bool> mark_probabilistic_positions(const InstructionSequence& s,
                                               std::size_t state_count);

enum class TraceEnd { Terminated, Inaction, Open };

struct Trace {
    std::vector<BasicAction> labels;
    TraceEnd end = TraceEnd::Terminated;

    bool operator==(const Trace&) const = default;
    bool operator<(const Trace& o) const {
        return labels != o.labels ? labels < o.labels : end < o.end;
    }
};

using TraceDistribution = std::map<Trace, Rational>;

// True = the label is hidden from traces and treated as internal structure.
using LabelHider = std::function<bool(const BasicAction&)>;

// Exact distribution over visible-label traces truncated at `depth` visible
// actions; masses sum to exactly 1 at every depth. Runs that can no longer
// produce a visible step but are not absorbed (internal divergence) are
// reported as Open.
TraceDistribution trace_distribution(const ReactivePts& p, const Environment& e, std::size_t depth,
                                     const LabelHider& hide = {});

std::string trace_to_string(const Trace& t);
std::string trace_distribution_to_string(const TraceDistribution& d);

struct BisimResult {
    bool bisimilar = false;
    std::string evidence;  // distinguishing class and masses when not bisimilar
};

// Probabilistic bisimilarity. Deterministic jumps and probabilistic
// instructions are internal: their chance chains are absorbed exactly, and
// equivalence is decided by partition refinement over the visible states
// (action nodes, termination, inaction, divergence), comparing the mass each
// reply routes into every equivalence class.
BisimResult bisimilar(const ReactivePts& a, const ReactivePts& b);

bool equivalent_under(const InstructionSequence& a, const InstructionSequence& b,
                      const Environment& e, std::size_t depth, const LabelHider& hide_a = {},
                      const LabelHider& hide_b = {});

}  // namespace pga
