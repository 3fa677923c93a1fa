#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pga/rational.hpp"
#include "pga/syntax.hpp"

namespace pga {

// SplitMix64; tiny, bit-exact across platforms.
struct Rng {
    std::uint64_t state = 0;
};

std::pair<Rng, std::uint64_t> rng_next(Rng r);

// Exact-threshold sampling: reply True iff the next draw < floor(q * 2^64).
// No floating point anywhere; resolution is 2^-64.
struct BernoulliCut {
    bool always = false;     // q = 1
    std::uint64_t cut = 0;   // otherwise draw < cut
};
BernoulliCut bernoulli_cut(const Rational& q);
std::pair<Rng, bool> bernoulli(Rng r, const Rational& q);

struct ServiceRegistry {
    struct Constant { bool reply = true; };
    struct RandomPerQ { Rational q; };     // focus random(q), method get
    struct RandomSingle {};                // focus random, method get(q)
    struct Scripted {
        std::vector<bool> replies;
        bool repeat = false;               // otherwise exhaustion means inaction
    };
    using Service = std::variant<Constant, RandomPerQ, RandomSingle, Scripted>;

    std::map<std::string, Service> services;  // keyed by focus (method name when focusless)
    std::optional<Service> fallback;          // `*` line

    static ServiceRegistry constant_true();
};

// Lines: `focus = constant true|false`, `focus = random N/D`,
// `random = single`, `focus = script T,F,... [repeat|inaction]`,
// `* = constant true|false` as fallback. `#` comments.
ServiceRegistry parse_registry_file(const std::string& text);

// Registers the random services every service call in s expects
// (random(q) per-q foci and the single random service).
ServiceRegistry with_random_services(ServiceRegistry reg, const InstructionSequence& s);

struct RunResult {
    enum Outcome { Terminated, Inaction, StepLimit };
    std::vector<std::pair<BasicAction, bool>> trace;  // executed actions with replies
    Outcome outcome = Terminated;
    std::uint64_t steps = 0;  // completed instruction executions
    std::string diagnostic;   // why inaction, when a service could not process
};

// Step-by-step execution. Probabilistic instructions draw from the seeded
// generator directly; basic actions are processed by the registry.
RunResult run_program(const InstructionSequence& s, const ServiceRegistry& reg, std::uint64_t seed,
                      std::uint64_t max_steps);

using FrequencyTable = std::map<std::pair<std::vector<std::string>, RunResult::Outcome>, std::uint64_t>;

// n runs with per-run seeds seed, seed+1, ... (wrapping); counts by visible
// trace shape and outcome.
FrequencyTable sample_many(const InstructionSequence& s, const ServiceRegistry& reg,
                           std::uint64_t seed, std::uint64_t n, std::uint64_t max_steps);

}  // namespace pga
