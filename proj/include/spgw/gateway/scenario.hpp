#pragma once

#include <string>

#include "spgw/core/model.hpp"

namespace spgw::gw {

struct ScenarioOptions {
    std::int64_t seed = 1;
    /// Fault injection: drop the federation's card-distribution frames so
    /// the run aborts during finalize.
    bool drop_creation_order = false;
};

struct ScenarioResult {
    bool ok = false;
    std::string failed_step;  // set when !ok
    std::string error;
    Doc report = Doc::object();
};

/// Deterministic end-to-end run of the jazz music store: four gateways,
/// foundation, negotiation, federation, virtualization, traffic and
/// adaptation. Same seed, same report bytes.
ScenarioResult run_music_store_scenario(const ScenarioOptions& options = {});

}  // namespace spgw::gw
