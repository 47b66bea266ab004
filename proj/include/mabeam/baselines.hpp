#pragma once

#include "mabeam/ao.hpp"

namespace mabeam {

/// Fixed-position benchmark: beamforming alone iterates on the uniform grid.
AoResult run_fpa(const SystemConfig& cfg, const ScenarioState& scen,
                 const AoOptions& opts = {});

/// Fixed-beamforming benchmark: antenna positions alone iterate, beams stay
/// at the matched-filter initialization.
AoResult run_fb(const SystemConfig& cfg, const ScenarioState& scen,
                const AoOptions& opts = {});

/// Perfect-knowledge bound: the full pipeline on a scenario whose estimates
/// are replaced by the truth and whose uncertainty is zero.
AoResult run_upper_bound(const SystemConfig& cfg, const ScenarioState& scen,
                         const AoOptions& opts = {});

/// Dispatch by scheme; Scheme::Proposed is the joint design.
AoResult run_scheme(const SystemConfig& cfg, const ScenarioState& scen,
                    Scheme scheme, const AoOptions& opts = {});

}  // namespace mabeam
