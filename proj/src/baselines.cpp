#include "mabeam/baselines.hpp"

namespace mabeam {

AoResult run_fpa(const SystemConfig& cfg, const ScenarioState& scen,
                 const AoOptions& opts) {
  return run(cfg, scen, opts, Scheme::Fpa);
}

AoResult run_fb(const SystemConfig& cfg, const ScenarioState& scen,
                const AoOptions& opts) {
  return run(cfg, scen, opts, Scheme::Fb);
}

AoResult run_upper_bound(const SystemConfig& cfg, const ScenarioState& scen,
                         const AoOptions& opts) {
  return run(cfg, scen.perfect(), opts, Scheme::Upper);
}

AoResult run_scheme(const SystemConfig& cfg, const ScenarioState& scen,
                    Scheme scheme, const AoOptions& opts) {
  if (scheme == Scheme::Upper) return run_upper_bound(cfg, scen, opts);
  return run(cfg, scen, opts, scheme);
}

}  // namespace mabeam
