#pragma once

#include <iosfwd>

// Fast invariant suite behind the selftest command: named checks over the
// geometry kernel, the reference constructions, the walk route agreement,
// and the run plumbing, each printing one ok/FAIL line.  Designed to finish
// well under a minute.

namespace hwalk {

// Deliberate faults, used to demonstrate that the suite notices: the checks
// evaluate the horofunction through a hook this struct can flip.  Production
// code never looks at it.
struct SelftestInjection {
  bool busemann_sign_flip{false};
};

// Runs every check, streaming one line per check plus a summary, and
// returns the number of failures (0 means success).
int run_selftest(const SelftestInjection& inj, std::ostream& os);

}  // namespace hwalk
