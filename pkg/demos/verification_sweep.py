"""End-to-end verification sweep.

Runs the full inequality suite on a seeded batch of random instances:
exact-oracle equivalences, MGF and tail dominations, spectral
cross-checks, the coupled two-chain comparison, and the trace power
step (whose weaker printed prefactor is reported as an erratum
candidate rather than asserted).  Everything is deterministic in the
seed; rerunning reproduces the table byte for byte.
"""
from matconc import mc

records = mc.verify_all(seed=2026, instance_count=50, trials=20000)

width = max(len(r.inequality_id) for r in records)
total = 0
for r in records:
    total += r.violations
    status = "ok " if r.violations == 0 else "BAD"
    print(f"{status} {r.inequality_id:<{width}}  instances={r.instances_tested:5d}  "
          f"violations={r.violations}  worst margin={r.worst_margin: .3e}")
    if r.note:
        print(f"    note: {r.note}")

print(f"\ntotal violations: {total}")

# the failure path: damage one bound on purpose and watch it flag
damaged = mc.verify_all(seed=2026, instance_count=10, trials=5000,
                        corrupt="two-state-eta-envelope")
flagged = [r for r in damaged if r.violations > 0]
print(f"with an injected violation: {flagged[0].inequality_id} "
      f"reports {flagged[0].violations} violations")
