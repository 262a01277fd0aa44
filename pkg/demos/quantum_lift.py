"""Lift the classical models to diagonal density operators and POVMs, then check them.

Run: python demos/quantum_lift.py
"""
from nsbox import gallery
from nsbox.classical import build_negative_measurements, build_negative_state, compress
from nsbox.quantum import evaluate_trace, lift, verify

box = gallery.tsirelson_box()

for build in (build_negative_measurements, build_negative_state):
    qm = lift(compress(build(box)))
    r = verify(qm)
    print(f"{build.__name__}: local dimensions {qm.dims}, trace {r.trace}")
    print(f"  POVMs complete: {r.complete}, one shared eigenbasis: {r.commuting}")
    print(f"  positive state: {r.state_positive}, positive measurements: {r.measurements_positive}")
    print(f"  negative entries: state {len(r.negative_state_entries)}, measurements {len(r.negative_measurement_entries)}")
    assert evaluate_trace(qm) == box
    print("  tr(M_a1 x M_a2 rho) reproduces the Tsirelson box exactly\n")

print("Neither lift is an ordinary quantum model: one side is always non-positive.")
