"""Two hidden-variable models for the PR box, one with negative responses, one with a negative state.

Run: python demos/pr_box_models.py
"""
import itertools

from nsbox import gallery
from nsbox.classical import build_negative_measurements, build_negative_state, compress, evaluate, negativity


def show_state(m, limit=8):
    rows = [(labels, w) for labels, w in zip(itertools.product(*m.spaces), m.state.ravel()) if w != 0]
    for labels, w in rows[:limit]:
        print(f"    {' '.join(str(l) for l in labels):>14}  {w}")
    if len(rows) > limit:
        print(f"    ... {len(rows) - limit} more nonzero weights")


pr = gallery.pr_box()
print("PR box, p(a|x) for x = (2,2):", [str(pr(a, (2, 2))) for a in pr.scenario.output_tuples()])

for build in (build_negative_measurements, build_negative_state):
    m = build(pr)
    small = compress(m)
    neg = negativity(m)
    print(f"\n{build.__name__}: spaces {m.sizes}, compressed {small.sizes}")
    print(f"  state negativity {neg.state}, worst response negativity {neg.response}")
    print("  nonzero state weights (uncompressed):")
    show_state(m)
    assert evaluate(m) == pr and evaluate(small) == pr
    print("  evaluate(model) == PR box, with and without compression")
