"""Monte Carlo with signed weights: cost grows with the total negativity of the model.

Run: python demos/signed_sampling.py
"""
from nsbox import gallery
from nsbox.classical import build_negative_measurements, build_negative_state, compress, sample_signed

pr = gallery.pr_box()
x = (2, 2)
print(f"exact p(a|{x}):", [str(pr(a, x)) for a in pr.scenario.output_tuples()])

for build in (build_negative_measurements, build_negative_state):
    for m in (build(pr), compress(build(pr))):
        tag = "compressed" if m.compressed else "full"
        for shots in (1_000, 100_000):
            est = sample_signed(m, x, shots, seed=1)
            cells = "  ".join(f"{mu:+.3f}±{se:.3f}" for mu, se in zip(est.mean, est.stderr))
            print(f"{build.__name__:28} {tag:10} {shots:>7} shots  {cells}")
