"""Decide locality for a few boxes and print the exact certificates.

Run: python demos/locality_certificates.py
"""
from fractions import Fraction

from nsbox import gallery
from nsbox.box import QuasiBox
from nsbox.locality import chsh_functional, is_local

s = gallery.CHSH_SCENARIO


def noisy_pr(v):
    return QuasiBox(s, v * gallery.pr_box().table + (1 - v) * gallery.uniform_box(s).table)


for v in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 5), Fraction(1)):
    cert = is_local(noisy_pr(v))
    if cert.is_local:
        mix = ", ".join(f"{w}" for w in cert.weights.values())
        print(f"v = {v}: LOCAL, mixture of {len(cert.weights)} strategies with weights {mix}")
    else:
        print(f"v = {v}: NONLOCAL, Bell value {cert.box_value} > local bound {cert.local_bound}")

cert = is_local(gallery.tsirelson_box(), functional=chsh_functional())
print(f"\nTsirelson box under CHSH: {float(cert.box_value):.12f} > {cert.local_bound}")
