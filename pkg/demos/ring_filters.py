"""
Telling a corner from a stripe
==============================

A thin stripe crossing the sampling rings produces four transitions,
just like a corner. The corrosion degree compares black counts on the
outer ring with those in the 21-pixel disk around the center and
separates the two.
"""

import math

from cmpcorner import adaptive_threshold, evaluate_pixel
from cmpcorner.detector import corrosion_degree
from cmpcorner.sampler import count_corrosion_black, inner_ring, outer_ring, sample_ring
from cmpcorner.synth import render_junction, render_stripe

shape, center, pixel = (41, 41), (20.5, 20.0), (20, 20)
q = math.pi / 4
features = {
    "corner": render_junction(shape, center, angles=[-q, q, math.pi - q, math.pi + q], gap=1.0),
    "stripe": render_stripe(shape, center, angle=math.pi / 12, width=4),
}

for name, gray in features.items():
    binary = adaptive_threshold(gray, 21)
    outer = sample_ring(binary, pixel, outer_ring())
    inner = sample_ring(binary, pixel, inner_ring())
    n1 = int(outer.sum())
    nr = count_corrosion_black(binary, pixel)
    verdict = evaluate_pixel(binary, *pixel)
    print(f"{name}:")
    print(f"  outer ring {''.join(map(str, outer))}   inner ring {''.join(map(str, inner))}")
    print(f"  n1={n1} nR={nr} Cd={corrosion_degree(n1, nr)}")
    print(f"  verdict: {'accepted, R=%d' % verdict.response if verdict.accepted else 'rejected by ' + verdict.reason}")
