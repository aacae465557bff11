"""Straight-line evaluation of the grading pipeline for the golden-vector test.

Stage order: gain, clamp, adaptive lift, clamp, gamma (x^(1/g)), contrast about
pivot, Rec.709-weighted saturation, exponential shoulder above tau, clamp.
Prints a Rust array literal consumed by crates/core/tests/cdl_golden.rs."""
import math
import random

W = (0.2126, 0.7152, 0.0722)

def clamp(v):
    return min(max(v, 0.0), 1.0)

def shoulder(x, tau):
    if x <= tau:
        return x
    return tau + (1 - tau) * (1 - math.exp(-(x - tau) / (1 - tau)))

def grade(rgb, lift, gamma, gain, sat, con, piv, tau):
    x = [clamp(rgb[i] * gain[i]) for i in range(3)]
    x = [clamp(x[i] + lift[i] * (1.0 - x[i])) for i in range(3)]
    x = [0.0 if x[i] == 0.0 else x[i] ** (1.0 / gamma[i]) for i in range(3)]
    x = [(x[i] - piv) * con + piv for i in range(3)]
    y = W[0] * x[0] + W[1] * x[1] + W[2] * x[2]
    x = [y + sat * (x[i] - y) for i in range(3)]
    if tau is not None:
        x = [shoulder(v, tau) for v in x]
    return [clamp(v) for v in x]

rng = random.Random(20240611)
r = lambda a, b: round(rng.uniform(a, b), 4)
print("// rgb, lift, gamma, gain, saturation, contrast, pivot, rolloff_tau (<0 = off), expected")
for n in range(20):
    rgb = [r(0, 1) for _ in range(3)]
    lift = [r(-0.1, 0.1) for _ in range(3)]
    gamma = [r(0.7, 1.5) for _ in range(3)]
    gain = [r(0.8, 1.3) for _ in range(3)]
    sat = r(0.5, 1.6)
    con = r(0.8, 1.4)
    piv = r(0.3, 0.6)
    tau = 0.8 if n % 2 == 0 else None
    out = grade(rgb, lift, gamma, gain, sat, con, piv, tau)
    f = lambda v: "[" + ", ".join(repr(float(t)) for t in v) + "]"
    print(f"    Golden {{ rgb: {f(rgb)}, lift: {f(lift)}, gamma: {f(gamma)}, gain: {f(gain)}, "
          f"saturation: {sat!r}, contrast: {con!r}, pivot: {piv!r}, tau: {(tau if tau else -1.0)!r}, "
          f"expected: {f(out)} }},")
