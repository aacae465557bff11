"""Straight-line reference evaluations used to freeze expected values in the
Rust tests. Run with `python3 color_oracle.py`; nothing here imports the crate."""
import math
import numpy as np

# --- Sony S-Log3 (Sony technical summary) ---
def slog3_encode(x):
    if x >= 0.01125000:
        return (420.0 + math.log10((x + 0.01) / (0.18 + 0.01)) * 261.5) / 1023.0
    return (x * (171.2102946929 - 95.0) / 0.01125000 + 95.0) / 1023.0

def slog3_decode(y):
    if y >= 171.2102946929 / 1023.0:
        return (10.0 ** ((y * 1023.0 - 420.0) / 261.5)) * (0.18 + 0.01) - 0.01
    return (y * 1023.0 - 95.0) * 0.01125000 / (171.2102946929 - 95.0)

print("slog3 encode(0.18) =", repr(slog3_encode(0.18)))
print("slog3 decode(0.0)  =", repr(slog3_decode(0.0)))
print("slog3 decode(1.0)  =", repr(slog3_decode(1.0)))

# --- RED Log3G10 v3 ---
def log3g10_decode(y):
    a, b, c, g = 0.224282, 155.975327, 0.01, 15.1927
    if y < 0:
        return y / g - c
    return (10 ** (y / a) - 1) / b - c
print("log3g10 decode(0) =", repr(log3g10_decode(0.0)), "decode(1) =", repr(log3g10_decode(1.0)))
print("log3g10 decode(1/3) =", repr(log3g10_decode(1/3)))

# --- ARRI LogC3 EI800 ---
def logc3_decode(t):
    cut, a, b, c, d, e, f = 0.010591, 5.555556, 0.052272, 0.247190, 0.385537, 5.367655, 0.092809
    if t > e * cut + f:
        return (10 ** ((t - d) / c) - b) / a
    return (t - f) / e
print("logc3 decode(0) =", repr(logc3_decode(0.0)), "decode(1) =", repr(logc3_decode(1.0)))

# --- Panasonic V-Log ---
def vlog_decode(y):
    b, c, d = 0.00873, 0.241514, 0.598206
    if y < 0.181:
        return (y - 0.125) / 5.6
    return 10 ** ((y - d) / c) - b
print("vlog decode(0) =", repr(vlog_decode(0.0)), "decode(1) =", repr(vlog_decode(1.0)))

# --- CAT02 ---
M = np.array([[0.7328, 0.4296, -0.1624],
              [-0.7036, 1.6975, 0.0061],
              [0.0030, 0.0136, 0.9834]])

def xy_to_XYZ(x, y):
    return np.array([x / y, 1.0, (1 - x - y) / y])

def cat02(xyz, src, dst):
    ls = M @ xy_to_XYZ(*src)
    ld = M @ xy_to_XYZ(*dst)
    lms = M @ np.asarray(xyz)
    return np.linalg.inv(M) @ (lms * (ld / ls))

D50 = (0.3457, 0.3585)
D65 = (0.3127, 0.3290)
D60 = (0.32168, 0.33767)
sample = [0.20, 0.18, 0.12]
print("cat02 D50->D65", sample, "=", [repr(float(v)) for v in cat02(sample, D50, D65)])

# --- gamut NPM ---
def npm(prims, white):
    P = np.array([xy_to_XYZ(*p) for p in prims]).T
    S = np.linalg.solve(P, xy_to_XYZ(*white))
    return P * S

REC709 = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)]
SGAMUT3 = [(0.730, 0.280), (0.140, 0.855), (0.100, -0.050)]
AP0 = [(0.7347, 0.2653), (0.0, 1.0), (0.0001, -0.0770)]

def oetf709(l):
    return 4.5 * l if l < 0.018 else 1.099 * l ** 0.45 - 0.099

def cst(rgb, prims, white):
    xyz = npm(prims, white) @ np.asarray(rgb)
    xyz = cat02(xyz, white, D65)
    lin = np.linalg.inv(npm(REC709, D65)) @ xyz
    lin = np.maximum(lin, 0.0)
    return [min(max(oetf709(v), 0.0), 1.0) for v in lin]

print("cst sgamut3 red (0.45,0.06,0.04) =", [repr(float(v)) for v in cst([0.45, 0.06, 0.04], SGAMUT3, D65)])
print("cst sgamut3 (0.3,0.2,0.1) =", [repr(float(v)) for v in cst([0.3, 0.2, 0.1], SGAMUT3, D65)])
print("cst ap0 (0.35,0.12,0.05) =", [repr(float(v)) for v in cst([0.35, 0.12, 0.05], AP0, D60)])
print("cst ap0 (0.18,0.18,0.18) =", [repr(float(v)) for v in cst([0.18, 0.18, 0.18], AP0, D60)])

# --- roll-off ---
tau = 0.8
print("rolloff(1.0) =", repr(tau + (1 - tau) * (1 - math.exp(-(1.0 - tau) / (1 - tau)))))
