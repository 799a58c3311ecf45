"""Regenerate src/mwpt/_daubechies.py (minimum-phase Daubechies low-pass taps).

Spectral factorisation at 60 significant digits with mpmath; run once, the
output is committed.  Requires mpmath (not a runtime dependency).
"""
import sys

import mpmath as mp

mp.mp.dps = 60


def daubechies_lowpass(N):
    # P(y) = sum_k C(N-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z)/4
    coeffs = [mp.binomial(N - 1 + k, k) for k in range(N)]
    roots_y = mp.polyroots(coeffs[::-1], maxsteps=500, extraprec=400) if N > 1 else []
    zs = []
    for y in roots_y:
        # z + 1/z = 2 - 4y
        s = 2 - 4 * y
        disc = mp.sqrt(s * s - 4)
        z1 = (s + disc) / 2
        z2 = (s - disc) / 2
        zs.append(z1 if abs(z1) < 1 else z2)
    poly = [mp.mpf(1)]
    for _ in range(N):
        poly = _mul(poly, [mp.mpf(1), mp.mpf(1)])
    for z in zs:
        poly = _mul(poly, [mp.mpf(1), -z])
    h = [mp.re(c) for c in poly]
    scale = mp.sqrt(2) / mp.fsum(h)
    h = [c * scale for c in h]
    # book convention: largest taps first (minimum phase in z^-1)
    if abs(h[0]) < abs(h[-1]):
        h = h[::-1]
    return h


def _mul(a, b):
    out = [mp.mpc(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def main(path):
    lines = [
        '"""Minimum-phase Daubechies low-pass taps, db1..db20 (unit l2 norm).',
        "",
        "Generated by scripts/gen_daubechies.py; do not edit by hand.",
        '"""',
        "",
        "DAUBECHIES_LOWPASS = {",
    ]
    for N in range(1, 21):
        h = daubechies_lowpass(N)
        lines.append(f"    {N}: (")
        for c in h:
            lines.append(f"        {mp.nstr(c, 20, min_fixed=-1, max_fixed=1)},")
        lines.append("    ),")
    lines.append("}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
