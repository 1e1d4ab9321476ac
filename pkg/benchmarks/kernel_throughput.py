"""Throughput comparison of the compiled and pure evaluation kernels.

Run as a script. Reports ns per Hankel pair for each dispatch band and
for the two aggregate kernels, plus the worst relative deviation
between backends on the same inputs.
"""

import math
import time

import numpy as np

from extcloak import _kernels_py as pure

try:
    from extcloak import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, *args, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _band(rng, n, r_lo, r_hi):
    r = rng.uniform(r_lo, r_hi, n)
    a = rng.uniform(-0.98 * math.pi, 0.98 * math.pi, n)
    return r * np.exp(1j * a)


def main():
    rng = np.random.default_rng(7)
    n = 200_000
    bands = {
        "series (|z| <= 3.5)": _band(rng, n, 0.1, 3.4),
        "recurrence (3.5 < |z| <= 16)": _band(rng, n, 3.6, 15.5),
        "asymptotic (|z| > 16)": _band(rng, n, 16.5, 60.0),
        "mixed": _band(rng, n, 0.1, 60.0),
    }
    impls = [("pure", pure)]
    if compiled is not None:
        impls.insert(0, ("compiled", compiled))

    print(f"hankel01, {n} points per band")
    for label, z in bands.items():
        row = [f"  {label:<30}"]
        results = {}
        for name, mod in impls:
            dt = _time(mod.hankel01, z)
            results[name] = mod.hankel01(z)
            row.append(f"{name} {dt / n * 1e9:7.0f} ns/pt")
        if len(results) == 2:
            h0c, _ = results["compiled"]
            h0p, _ = results["pure"]
            dev = np.max(np.abs(h0c - h0p) / np.abs(h0p))
            row.append(f"agree {dev:.1e}")
        print("  ".join(row))

    t = np.linspace(0, 2 * math.pi, 512, endpoint=False)
    qx, qy = 4 + np.cos(t), np.sin(t)
    ca = np.exp(1j * t)
    cb = 0.3 * np.exp(-2j * t)
    px = rng.uniform(-2, 2, 2000)
    py = rng.uniform(-2, 2, 2000)
    k = 10.0 + 0.5j
    print(f"\nmixed_layer_eval, {px.size} points x {qx.size} nodes")
    for name, mod in impls:
        dt = _time(mod.mixed_layer_eval, px, py, qx, qy,
                   np.cos(t), np.sin(t), ca, cb, k, 60.0)
        print(f"  {name:<9} {dt / (px.size * qx.size) * 1e9:7.0f} ns/pair")

    coef = rng.normal(size=(10, 45)) + 1j * rng.normal(size=(10, 45))
    cx = rng.uniform(5, 15, 10)
    cy = rng.uniform(-5, 5, 10)
    print(f"\nmultipole_eval, {px.size} points x {cx.size} devices x 45 orders")
    for name, mod in impls:
        dt = _time(mod.multipole_eval, px, py, cx, cy, coef, k, 60.0)
        print(f"  {name:<9} {dt / (px.size * cx.size) * 1e9:7.0f} ns/(pt,dev)")


if __name__ == "__main__":
    main()
