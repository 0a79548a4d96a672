"""Time each hot kernel under every available backend.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from svamp.bell import BELL_TABLE
from svamp.boxes import noisy_box, quantum_ideal_box
from svamp.extractors import MODULI
from svamp.kernels import available_backends


def cases(rng):
    n = 200_000
    probs = rng.uniform(0.45, 0.55, (4, 8))
    ubits = rng.random((n, 4))
    uout = rng.random(n)
    cdf = np.ascontiguousarray(np.cumsum(noisy_box(quantum_ideal_box(), 0.1).p, axis=1))
    table = np.ascontiguousarray(BELL_TABLE.astype(np.uint8))
    a = rng.integers(0, 2 ** 63, n, dtype=np.uint64)
    b = rng.integers(0, 2 ** 63, n, dtype=np.uint64)
    xs = rng.choice(1 << 16, 4096, replace=False).astype(np.uint64)
    ts = rng.choice(1 << 16, 1024, replace=False).astype(np.uint64)
    tab = rng.normal(size=(273, 530))
    return {
        "gf_mul_array n=64 (2e5)": lambda k: k.gf_mul_array(a, b, 64, MODULI[64]),
        "product_histogram n=16 (4M pairs)": lambda k: k.product_histogram(xs, ts, 16, MODULI[16], 4),
        "simulate_iid_rounds (2e5)": lambda k: k.simulate_iid_rounds(probs, cdf, ubits, uout, table),
        "pivot_inplace 273x530": lambda k: k.pivot_inplace(tab.copy(), 5, 9),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    work = cases(np.random.default_rng(0))
    names = sorted(backends)
    print(f"{'kernel':36s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in work.items():
        best = {}
        for name in names:
            mod = backends[name]
            best[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{label:36s}" + "".join(f"{best[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in best:
            row += f"{best['python'] / best['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
