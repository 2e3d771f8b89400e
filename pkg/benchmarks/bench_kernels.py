"""Compare the compiled context-gather kernel against the numpy fallback.

Run:  python benchmarks/bench_kernels.py

Context gathering is the only hot loop in the package that is not a BLAS
matrix product, so it is the only piece with a compiled variant. Both
implementations must agree bitwise; this script reports timings and
verifies agreement on every measured case.
"""

from __future__ import annotations

import time

import numpy as np

from naide._kernels import _gather_py
from naide.context import pad_for_context

try:
    from naide._kernels import _gather as _gather_c
except ImportError:
    _gather_c = None


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(height: int, width: int, k: int, batch: int, repeats: int = 5):
    rng = np.random.default_rng(0)
    pixels = rng.uniform(0.0, 1.0, size=(height, width))
    padded = pad_for_context(pixels, k)
    rows = rng.integers(0, height, size=batch).astype(np.intp)
    cols = rng.integers(0, width, size=batch).astype(np.intp)
    out_py = np.empty((batch, k * k - 1))
    out_c = np.empty_like(out_py)

    t_py = _time(lambda: _gather_py.gather_contexts(padded, rows, cols, k, out_py), repeats)
    if _gather_c is None:
        return t_py, None, True
    t_c = _time(lambda: _gather_c.gather_contexts(padded, rows, cols, k, out_c), repeats)
    return t_py, t_c, bool(np.array_equal(out_py, out_c))


def main():
    cases = [
        (64, 64, 7, 128),
        (64, 64, 7, 4096),
        (256, 256, 7, 65536),
        (256, 256, 17, 128),
        (256, 256, 17, 65536),
    ]
    print(f"{'image':>10} {'k':>3} {'batch':>7} {'numpy':>10} {'compiled':>10} {'speedup':>8}  bitwise")
    for height, width, k, batch in cases:
        t_py, t_c, equal = bench_case(height, width, k, batch)
        if t_c is None:
            print(f"{height}x{width:<6} {k:>3} {batch:>7} {t_py*1e3:>9.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        print(
            f"{height}x{width:<6} {k:>3} {batch:>7} {t_py*1e3:>9.2f}ms {t_c*1e3:>9.2f}ms "
            f"{t_py/t_c:>7.1f}x  {'equal' if equal else 'MISMATCH'}"
        )
        if not equal:
            raise SystemExit("backend outputs differ")
    if _gather_c is None:
        print("compiled kernel not built; numpy fallback only")


if __name__ == "__main__":
    main()
