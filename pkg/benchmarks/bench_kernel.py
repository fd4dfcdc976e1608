"""Throughput comparison of the two binary32 kernel backends.

Runs the same random workload through the compiled extension and the
pure-Python fallback, checks they agree bit-for-bit, and prints a table.

    python benchmarks/bench_kernel.py [--n 200000]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from boundflow.ieee32 import _kernel_py  # noqa: E402

try:
    from boundflow.ieee32 import _kernel_c
except ImportError:
    _kernel_c = None


def bench_scalar(kernel, name: str, a: list[int], b: list[int]) -> dict[str, float]:
    out = {}
    for op in ("add", "mul", "div"):
        fn = getattr(kernel, f"b32_{op}")
        t0 = time.perf_counter()
        for x, y in zip(a, b):
            fn(x, y, 0)
        dt = time.perf_counter() - t0
        out[op] = len(a) / dt
    t0 = time.perf_counter()
    for x in a:
        kernel.b32_sqrt(x, 0)
    out["sqrt"] = len(a) / (time.perf_counter() - t0)
    return out


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=200_000)
    args = parser.parse_args()

    rng = np.random.default_rng(42)
    a_arr = rng.integers(0, 2 ** 32, args.n, dtype=np.uint32)
    b_arr = rng.integers(0, 2 ** 32, args.n, dtype=np.uint32)
    a = [int(v) for v in a_arr]
    b = [int(v) for v in b_arr]

    print(f"workload: {args.n} random bit-pattern pairs per op\n")
    py = bench_scalar(_kernel_py, "pure-python", a, b)
    rows = [("pure-python scalar", py)]

    if _kernel_c is None:
        print("compiled kernel not built (python setup.py build_ext --inplace)")
    else:
        mismatch = 0
        for op in ("add", "sub", "mul", "div"):
            for mode in (0, 1, 2):
                got_c = _kernel_c.binary_op_arr(op, a_arr[:20000], b_arr[:20000], mode)
                got_p = [getattr(_kernel_py, f"b32_{op}")(x, y, mode)
                         for x, y in zip(a[:20000], b[:20000])]
                mismatch += int((got_c != np.array(got_p, dtype=np.uint32)).sum())
        print(f"bit-agreement check (240k mixed-mode ops): {mismatch} mismatches\n")

        cc = bench_scalar(_kernel_c, "compiled", a, b)
        rows.append(("compiled scalar", cc))

        batch = {}
        for op in ("add", "mul", "div"):
            t0 = time.perf_counter()
            _kernel_c.binary_op_arr(op, a_arr, b_arr, 0)
            batch[op] = args.n / (time.perf_counter() - t0)
        t0 = time.perf_counter()
        _kernel_c.sqrt_arr(a_arr, 0)
        batch["sqrt"] = args.n / (time.perf_counter() - t0)
        rows.append(("compiled batch", batch))

    header = f"{'backend':22s}" + "".join(f"{op:>12s}" for op in ("add", "mul", "div", "sqrt"))
    print(header)
    print("-" * len(header))
    for name, res in rows:
        line = f"{name:22s}" + "".join(f"{res[op] / 1e6:10.2f}M " for op in ("add", "mul", "div", "sqrt"))
        print(line)
    if _kernel_c is not None:
        speedup = rows[1][1]["add"] / rows[0][1]["add"]
        print(f"\nscalar speedup (add): {speedup:.1f}x; batch vs pure scalar: "
              f"{rows[2][1]['add'] / rows[0][1]['add']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
