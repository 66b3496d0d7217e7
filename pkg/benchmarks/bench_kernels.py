"""Compare the compiled and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--rows 256] [--cols 900] [--repeat 50]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from qpl import kernels


def _block(rows: int, cols: int, rng) -> np.ndarray:
    return np.ascontiguousarray(rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))


def _unitary(rng) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    return np.ascontiguousarray(q)


def bench(backend: str, rows: int, cols: int, repeat: int) -> dict[str, float]:
    k = kernels.get_backend(backend)
    rng = np.random.default_rng(0)
    n = rows.bit_length() - 1
    psi, lam, u = _block(rows, cols, rng), _block(rows, cols, rng), _unitary(rng)
    env = np.zeros((4, 4), dtype=complex)
    apply_t = min(timeit.repeat(lambda: k.apply_2q(psi, u, 1, n - 2), number=1, repeat=repeat))
    adj_t = min(timeit.repeat(lambda: k.adjoint_2q(psi, lam, u, 1, n - 2, env), number=1, repeat=repeat))
    return {"apply_2q_ms": 1e3 * apply_t, "adjoint_2q_ms": 1e3 * adj_t}


def agreement(rows: int, cols: int) -> float:
    rng = np.random.default_rng(1)
    psi, lam, u = _block(rows, cols, rng), _block(rows, cols, rng), _unitary(rng)
    n = rows.bit_length() - 1
    outs = []
    for name in ("cython", "numpy"):
        k = kernels.get_backend(name)
        p, l, e = psi.copy(), lam.copy(), np.zeros((4, 4), dtype=complex)
        k.apply_2q(p, u, 0, n - 1)
        k.adjoint_2q(p, l, u, 2, 1, e)
        outs.append((p, l, e))
    return max(float(np.abs(a - b).max()) for a, b in zip(*outs))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=256)
    ap.add_argument("--cols", type=int, default=900)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    print(f"block {args.rows} x {args.cols}, best of {args.repeat}")
    res = {}
    for name in ("cython", "numpy"):
        try:
            res[name] = bench(name, args.rows, args.cols, args.repeat)
        except ImportError:
            print(f"{name}: unavailable")
            continue
        print(f"{name:>9}: " + "  ".join(f"{k}={v:.3f}" for k, v in res[name].items()))
    if len(res) == 2:
        for key in res["numpy"]:
            print(f"speedup {key}: {res['numpy'][key] / res['cython'][key]:.1f}x")
        print(f"max backend difference: {agreement(args.rows, args.cols):.2e}")


if __name__ == "__main__":
    main()
