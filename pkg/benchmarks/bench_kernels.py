"""Compare the numba and numpy gate kernels, then time a full verify run per backend.

    python3 benchmarks/bench_kernels.py [--qubits 16 18 20] [--repeat 5]
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from bqtsim import _kernels

VERIFY_SNIPPET = """
import time
from bqtsim import _kernels, protocol, oracle
from bqtsim.layout import ProtocolConfig
_kernels.warmup()
cfg = ProtocolConfig(2, 2, controlled=True, charlie_mask="1111")
a, b = protocol.input_states(cfg, 1)
t0 = time.perf_counter()
rep = oracle.verify_all_branches(cfg, a, b)
print(_kernels.BACKEND, rep.num_branches, f"{time.perf_counter() - t0:.3f}")
"""


def bench_gates(tables: dict, qubits: list[int], repeat: int) -> None:
    print(f"{'k':>3} {'kernel':>10} " + " ".join(f"{name:>12}" for name in tables))
    for k in qubits:
        rng = np.random.default_rng(k)
        psi = rng.standard_normal(1 << k) + 1j * rng.standard_normal(1 << k)
        psi /= np.linalg.norm(psi)
        q, t = k // 2, k - 1
        cases = {
            "h": lambda K: K["apply_h"](psi, k, q),
            "x": lambda K: K["apply_x"](psi, k, q),
            "z": lambda K: K["apply_z"](psi, k, q),
            "cnot": lambda K: K["apply_cnot"](psi, k, q, t),
            "project": lambda K: K["project"](psi, k, q, 1),
        }
        for name, fn in cases.items():
            times = []
            for K in tables.values():
                fn(K)
                best = min(timeit.repeat(lambda: fn(K), number=3, repeat=repeat)) / 3
                times.append(f"{best * 1e3:10.2f}ms")
            print(f"{k:>3} {name:>10} " + " ".join(f"{s:>12}" for s in times))


def bench_verify() -> None:
    for disable in ("", "1"):
        env = dict(os.environ, BQTSIM_DISABLE_NUMBA=disable)
        if not disable:
            env.pop("BQTSIM_DISABLE_NUMBA")
        out = subprocess.run([sys.executable, "-c", VERIFY_SNIPPET], env=env,
                             capture_output=True, text=True, check=True)
        backend, branches, secs = out.stdout.split()
        print(f"verify (2,2) controlled, {branches} branches: {backend:>6} {secs}s")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[16, 18, 20])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    tables = {"numpy": _kernels.NUMPY_KERNELS}
    fast = _kernels.numba_kernels()
    if fast:
        tables["numba"] = fast
    else:
        print("numba not importable; numpy only")
    bench_gates(tables, args.qubits, args.repeat)
    bench_verify()


if __name__ == "__main__":
    main()
