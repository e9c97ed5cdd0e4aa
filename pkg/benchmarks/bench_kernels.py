"""Compare the compiled and pure-Python RK4 kernels.

Usage: python3 benchmarks/bench_kernels.py [--cutoffs 10 25 50 100] [--steps 200] [--repeat 3]
"""

import argparse
import time

import numpy as np

from thermocoh import kernels
from thermocoh.hilbert import initial_state
from thermocoh.model import SystemParams, collapse_channels, hamiltonian


def bench(cutoff: int, steps: int, repeat: int, backend: str) -> float:
    p = SystemParams(n_m=0.1, gamma_m=1e-3, gamma_q1=1e-2, n_q=0.1, cutoff=cutoff)
    gen = kernels.banded_generator(hamiltonian(p), [c.jump for c in collapse_channels(p)], cutoff + 1)
    rho0 = np.array(initial_state(p.thermal, cutoff).matrix, dtype=np.complex128)
    best = float("inf")
    for _ in range(repeat):
        rho = rho0.copy()
        start = time.perf_counter()
        kernels.rk4_inplace(gen, rho, 1e-3, steps, backend)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cutoffs", type=int, nargs="+", default=[10, 25, 50, 100])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["compiled"] if kernels.COMPILED_AVAILABLE else [])
    print(f"default backend: {kernels.BACKEND}; {args.steps} RK4 steps, best of {args.repeat}")
    print(f"{'cutoff':>6} {'dim':>5} " + " ".join(f"{b + ' [s]':>14}" for b in backends) + f" {'speedup':>8}")
    for n in args.cutoffs:
        times = [bench(n, args.steps, args.repeat, b) for b in backends]
        speed = f"{times[0] / times[1]:8.2f}" if len(times) == 2 else f"{'n/a':>8}"
        print(f"{n:6d} {2 * (n + 1):5d} " + " ".join(f"{t:14.4f}" for t in times) + f" {speed}")


if __name__ == "__main__":
    main()
