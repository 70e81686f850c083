"""Compare the compiled and numpy round kernels on a full exact-branch trial.

    python benchmarks/bench_kernels.py --n 10 --rounds 6 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hashdistill.belldiag import IIDWernerSpec, werner_distribution
from hashdistill.kernels import backend_module
from hashdistill.protocol import round_linear_maps, sample_schedule


def run(kernels, w0: np.ndarray, maps) -> float:
    w = w0.reshape(1, -1)
    for cols, t in maps:
        w = kernels.split_round(w, cols, t)
    return float(kernels.branch_max_sum(w))


def best_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=6)
    ap.add_argument("--fidelity", type=float, default=0.9)
    ap.add_argument("--variant", default="cnot")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    schedule = sample_schedule(args.n, args.rounds, rng)
    maps = []
    for s in schedule:
        rm = round_linear_maps(s, args.variant)
        maps.append((np.array(rm.transform, dtype=np.uint64), rm.j_star))
    w0 = np.array(werner_distribution(IIDWernerSpec(args.fidelity, args.n)).dense)

    results = {}
    for name in ("python", "cython"):
        try:
            mod = backend_module(name)
        except ImportError:
            print(f"{name:>7}: unavailable (extension not built)")
            continue
        value = run(mod, w0, maps)
        results[name] = (value, best_time(lambda: run(mod, w0, maps), args.repeat))
        print(f"{name:>7}: {results[name][1] * 1e3:9.2f} ms  fidelity={value:.12f}")
    if len(results) == 2:
        (vp, tp), (vc, tc) = results["python"], results["cython"]
        print(f"speedup: {tp / tc:.2f}x  |difference|={abs(vp - vc):.2e}")


if __name__ == "__main__":
    main()
