"""Time the compiled and pure-Python kernels on the same planted networks.

    python3 benchmarks/bench_kernels.py [--communities 8] [--size 40] [--repeat 3]

Each algorithm is run end to end (via ``hpdn.detect``) with one backend
patched in at a time, so the numbers include the Python-side driver code
that both backends share. The partitions are checked for equality, which
doubles as a parity smoke test.
"""
import argparse
import time

import hpdn._kernels as kernels
from hpdn import stats
from hpdn.detect import Algorithm, DetectConfig, detect
from hpdn.ingest import build_hpdn
from hpdn.synth import PlantedConfig, generate


def use_backend(name):
    impl = kernels.load_backend(name)
    for fn in kernels._NAMES:
        setattr(kernels, fn, getattr(impl, fn))


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--communities", type=int, default=8)
    ap.add_argument("--size", type=int, default=40)
    ap.add_argument("--external", type=float, default=2.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only timing the pure-Python backend")

    flows, _ = generate(PlantedConfig(n_communities=args.communities, community_size=args.size,
                                      mean_external_flow=args.external, seed=args.seed))
    g = build_hpdn(flows)
    print(f"network: n={g.n} m={g.n_edges} W={g.total_weight:.0f}")

    jobs = {a.value: (lambda a=a: detect(g, DetectConfig(algorithm=a, seed=args.seed))) for a in Algorithm}
    jobs["stats"] = lambda: stats(g).to_json()

    print(f"{'task':<10}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for task, fn in jobs.items():
        row, results = [], []
        for b in backends:
            use_backend(b)
            t, res = best_of(fn, args.repeat)
            row.append(t)
            results.append(res)
        same = all(r == results[0] for r in results)
        speed = f"{row[-1] / row[0]:.1f}x" if len(row) == 2 and row[0] > 0 else "-"
        flag = "" if same else "  MISMATCH"
        print(f"{task:<10}" + "".join(f"{t:>11.3f}s" for t in row) + f"{speed:>10}{flag}")
    use_backend(kernels.BACKEND)


if __name__ == "__main__":
    main()
