"""Compare the compiled and pure-Python tree kernels.

    python3 benchmarks/bench_kernels.py [--n 400] [--repeat 50]

Both backends are run on the same index arrays; the script checks that
they agree before timing them.
"""

import argparse
import timeit

import numpy as np

from polyatest import kernels
from polyatest.marginal import DEFAULT_ALPHA, DEFAULT_SPEC
from polyatest.partition import cell_index, interleave


def _inputs(n, seed):
    rng = np.random.default_rng(seed)
    x, z = rng.standard_normal(n), rng.standard_normal(n)
    ix, iz = cell_index(x, DEFAULT_SPEC), cell_index(z, DEFAULT_SPEC)
    path = interleave(ix, iz)
    depth = DEFAULT_SPEC.depth(n)
    local = np.array([DEFAULT_SPEC.depth(m) for m in range(n + 1)], dtype=np.int_)
    return {
        "ml_1d": lambda k: k.log_ml_1d_idx(ix, depth, DEFAULT_ALPHA.levels(depth), True),
        "ml_2d": lambda k: k.log_ml_2d_idx(path, depth, DEFAULT_ALPHA.levels(depth), True),
        "condopt": lambda k: k.condopt_idx(ix, iz, depth, local, DEFAULT_ALPHA.levels(int(local.max())), 0.5, True),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[100, 400, 1500])
    parser.add_argument("--repeat", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    names = sorted(kernels.BACKENDS)
    if "compiled" not in names:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
    print(f"{'kernel':<8} {'n':>5} " + " ".join(f"{b + ' (us)':>14}" for b in names) + f" {'speedup':>8}")
    for n in args.n:
        for name, call in _inputs(n, args.seed).items():
            values = [call(kernels.BACKENDS[b]) for b in names]
            assert np.allclose(values, values[0], rtol=1e-10, atol=1e-10), (name, values)
            times = {}
            for b in names:
                best = min(timeit.repeat(lambda: call(kernels.BACKENDS[b]), number=1, repeat=args.repeat))
                times[b] = best * 1e6
            speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
            print(f"{name:<8} {n:>5} " + " ".join(f"{times[b]:>14.1f}" for b in names) + f" {speed:>8.1f}")


if __name__ == "__main__":
    main()
