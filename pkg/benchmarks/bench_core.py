"""Time the compiled and NumPy backends of the two hot kernels.

Usage: python3 benchmarks/bench_core.py [--n 100 200 400] [--B 300] [--h 0.4] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from spectest import _core_py
from spectest.kernels import bartlett_priestley, smoothing_weights

try:
    from spectest import _core
except ImportError:
    _core = None


def make_inputs(n, q, P, B, h, seed=0):
    rng = np.random.default_rng(seed)
    w = smoothing_weights(bartlett_priestley(), h, n)
    diag = rng.normal(size=(n, q, P)) + 1j * rng.normal(size=(n, q, P))
    pooled = diag.mean(axis=1)
    perms = np.argsort(rng.uniform(size=(B, n, q)), axis=2).astype(np.intp)
    return w, diag, pooled, perms


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--q", type=int, default=2)
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--B", type=int, default=300)
    ap.add_argument("--h", type=float, default=0.4, help="bandwidth; the band has about n*h/pi nonzero weights")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = {"python": _core_py}
    if _core is not None:
        backends["cython"] = _core
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':<18}{'n':>6}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    for n in args.n:
        w, diag, pooled, perms = make_inputs(n, args.q, args.p**2, args.B, args.h)
        x = diag.reshape(n, -1)
        for name, call in [
            ("circulant_smooth", lambda m: m.circulant_smooth(w, x)),
            (f"tn_star_batch/B={args.B}", lambda m: m.tn_star_batch(w, diag, pooled, perms)),
        ]:
            times = {b: 1e3 * best_of(lambda m=m: call(m), args.repeat) for b, m in backends.items()}
            ratio = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{name:<18}{n:>6}" + "".join(f"{t:>16.3f}" for t in times.values()) + f"{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
