"""numba vs numpy timings for the assembly and RK4 kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Both back ends are called directly, so the env switch is not needed here.
Outputs are checked for equality before timing.
"""

import argparse
import time

import numpy as np
import scipy.sparse as sp

from mixlab import _kernels as K


def best_of(fn, repeat):
    fn()  # warm-up (jit compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def same(a, b):
    # triplet order differs between back ends; compare the assembled matrices
    shape = (max(a[0].max(), b[0].max()) + 1, max(a[1].max(), b[1].max()) + 1)
    A = sp.coo_matrix((a[2], (a[0], a[1])), shape=shape).tocsr()
    B = sp.coo_matrix((b[2], (b[0], b[1])), shape=shape).tocsr()
    return abs(A - B).max() == 0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    cases = []
    for nt, nr in [(65, 129), (129, 257), (257, 513)]:
        ht, R = 1.0 / (nt - 1), 8.0
        h = 2 * R / (nr - 1)
        rho = np.arange(-(nr // 2), nr // 2 + 1) * h
        for name in ("primal", "adjoint"):
            nb = getattr(K, f"_{name}_numba")
            npf = getattr(K, f"_{name}_numpy")
            cases.append((f"{name} {nt}x{nr}", lambda nb=nb, nt=nt, nr=nr, ht=ht, h=h, rho=rho: nb(nt, nr, ht, h, rho),
                          lambda npf=npf, nt=nt, nr=nr, ht=ht, h=h, rho=rho: npf(nt, nr, ht, h, rho)))
    for n in (12000, 120000):
        cases.append((f"rk4 n={n}", lambda n=n: K._rk4_numba(0.0, 0.4696, 12.0 / n, n),
                      lambda n=n: K._rk4_numpy(0.0, 0.4696, 12.0 / n, n)))

    print(f"{'kernel':22s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s}  match")
    for name, f_nb, f_np in cases:
        a, b = f_nb(), f_np()
        if name.startswith("rk4"):
            ok = np.allclose(a[0], b[0], rtol=1e-13, atol=1e-13) and a[1] == b[1]
        else:
            ok = same(a, b)
        t_nb = best_of(f_nb, args.repeat)
        t_np = best_of(f_np, args.repeat)
        print(f"{name:22s} {1e3 * t_nb:12.3f} {1e3 * t_np:12.3f} {t_np / t_nb:8.1f}  {ok}")


if __name__ == "__main__":
    main()
