"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--sizes 100 200 500] [--repeat 5]

Reports best-of-N wall time for batch prediction, leave-one-out and one
full GA run per backend, plus the largest relative disagreement.
"""
import argparse
import time

import numpy as np

from grnndelay import _backend, ga, tracegen
from grnndelay.grnn import Sigma, fit


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_size(n, repeat, backends):
    ds = tracegen.generate(tracegen.GenConfig(n_samples=n, seed=1))
    model = fit(ds, Sigma((0.4, 1.1, 0.7, 2.0, 0.3)))
    q = np.random.default_rng(2).standard_normal((n, 5))
    sigma = model.sigma.expanded()
    y = model.targets
    rows, outs = {}, {}
    for name in backends:
        k = _backend.load(name)
        t_pred, pred = best_of(
            lambda: k.predict(model.patterns, y, sigma, q, float(y.min()), float(y.max())), repeat)
        t_loo, loo = best_of(lambda: k.loo_predict(model.patterns, y, sigma), repeat)
        rows[name] = (t_pred, t_loo)
        outs[name] = (np.asarray(pred), np.asarray(loo))
    return ds, rows, outs


def bench_ga(ds, backends):
    cfg = ga.GaConfig(seed=7)
    saved = _backend.kernels
    out = {}
    try:
        for name in backends:
            _backend.kernels = _backend.load(name)
            t0 = time.perf_counter()
            res = ga.run(ds, cfg)
            out[name] = (time.perf_counter() - t0, res.best_mape)
    finally:
        _backend.kernels = saved
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 500, 1000])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--no-ga", action="store_true", help="skip the end-to-end GA timing")
    args = p.parse_args(argv)

    backends = _backend.available()
    print(f"backends: {', '.join(backends)} (default: {_backend.BACKEND})")
    print(f"{'n':>6} {'backend':>8} {'predict ms':>11} {'loo ms':>9}")
    ga_ds = None
    for n in args.sizes:
        ds, rows, outs = bench_size(n, args.repeat, backends)
        ga_ds = ds if n == 200 else ga_ds
        for name, (tp, tl) in rows.items():
            print(f"{n:>6} {name:>8} {tp * 1e3:>11.3f} {tl * 1e3:>9.3f}")
        if len(outs) == 2:
            (pa, la), (pb, lb) = outs.values()
            rel = max(np.max(np.abs(pa - pb) / pb), np.max(np.abs(la - lb) / lb))
            (ta, _), (tb, _) = rows.values()
            print(f"{'':>6} {'':>8} predict speedup {tb / ta:.1f}x, max rel diff {rel:.1e}")
    if not args.no_ga:
        ga_ds = ga_ds or tracegen.generate(tracegen.GenConfig(n_samples=200, seed=1))
        print(f"\nGA defaults on n={len(ga_ds)}:")
        for name, (t, m) in bench_ga(ga_ds, backends).items():
            print(f"  {name:>8}: {t:.2f}s  best LOO MAPE {m:.4f}%")


if __name__ == "__main__":
    main()
