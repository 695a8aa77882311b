"""Compare the numba kernels with the pure-numpy fallback.

Each path runs in its own interpreter because the switch
(BREGCS_DISABLE_NUMBA) is read at import time.  The numba figures exclude
compilation: every workload is run once before timing.

    python3 benchmarks/bench_kernels.py [--reps 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = ("envelope_bernoulli", "first_exit_gamma", "glr_variance", "hedged_capital")


def _worker(reps):
    import numpy as np

    import bregcs
    from bregcs import baselines as bl
    from bregcs.confseq import envelope_from_stats, first_exit
    from bregcs.families import FamilyKind, cumulative_stats
    from bregcs.glr import GlrConfig, run_detector

    rng = np.random.default_rng(7)
    bern = FamilyKind("Bernoulli")
    xb = rng.binomial(1, 0.8, 200).astype(float)
    sb = cumulative_stats(bern, xb)
    gam = FamilyKind("Gamma", 2.0)
    sg = cumulative_stats(gam, rng.gamma(2.0, 1.5, 200))
    var = FamilyKind("GaussianVariance", 0.0)
    xv = np.r_[rng.normal(0, 1, 50), rng.normal(0, 3, 50)]
    cfg = GlrConfig(horizon=100, scan=1.1)

    jobs = {
        "envelope_bernoulli": lambda: envelope_from_stats(bern, sb, 1.0, 0.05).lower,
        "first_exit_gamma": lambda: first_exit(gam, sg, 1.0, 0.05, 1.5),
        "glr_variance": lambda: run_detector(var, xv, cfg),
        "hedged_capital": lambda: bl.hedged_capital_envelope(xb[:100], 0.05, step=1e-3)[0],
    }
    out = {"numba": bregcs.USING_NUMBA}
    for name in WORKLOADS:
        fn = jobs[name]
        result = fn()  # warm-up / compile
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        out[name] = {"seconds": min(times), "result": np.asarray(result, dtype=float).ravel().tolist()}
    print(json.dumps(out))


def _run(disable, reps):
    env = dict(os.environ, BREGCS_DISABLE_NUMBA="1" if disable else "0")
    proc = subprocess.run([sys.executable, __file__, "--worker", "--reps", str(reps)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--worker", action="store_true")
    args = ap.parse_args()
    if args.worker:
        _worker(args.reps)
        return
    import numpy as np

    fast = _run(False, args.reps)
    slow = _run(True, args.reps)
    if not fast["numba"]:
        print("numba not importable; both runs use the fallback")
    print(f"{'workload':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name in WORKLOADS:
        a, b = fast[name], slow[name]
        ra, rb = np.array(a["result"]), np.array(b["result"])
        with np.errstate(invalid="ignore"):
            diff = np.nanmax(np.abs(np.where(ra == rb, 0.0, ra - rb))) if ra.size else 0.0
        print(f"{name:<22}{a['seconds']:>12.4f}{b['seconds']:>12.4f}{b['seconds'] / a['seconds']:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
