"""The pure-numpy fallback gives the same answers as the compiled kernels."""
import json
import os
import subprocess
import sys

import numpy as np

import bregcs

SCRIPT = r"""
import json
import numpy as np
import bregcs
from bregcs.confseq import envelope
from bregcs.families import FamilyKind
from bregcs.glr import GlrConfig, run_detector
from bregcs.baselines import hedged_capital_envelope

rng = np.random.default_rng(0)
xb = rng.binomial(1, 0.7, 60).astype(float)
env = envelope(FamilyKind("Bernoulli"), xb)
envg = envelope(FamilyKind("Gamma", 2.0), rng.gamma(2.0, 1.0, 40))
xv = np.r_[rng.normal(0, 1, 40), rng.normal(0, 4, 40)]
hit = run_detector(FamilyKind("GaussianVariance", 0.0), xv, GlrConfig(horizon=80, scan=1.1))
lo, hi = hedged_capital_envelope(xb[:30], 0.05, step=1e-3)
print(json.dumps({"numba": bregcs.USING_NUMBA, "bern": [env.lower.tolist(), env.upper.tolist()],
                  "gamma": [envg.lower.tolist(), envg.upper.tolist()], "glr": hit,
                  "hc": [lo.tolist(), hi.tolist()]}))
"""


def _run(disable):
    env = dict(os.environ, BREGCS_DISABLE_NUMBA=disable)
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_fallback_matches_compiled():
    slow = _run("1")
    fast = _run("0")
    assert slow["numba"] is False
    assert fast["numba"] is bregcs.USING_NUMBA
    for key in ("bern", "gamma", "hc"):
        a, b = np.array(fast[key]), np.array(slow[key])
        assert np.allclose(a, b, rtol=1e-9, atol=1e-12, equal_nan=True)
    assert fast["glr"] == slow["glr"]
