"""Independent oracle for the shipped potential's two s-wave levels.

Dense symmetric eigensolve (numpy) of the reduced-wave finite-difference
Hamiltonian on a shorter box, at the production spacing and at two refined
spacings; the refined pair is Richardson-extrapolated (second-order scheme)
to give a continuum estimate.
"""
import json
import numpy as np

DEPTH, WIDTH = 4.0, 2.0
R_BOX = 60.0


def levels(dr):
    n = int(round(R_BOX / dr)) - 1
    r = dr * np.arange(1, n + 1)
    v = -DEPTH * np.exp(-r**2 / (2 * WIDTH**2))
    h = np.diag(2.0 / dr**2 + v) - np.diag(np.full(n - 1, 1.0 / dr**2), 1) \
        - np.diag(np.full(n - 1, 1.0 / dr**2), -1)
    e = np.linalg.eigvalsh(h)
    return e[:2]


prod = levels(0.1)
fine, finer = levels(0.05), levels(0.025)
cont = finer + (finer - fine) / 3.0
out = {
    "potential": {"shape": "gaussian_well", "depth": DEPTH, "width": WIDTH},
    "dr": 0.1,
    "e0_at_dr": prod[0], "e1_at_dr": prod[1],
    "e0_continuum": cont[0], "e1_continuum": cont[1],
}
with open("spectrum_golden.json", "w") as f:
    json.dump({k: (float(v) if isinstance(v, np.floating) else v) for k, v in out.items()}, f, indent=2)
print(out)
