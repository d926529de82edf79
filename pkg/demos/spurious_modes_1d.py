"""Low-frequency spurious modes of the row-sum lumped mass on a trimmed interval.

Run with ``python demos/spurious_modes_1d.py``; writes ``spurious_modes_1d.svg``
next to this script.
"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from trimlump.assembly import assemble_consistent, lump
from trimlump.eigen import max_eigenvalue, normalize_and_pair, solve_gevp
from trimlump.geometry import Interval1D
from trimlump.problems import exact_modes_1d
from trimlump.space import build_space
from trimlump.splines import SplineSpace


def pencil(p, eps, N=256):
    dom = Interval1D(eps=eps)
    space = build_space(SplineSpace.uniform(p, p - 1, N), dom, 0.0, ("left",))
    K, M = assemble_consistent(space)
    return dom, K, M


# %% the cut interval (0, 0.75 + eps) leaves a sliver of width eps in the last element
dom, K, M = pencil(3, 1e-6)
L = lump(M)
lam_h = solve_gevp(K, L).values
lam, _ = exact_modes_1d(dom.measure, lam_h.size)
rep = normalize_and_pair(lam_h[:14], lam)
print("p=3, eps=1e-6: first 14 lumped eigenvalues paired with the closest exact one")
for i, (a, j, s) in enumerate(zip(rep.computed, rep.pairing, rep.spurious), 1):
    print(f"  {i:2d}  {a:12.4f}  ->  exact #{j + 1:2d} {lam[j]:12.4f}{'   spurious' if s else ''}")

# %% the extra eigenvalue sinks with eps like eps^(p-2)
print("\nsmallest flagged eigenvalue vs eps")
for p in (3, 4):
    vals = []
    for eps in (1e-4, 1e-5, 1e-6):
        d, Kp, Mp = pencil(p, eps)
        lh = solve_gevp(Kp, lump(Mp)).values
        ex, _ = exact_modes_1d(d.measure, lh.size)
        vals.append(normalize_and_pair(lh[:20], ex).spurious_values.min())
    slope = np.polyfit(np.log([1e-4, 1e-5, 1e-6]), np.log(vals), 1)[0]
    print(f"  p={p}: " + ", ".join(f"{v:.3e}" for v in vals) + f"   slope {slope:.2f}")

# %% while the top of the lumped spectrum (and so the CFL step) does not notice the cut
print("\nlargest eigenvalue, p=3")
for eps in (1e-2, 1e-6, 1e-10):
    _, Kp, Mp = pencil(3, eps)
    print(f"  eps={eps:.0e}: lumped {max_eigenvalue(Kp, lump(Mp)):.6g}   consistent {max_eigenvalue(Kp, Mp):.4g}")

fig, ax = plt.subplots(figsize=(6, 3.5))
ax.semilogy(np.arange(1, lam_h.size + 1) / lam_h.size, lam_h / lam, lw=1)
ax.set_xlabel("j / n")
ax.set_ylabel("lambda_h / lambda")
ax.set_title("row-sum lumped spectrum, p=3, eps=1e-6")
fig.tight_layout()
fig.savefig(Path(__file__).with_suffix(".svg"))
