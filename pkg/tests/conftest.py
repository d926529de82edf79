import functools

import numpy as np
import pytest
from hypothesis import settings

from trimlump.assembly import assemble_consistent, assemble_stabilized
from trimlump.problems import make_problem
from trimlump.space import build_space
from trimlump.splines import SplineSpace

settings.register_profile("repo", max_examples=40, deadline=None)
settings.load_profile("repo")


@functools.lru_cache(maxsize=None)
def system(example="ex1d", p=3, N=256, eps=None, gamma=0.0, k=None):
    """(problem, space, K, M) of an example; stabilized when ``gamma > 0``."""
    prob = make_problem(example, eps)
    dim = 1 if example == "ex1d" else 2
    spline = SplineSpace.uniform(p, p - 1 if k is None else k, N, dim)
    space = build_space(spline, prob.domain, gamma, prob.dirichlet_sides, prob.neumann_sides)
    K, M = (assemble_stabilized if gamma > 0 else assemble_consistent)(space)
    return prob, space, K, M


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_spd(rng, n, cond=1e3):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * np.logspace(0, np.log10(cond), n)) @ Q.T


# -- acceptance report -----------------------------------------------------------------

ACCEPTANCE: dict[int, dict] = {}


def record(cid: int, title: str, ok: bool, detail: str) -> None:
    """Collect one part of acceptance criterion ``cid``; all parts must pass."""
    entry = ACCEPTANCE.setdefault(cid, {"title": title, "parts": []})
    entry["parts"].append((bool(ok), detail))
    print(f"C{cid} {'PASS' if ok else 'FAIL'} {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        entry = ACCEPTANCE[cid]
        ok = all(p[0] for p in entry["parts"])
        detail = "; ".join(d for _, d in entry["parts"])
        terminalreporter.write_line(f"C{cid:<2} {'PASS' if ok else 'FAIL'}  {entry['title']}: {detail}")
