"""Declarative experiments: configuration, validation and the artifact-writing runner.

A configuration is a YAML mapping::

    example: ex1d            # ex1d | rot_square | plate | perforated
    eps: 1.0e-6              # trimming parameter (example default if omitted)
    degree: 3                # p
    continuity: 2            # k (defaults to p - 1)
    N: 256                   # background subdivisions per direction
    mass: rowsum             # consistent | rowsum | absrowsum | block(b)
    stabilization: off       # off | on | {gamma: 0.1}
    integrator:
      scheme: central_difference   # or newmark
      T: 3.0
      safeguard: 0.85
      dt: null               # override; newmark defaults to the row-sum CFL step,
                             # central differences to the CFL step of the lumped mass
      stride: null           # output every stride-th step (n_steps // 100)
    outputs: [spectrum, trajectory, error-series]
    modes: 10                # number of modes written by the modes output
    spectrum_modes: 20       # rows of spectrum.csv (lowest modes), or all
    out: results/ex1d
    seed: 0
    params: {}               # extra keyword arguments of the example factory

Missing keys take the example defaults listed in :data:`EXAMPLE_DEFAULTS`.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .assembly import (LumpingError, assemble_consistent, assemble_stabilized, field_evaluator,
                       l2_project, lump)
from .dynamics import IntegratorConfig, Rhs, critical_timestep, integrate
from .eigen import eigen_project, max_eigenvalue, normalize_and_pair, solve_gevp
from .metrics import error_series
from .problems import exact_modes_1d, make_problem
from .space import build_space
from .splines import SplineSpace

OUTPUTS = ("spectrum", "modes", "trajectory", "error-series", "projection-coefficients")
MASS_SCHEMES = ("consistent", "rowsum", "absrowsum", "block")
DEFAULT_GAMMA = 0.1

EXAMPLE_DEFAULTS = {
    "ex1d": {"degree": 3, "N": 256},
    "rot_square": {"degree": 3, "N": 128},
    "plate": {"degree": 2, "N": 48},
    "perforated": {"degree": 3, "N": 56},
}

_KEYS = {"example", "eps", "degree", "continuity", "N", "mass", "stabilization", "integrator",
         "outputs", "modes", "spectrum_modes", "out", "seed", "params"}
_INTEGRATOR_KEYS = {"scheme", "T", "safeguard", "dt", "stride", "beta", "gamma"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def parse_mass(spec) -> tuple[str, int]:
    """``"block(4)"`` -> ``("block", 4)``; other schemes carry block size 0."""
    s = str(spec).strip().lower()
    m = re.fullmatch(r"block\s*(?:\(\s*(\d+)\s*\)|(\d+))?", s)
    if m:
        b = int(m.group(1) or m.group(2) or 4)
        if b < 1:
            raise ConfigError("block size must be positive")
        return "block", b
    if s not in MASS_SCHEMES:
        raise ConfigError(f"unknown mass treatment {spec!r}; expected one of "
                          "consistent, rowsum, absrowsum, block(b)")
    return s, 0


def parse_stabilization(spec) -> float:
    """Threshold gamma of the stabilization, 0 when off."""
    if spec is None or spec is False or (isinstance(spec, str) and spec.lower() == "off"):
        return 0.0
    if spec is True or (isinstance(spec, str) and spec.lower() == "on"):
        return DEFAULT_GAMMA
    if isinstance(spec, dict):
        spec = spec.get("gamma", DEFAULT_GAMMA)
    try:
        g = float(spec)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid stabilization {spec!r}") from None
    if not 0.0 <= g <= 1.0:
        raise ConfigError("stabilization gamma must lie in [0, 1]")
    return g


@dataclass
class ExperimentConfig:
    example: str = "ex1d"
    eps: float | None = None
    degree: int | None = None
    continuity: int | None = None
    N: int | None = None
    mass: str = "rowsum"
    gamma: float = 0.0
    scheme: str = "central_difference"
    T: float = 3.0
    safeguard: float = 0.85
    dt: float | None = None
    stride: int | None = None
    outputs: tuple = ("spectrum",)
    modes: int = 10
    spectrum_modes: int | None = 20
    out: str = "results"
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.example not in EXAMPLE_DEFAULTS:
            raise ConfigError(f"unknown example {self.example!r}; expected one of {sorted(EXAMPLE_DEFAULTS)}")
        d = EXAMPLE_DEFAULTS[self.example]
        self.degree = int(d["degree"] if self.degree is None else self.degree)
        self.continuity = int(self.degree - 1 if self.continuity is None else self.continuity)
        self.N = int(d["N"] if self.N is None else self.N)
        self.scheme_name, self.block_size = parse_mass(self.mass)
        self.outputs = tuple(self.outputs)
        self.validate()

    def validate(self) -> None:
        if not 1 <= self.degree <= 4:
            raise ConfigError("degree must lie in 1..4")
        if not 0 <= self.continuity < self.degree:
            raise ConfigError("continuity must lie in 0..degree-1")
        if self.N < 1:
            raise ConfigError("N must be positive")
        if self.eps is not None and not self.eps > 0:
            raise ConfigError("eps must be positive")
        if self.scheme not in ("central_difference", "newmark"):
            raise ConfigError(f"unknown integrator scheme {self.scheme!r}")
        if self.scheme == "central_difference" and self.scheme_name == "consistent":
            raise ConfigError("invalid combination: central_difference requires a lumped mass "
                              "(rowsum, absrowsum or block), got consistent")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not 0 < self.safeguard <= 1:
            raise ConfigError("safeguard must lie in (0, 1]")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise ConfigError(f"unknown outputs {bad}; expected a subset of {list(OUTPUTS)}")
        if self.modes < 1:
            raise ConfigError("modes must be positive")
        if self.spectrum_modes is not None and self.spectrum_modes < 1:
            raise ConfigError("spectrum_modes must be positive or 'all'")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("stabilization gamma must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return 1 if self.example == "ex1d" else 2

    @property
    def stabilized(self) -> bool:
        return self.gamma > 0

    @classmethod
    def from_mapping(cls, data: dict) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        unknown = set(data) - _KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        integ = data.get("integrator") or {}
        if not isinstance(integ, dict):
            raise ConfigError("integrator must be a mapping")
        unknown = set(integ) - _INTEGRATOR_KEYS
        if unknown:
            raise ConfigError(f"unknown integrator keys {sorted(unknown)}")
        outputs = data.get("outputs", ["spectrum"])
        if isinstance(outputs, str):
            outputs = [outputs]
        try:
            return cls(
                example=str(data.get("example", "ex1d")),
                eps=None if data.get("eps") is None else float(data["eps"]),
                degree=data.get("degree"),
                continuity=data.get("continuity"),
                N=data.get("N"),
                mass=str(data.get("mass", "rowsum")),
                gamma=parse_stabilization(data.get("stabilization", "off")),
                scheme=str(integ.get("scheme", "central_difference")),
                T=float(integ.get("T", 3.0)),
                safeguard=float(integ.get("safeguard", 0.85)),
                dt=None if integ.get("dt") is None else float(integ["dt"]),
                stride=None if integ.get("stride") is None else int(integ["stride"]),
                outputs=tuple(outputs),
                modes=int(data.get("modes", 10)),
                spectrum_modes=_count(data.get("spectrum_modes", 20)),
                out=str(data.get("out", "results")),
                seed=int(data.get("seed", 0)),
                params=dict(data.get("params") or {}),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read configuration: {exc}") from exc
        return cls.from_mapping(data or {})

    def to_mapping(self) -> dict:
        return {
            "example": self.example, "eps": self.eps, "degree": self.degree,
            "continuity": self.continuity, "N": self.N, "mass": self.mass,
            "stabilization": {"gamma": self.gamma} if self.stabilized else "off",
            "integrator": {"scheme": self.scheme, "T": self.T, "safeguard": self.safeguard,
                           "dt": self.dt, "stride": self.stride},
            "outputs": list(self.outputs), "modes": self.modes,
            "spectrum_modes": "all" if self.spectrum_modes is None else self.spectrum_modes, "out": self.out,
            "seed": self.seed, "params": dict(self.params),
        }

    def replace(self, **kw) -> ExperimentConfig:
        return dataclasses.replace(self, **kw)


def _count(v) -> int | None:
    if v is None or (isinstance(v, str) and v.lower() == "all"):
        return None
    return int(v)


# -- runner -----------------------------------------------------------------------------


@dataclass
class RunResult:
    out: Path
    files: list
    summary: dict


def _write_csv(path: Path, header: list[str], columns) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def _plot(path: Path, x, ys, labels, xlabel, ylabel, logy=False) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "trimlump", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for y, lab in zip(ys, labels):
            ax.plot(x, y, label=lab, lw=1.2)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if any(labels):
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, files: list[str], extra: dict) -> Path:
    entries = [{"path": f, "sha256": sha256(out / f)} for f in sorted(files)]
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"files": entries, **extra}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _treated_mass(cfg: ExperimentConfig, M, space):
    if cfg.scheme_name == "consistent":
        return M
    return lump(M, cfg.scheme_name, cfg.block_size or 4, space, cfg.stabilized)


def _rowsum_step_source(M):
    try:
        return lump(M, "rowsum")
    except LumpingError:
        return lump(M, "absrowsum")


def run_experiment(cfg: ExperimentConfig, out=None) -> RunResult:
    """Build, solve and write every requested artifact plus ``manifest.json``.

    Raises :class:`~trimlump.dynamics.StabilityError` when explicit time
    stepping diverges.
    """
    out = Path(out if out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    problem = make_problem(cfg.example, cfg.eps, **cfg.params)
    spline = SplineSpace.uniform(cfg.degree, cfg.continuity, cfg.N, cfg.dim)
    space = build_space(spline, problem.domain, cfg.gamma, problem.dirichlet_sides, problem.neumann_sides)
    K, M = (assemble_stabilized if cfg.stabilized else assemble_consistent)(space)
    Mt = _treated_mass(cfg, M, space)
    files: list[str] = []
    summary = {"n_dofs": int(K.shape[0]), "lambda_min_spurious": math.nan, "lambda_max": math.nan,
               "dt_critical": math.nan, "max_l2_error": math.nan, "steps": 0}

    lam_max = max_eigenvalue(K, Mt, seed=cfg.seed)
    summary["lambda_max"] = lam_max
    summary["dt_critical"] = critical_timestep(lam_max)

    want = set(cfg.outputs)
    dec = None
    if want & {"spectrum", "modes", "projection-coefficients"}:
        dec = solve_gevp(K, Mt)

    if "spectrum" in want:
        if cfg.dim == 1:
            exact, _ = exact_modes_1d(problem.domain.measure, dec.size)
        else:
            # no closed form: pair against the consistent spectrum of the same space
            exact = dec.values if cfg.scheme_name == "consistent" else solve_gevp(K, M).values
        ratios = dec.values / exact[: dec.size]
        m = dec.size if cfg.spectrum_modes is None else min(cfg.spectrum_modes, dec.size)
        rep = normalize_and_pair(dec.values[:m], exact)
        _write_csv(out / "spectrum.csv", ["index", "lambda_h", "lambda_exact", "ratio", "spurious"],
                   [np.arange(1, m + 1), rep.computed, rep.paired_exact,
                    rep.computed / rep.paired_exact, rep.spurious.astype(int)])
        _plot(out / "spectrum.svg", np.arange(1, dec.size + 1) / dec.size, [ratios], [""],
              "j / n", "lambda_h / lambda", logy=True)
        files += ["spectrum.csv", "spectrum.svg"]
        if rep.spurious.any():
            summary["lambda_min_spurious"] = float(rep.spurious_values.min())
        summary["n_spurious"] = int(rep.spurious.sum())

    ev = None
    if want & {"modes", "error-series"}:
        ev = field_evaluator(space, cfg.stabilized)

    if "modes" in want:
        k = min(cfg.modes, dec.size)
        vals = ev.matrix @ dec.vectors[:, :k]
        order = np.lexsort(ev.points.T[::-1])
        coords = ["x", "y"][: cfg.dim]
        _write_csv(out / "modes.csv", coords + [f"mode_{j}" for j in range(1, k + 1)],
                   list(ev.points[order].T) + list(vals[order].T))
        files.append("modes.csv")

    if "projection-coefficients" in want:
        # eigenbasis coefficients of the projected spatial profile of the solution
        x = l2_project(space, problem.profile, M, cfg.stabilized)
        c = eigen_project(x, dec)
        _write_csv(out / "projection.csv", ["index", "lambda_h", "coefficient"],
                   [np.arange(1, dec.size + 1), dec.values, c])
        _plot(out / "projection.svg", np.arange(1, dec.size + 1), [np.abs(c) + 1e-300], [""],
              "index", "|coefficient|", logy=True)
        files += ["projection.csv", "projection.svg"]

    if want & {"trajectory", "error-series"}:
        rhs = Rhs("sinusoidal", problem.spatial_load(space, cfg.stabilized), problem.omega)
        v0 = l2_project(space, problem.v0, M, cfg.stabilized)
        u0 = np.zeros_like(v0)
        if cfg.dt is not None:
            # user step, rounded down to divide T; explicit runs are not CFL-checked here
            icfg = IntegratorConfig(scheme=cfg.scheme, dt=cfg.T / math.ceil(cfg.T / cfg.dt * (1 - 1e-14)),
                                    T=cfg.T, safeguard=cfg.safeguard, stride=cfg.stride)
        elif cfg.scheme == "central_difference":
            icfg = IntegratorConfig.from_cfl(lam_max, cfg.T, cfg.safeguard, stride=cfg.stride)
        else:
            lam_rs = max_eigenvalue(K, _rowsum_step_source(M), seed=cfg.seed)
            icfg = IntegratorConfig.from_cfl(lam_rs, cfg.T, cfg.safeguard, scheme="newmark",
                                             stride=cfg.stride)
        traj = integrate(K, Mt, rhs, u0, v0, icfg)
        summary["steps"] = traj.steps
        summary["dt"] = icfg.dt
        if "trajectory" in want:
            traj.to_csv(out / "trajectory.csv")
            files.append("trajectory.csv")
        if "error-series" in want:
            es = error_series(ev, traj, problem.u)
            es.to_csv(out / "error_series.csv")
            _plot(out / "error_series.svg", es.times, [es.values], [""], "t", "L2 error")
            files += ["error_series.csv", "error_series.svg"]
            summary["max_l2_error"] = es.max

    write_manifest(out, files, {"config": cfg.to_mapping(), "summary": _jsonable(summary)})
    return RunResult(out, files + ["manifest.json"], summary)


def _jsonable(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


# -- sweeps -----------------------------------------------------------------------------

SWEEP_PARAMS = {"eps": "eps", "p": "degree", "N": "N", "gamma": "gamma", "mass": "mass"}


def sweep_member(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {param!r}; expected one of {sorted(SWEEP_PARAMS)}")
    try:
        if param == "eps":
            kw = {"eps": float(value)}
        elif param == "p":
            p = int(value)
            kw = {"degree": p, "continuity": p - 1}
        elif param == "N":
            kw = {"N": int(value)}
        elif param == "gamma":
            kw = {"gamma": parse_stabilization(value)}
        else:
            kw = {"mass": str(value)}
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid value {value!r} for {param}") from exc
    return cfg.replace(**kw)


def parse_values(text: str) -> list[str]:
    """Comma-separated values; commas inside parentheses are kept (``block(4)``)."""
    vals = [v.strip() for v in re.split(r",(?![^()]*\))", text) if v.strip()]
    if not vals:
        raise ConfigError("sweep needs at least one value")
    return vals


def member_dir(param: str, value) -> str:
    return f"{param}_" + re.sub(r"[^A-Za-z0-9.+-]+", "_", str(value)).strip("_")
