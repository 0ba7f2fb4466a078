"""Scenario configuration, mollification, scenario runners and CSV output.

A scenario is a TOML document validated by ``ScenarioConfig`` before any
numerical work starts.  Every runner returns a ``ResultTable`` whose ``ok_*``
columns are pass/fail flags; each flag can be recomputed from the measured
values and the tolerance columns stored in the same row.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import scipy.fft as sfft
import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .backgrounds import Background, make_background
from .diagnostics import (
    diagnostics_records,
    energy_rate_report,
    gronwall_check,
    invariants,
)
from .errors import ConfigurationError, InvalidInputError, ZKLabError
from .evolution import SCHEMES, SolverConfig, evolve, rescale, unscale
from .probes import (
    DyadicSupportSpec,
    bilinear_probe,
    commutator_probe,
    commutator_symbol,
    fit_exponent,
    probe_lattice,
    strichartz_probe,
)
from .spectral import (
    Grid2,
    RealField2,
    SpectralField2,
    dealias,
    forward_transform,
    inverse_transform,
    l2_norm,
    sobolev_norm,
)
from .symbols import dyadic_ceil, eta0, is_dyadic, psi_block

SCHEMA_VERSION = "zklab-results/1"
OUTPUT_DIR_ENV = "ZKLAB_OUTPUT_DIR"

# relative roundoff slack when the mass is compared with the envelope
ENVELOPE_SLACK = 1e-12

SCENARIO_KINDS = (
    "conservation",
    "scaling",
    "bona_smith",
    "background_perturbation",
    "growth_bound",
    "bilinear_probe",
    "strichartz_probe",
    "commutator_probe",
)

DEFAULT_TOLERANCES = {
    "conservation": {"I1_abs": 1e-8, "I2_rel": 1e-8, "I3_rel": 1e-6},
    "scaling": {"mismatch_rel": 1e-6, "data_norm_rel": 1e-10},
    "bona_smith": {},
    "background_perturbation": {"gronwall_rel": 1e-6, "energy_rel": 1e-3},
    "growth_bound": {"gronwall_rel": 1e-6},
    "bilinear_probe": {"spread": 10.0, "exponent_abs": 0.15, "exponent_target": 0.5},
    "strichartz_probe": {"refine_rel": 0.2},
    "commutator_probe": {},
}


# --- mollifier ---------------------------------------------------------------------------------

def mollifier_symbol(grid: Grid2, lam: float) -> np.ndarray:
    """``eta0(lam |k|)``: identically 1 for ``|k| <= 1/lam``, 0 beyond ``2/lam``."""
    return eta0(lam * np.sqrt(grid.k2))


def mollify(f: RealField2, lam: float, s_hint: float = 0.0) -> RealField2:
    """Convolution with ``rho_lam``, realized as the Fourier multiplier ``eta0(lam |k|)``.

    The multiplier is flat at the origin, so every moment of ``rho`` of order
    one or more vanishes.  ``s_hint`` is accepted for call-site symmetry with
    the smoothing estimates; the multiplier does not depend on it.
    """
    if not (0.0 < lam <= 1.0):
        raise InvalidInputError(f"mollifier scale must lie in (0, 1], got {lam!r}")
    modes = forward_transform(f).multiply(mollifier_symbol(f.grid, lam))
    return inverse_transform(modes)


# --- configuration -------------------------------------------------------------------------------

class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridBlock(_Block):
    nx: int = 256
    ny: int = 256
    Lx: float = 40.0 * math.pi
    Ly: float = 40.0 * math.pi
    # when set, Lx is replaced by this many spatial periods of a cnoidal background
    Lx_periods: Optional[int] = None

    @model_validator(mode="after")
    def _valid_grid(self):
        if self.Lx_periods is not None and self.Lx_periods < 1:
            raise ValueError("Lx_periods must be >= 1")
        try:
            self.build()
        except InvalidInputError as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self, period: Optional[float] = None) -> Grid2:
        Lx = self.Lx
        if self.Lx_periods is not None and period is not None:
            Lx = self.Lx_periods * period
        return Grid2(self.nx, self.ny, Lx, self.Ly)


class BackgroundBlock(_Block):
    family: Literal["zero", "line_soliton", "tanh_kink", "cnoidal"] = "zero"
    params: dict[str, float] = Field(default_factory=dict)

    def build(self) -> Background:
        return make_background(self.family, **self.params)


class SolverBlock(_Block):
    dt: float = 1e-3
    T: float = 1.0
    scheme: Literal["etdrk4", "lawson_rk4", "strang"] = "etdrk4"
    dealias: bool = True
    record_every: int = 10

    @model_validator(mode="after")
    def _valid(self):
        try:
            self.build()
        except InvalidInputError as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self, **overrides) -> SolverConfig:
        return SolverConfig(**{**self.model_dump(), **overrides})


class DataBlock(_Block):
    kind: Literal["zero", "gaussian", "rough"] = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    decay: float = 2.5
    seed: int = 0


class SpecBlock(_Block):
    H: int
    L: int
    N: Optional[int] = None

    @field_validator("H", "L", "N")
    @classmethod
    def _dyadic(cls, v):
        if v is not None and not is_dyadic(v):
            raise ValueError(f"must be a power of two >= 1, got {v}")
        return v

    def build(self) -> DyadicSupportSpec:
        return DyadicSupportSpec(self.H, self.L, self.N)


class SpecTriple(_Block):
    supports: list[SpecBlock]

    @field_validator("supports")
    @classmethod
    def _three(cls, v):
        if len(v) != 3:
            raise ValueError(f"must list exactly three supports, got {len(v)}")
        return v


class ProbeLatticeBlock(_Block):
    resolution: float = 3.0
    tau_resolution: float = 2.0


class SweepBlock(_Block):
    """Exponent regression: vary one index of the first support spec."""

    vary: Literal["H", "L"]
    values: list[int]
    template: list[SpecBlock]
    # broad supports get L rounded up from (factor * estimated max resonance + L_min)
    broad_factor: float = 1.0

    @field_validator("values")
    @classmethod
    def _dyadic_values(cls, v):
        for i, x in enumerate(v):
            if not is_dyadic(x):
                raise ValueError(f"values[{i}] must be a power of two >= 1, got {x}")
        if len(v) < 2:
            raise ValueError("an exponent sweep needs at least two values")
        return v


class ScenarioConfig(_Block):
    kind: Literal[SCENARIO_KINDS]  # type: ignore[valid-type]
    name: str = ""
    grid: GridBlock = Field(default_factory=GridBlock)
    background: BackgroundBlock = Field(default_factory=BackgroundBlock)
    solver: SolverBlock = Field(default_factory=SolverBlock)
    data: DataBlock = Field(default_factory=DataBlock)
    # scaling / bona_smith
    lambdas: list[float] = Field(default_factory=lambda: [4.0])
    s: float = 1.0
    gamma: float = 1.0
    # probes
    case: Literal["a", "b", "c"] = "a"
    specs: list[SpecTriple] = Field(default_factory=list)
    sweeps: list[SweepBlock] = Field(default_factory=list)
    lattice: ProbeLatticeBlock = Field(default_factory=ProbeLatticeBlock)
    trials: int = 20
    seed: int = 0
    H_values: list[int] = Field(default_factory=lambda: [4, 8, 16, 32, 64, 128, 256])
    nt: int = 64
    band: int = 8
    sobolev_s: list[float] = Field(default_factory=lambda: [0.0, 1.0])
    tolerances: dict[str, float] = Field(default_factory=dict)
    output: Optional[str] = None
    # process count for independent trials and sweep points; results do not depend on it
    workers: int = 1

    @field_validator("H_values")
    @classmethod
    def _dyadic_h(cls, v):
        for i, x in enumerate(v):
            if not is_dyadic(x):
                raise ValueError(f"H_values[{i}] must be a power of two >= 1, got {x}")
        return v

    @field_validator("trials", "workers")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @model_validator(mode="after")
    def _consistent(self):
        try:
            bg = self.background.build()
        except (InvalidInputError, TypeError) as exc:
            raise ValueError(f"background: {exc}") from None
        if self.grid.Lx_periods is not None and not hasattr(bg, "period"):
            raise ValueError(f"grid.Lx_periods: only meaningful for a periodic background, not {bg.family}")
        try:
            bg.check_grid(self.build_grid())
        except ConfigurationError as exc:
            raise ValueError(f"grid.Lx: {exc}") from None
        if self.kind == "scaling":
            for i, lam in enumerate(self.lambdas):
                if not lam > 0:
                    raise ValueError(f"lambdas[{i}] must be positive, got {lam}")
        if self.kind == "bona_smith":
            for i, lam in enumerate(self.lambdas):
                if not (0 < lam <= 1) or not is_dyadic(1.0 / lam):
                    raise ValueError(f"lambdas[{i}] must be 2^-k with k >= 0, got {lam}")
            if len(self.lambdas) < 3:
                raise ValueError("lambdas: a Bona-Smith sweep needs at least three scales")
        if self.kind == "bilinear_probe" and not (self.specs or self.sweeps):
            raise ValueError("specs: bilinear_probe needs at least one spec triple or sweep")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES[self.kind])
        if unknown:
            raise ValueError(f"tolerances: unknown keys {sorted(unknown)} for kind {self.kind}")
        return self

    def build_grid(self) -> Grid2:
        bg = self.background.build()
        return self.grid.build(getattr(bg, "period", None))

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[self.kind][key]))

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json", exclude={"output", "workers"}), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_validation(exc)) from None


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: malformed TOML: {exc}") from None
    return parse_config(data)


# --- initial data ------------------------------------------------------------------------------------

def _wrapped(a: np.ndarray, period: float) -> np.ndarray:
    return (a + 0.5 * period) % period - 0.5 * period


def make_data(block: DataBlock, grid: Grid2) -> RealField2:
    if block.kind == "zero":
        return RealField2.zeros(grid)
    if block.kind == "gaussian":
        X, Y = grid.mesh
        dx = _wrapped(X - block.center[0], grid.Lx)
        dy = _wrapped(Y - block.center[1], grid.Ly)
        return RealField2(grid, block.amplitude * np.exp(-(dx**2 + dy**2) / block.width**2))
    return rough_field(grid, block.amplitude, block.decay, block.seed)


def rough_field(grid: Grid2, amplitude: float, decay: float, seed: int) -> RealField2:
    """Real random field with ``|modes| ~ (1 + |k|^2)^{-decay/2}`` on the 2/3 box, ``L^2`` norm ``amplitude``.

    It lies in ``H^s`` for ``s < decay - 1`` uniformly in the resolution.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    noise = rng.standard_normal(grid.shape)
    modes = forward_transform(RealField2(grid, noise)).multiply((1.0 + grid.k2) ** (-0.5 * decay))
    modes = dealias(modes)
    modes = SpectralField2(grid, np.where(grid.k2 == 0, 0.0, modes.modes))
    out = inverse_transform(modes)
    return RealField2(grid, out.values * (amplitude / l2_norm(out)))


# --- result tables -------------------------------------------------------------------------------------

@dataclass
class ResultTable:
    kind: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    config_hash: str = ""
    version: str = __version__
    schema: str = SCHEMA_VERSION

    def add(self, **row) -> None:
        missing = [c for c in self.columns if c not in row]
        extra = [c for c in row if c not in self.columns]
        if missing or extra:
            raise InvalidInputError(f"row mismatch: missing {missing}, unexpected {extra}")
        self.rows.append(row)

    @property
    def flag_columns(self) -> list[str]:
        return [c for c in self.columns if c.startswith("ok_")]

    @property
    def passed(self) -> bool:
        return all(bool(r[c]) for r in self.rows for c in self.flag_columns)

    def failures(self) -> list[tuple[int, str]]:
        return [(i, c) for i, r in enumerate(self.rows) for c in self.flag_columns if not bool(r[c])]


_META = ("schema", "version", "config_hash", "scenario")


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render_csv(table: ResultTable) -> str:
    if not table.rows:
        raise InvalidInputError("cannot emit an empty result table")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*_META, *table.columns])
    for row in table.rows:
        meta = [table.schema, table.version, table.config_hash, table.kind]
        writer.writerow(meta + [_cell(row[c]) for c in table.columns])
    return buf.getvalue()


def emit_csv(table: ResultTable, path: str | os.PathLike) -> Path:
    """Write ``table`` as UTF-8 CSV with LF line endings; returns the path written."""
    text = render_csv(table)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from exc
    return path


def _parse_cell(text: str) -> Any:
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path: str | os.PathLike) -> ResultTable:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if tuple(header[: len(_META)]) != _META:
        raise InvalidInputError(f"{path}: not a result table (header {header[:4]})")
    columns = header[len(_META):]
    first = rows[0] if rows else ["", "", "", ""]
    table = ResultTable(kind=first[3], columns=columns, config_hash=first[2], version=first[1], schema=first[0])
    for r in rows:
        table.rows.append({c: _parse_cell(v) for c, v in zip(columns, r[len(_META):])})
    return table


# --- runners ---------------------------------------------------------------------------------------------

def _map(fn, args: list[tuple], workers: int) -> list:
    """``[fn(*a) for a in args]``, fanned out over processes when ``workers > 1``."""
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as pool:
        return list(pool.map(fn, *zip(*args)))


def _table(cfg: ScenarioConfig, columns: list[str]) -> ResultTable:
    return ResultTable(kind=cfg.kind, columns=columns, config_hash=cfg.config_hash())


def run_conservation(cfg: ScenarioConfig) -> ResultTable:
    grid = cfg.build_grid()
    bg = cfg.background.build()
    u0 = make_data(cfg.data, grid)
    traj = evolve(u0, bg, cfg.solver.build())
    tol1, tol2, tol3 = cfg.tol("I1_abs"), cfg.tol("I2_rel"), cfg.tol("I3_rel")
    table = _table(cfg, [
        "t", "I1", "I2", "I3", "dI1_abs", "dI2_rel", "dI3_rel",
        "tol_I1_abs", "tol_I2_rel", "tol_I3_rel", "ok_I1", "ok_I2", "ok_I3",
    ])
    rows = []
    for state in traj.states:
        u = inverse_transform(state.u)
        if bg.decays and not bg.is_zero:
            u = RealField2(grid, u.values + bg.sample_x(state.t, grid)[:, None])
        rows.append((state.t, *invariants(u)))
    _, a1, a2, a3 = rows[0]
    for t, i1, i2, i3 in rows:
        d1 = abs(i1 - a1)
        d2 = abs(i2 - a2) / abs(a2) if a2 else abs(i2)
        d3 = abs(i3 - a3) / abs(a3) if a3 else abs(i3)
        table.add(
            t=t, I1=i1, I2=i2, I3=i3, dI1_abs=d1, dI2_rel=d2, dI3_rel=d3,
            tol_I1_abs=tol1, tol_I2_rel=tol2, tol_I3_rel=tol3,
            ok_I1=d1 <= tol1, ok_I2=d2 <= tol2, ok_I3=d3 <= tol3,
        )
    return table


def scaling_roundtrip(u0: RealField2, bg: Background, solver: SolverConfig, lam: float) -> dict:
    """Direct solve versus solve of the rescaled problem mapped back; relative ``L^2`` mismatch at ``T``."""
    direct = evolve(u0, bg, solver)
    u_l, bg_l, tmap = rescale(u0, bg, lam)
    scaled_cfg = SolverConfig(
        dt=tmap(solver.step), T=tmap(solver.T), scheme=solver.scheme,
        dealias=solver.dealias, record_every=solver.n_steps,
    )
    scaled = evolve(u_l, bg_l, scaled_cfg)
    ref = inverse_transform(direct.states[-1].u)
    back = unscale(inverse_transform(scaled.states[-1].u), lam, target_grid=u0.grid)
    denom = l2_norm(ref)
    mismatch = l2_norm(ref - back) / denom if denom else l2_norm(back)
    norm_ratio = l2_norm(u_l) / l2_norm(u0) if l2_norm(u0) else float("nan")
    return {"mismatch_rel": mismatch, "data_norm_ratio": norm_ratio}


def run_scaling(cfg: ScenarioConfig) -> ResultTable:
    grid = cfg.build_grid()
    bg = cfg.background.build()
    u0 = make_data(cfg.data, grid)
    solver = cfg.solver.build()
    tol_m, tol_n = cfg.tol("mismatch_rel"), cfg.tol("data_norm_rel")
    table = _table(cfg, [
        "lambda", "T", "mismatch_rel", "data_norm_ratio", "expected_norm_ratio",
        "tol_mismatch_rel", "tol_data_norm_rel", "ok_mismatch", "ok_data_norm",
    ])
    for lam in cfg.lambdas:
        res = scaling_roundtrip(u0, bg, solver, lam)
        expected = math.sqrt(lam)
        norm_err = abs(res["data_norm_ratio"] - expected) / expected
        table.add(
            **{"lambda": lam}, T=solver.T, mismatch_rel=res["mismatch_rel"],
            data_norm_ratio=res["data_norm_ratio"], expected_norm_ratio=expected,
            tol_mismatch_rel=tol_m, tol_data_norm_rel=tol_n,
            ok_mismatch=res["mismatch_rel"] <= tol_m, ok_data_norm=norm_err <= tol_n,
        )
    return table


def hs_distance_sup(a, b, s: float) -> float:
    """``sup_t ||a(t) - b(t)||_{H^s}`` over records shared by two trajectories."""
    if len(a) != len(b) or not np.allclose(a.times, b.times):
        raise InvalidInputError("trajectories are recorded at different times")
    return max(sobolev_norm(x.u - y.u, s) for x, y in zip(a.states, b.states))


def run_bona_smith(cfg: ScenarioConfig) -> ResultTable:
    """Solutions from mollified data ``rho_lam * u0`` along ``lam = 2^-k``, compared in ``L^inf_T H^s``."""
    grid = cfg.build_grid()
    bg = cfg.background.build()
    u0 = make_data(cfg.data, grid)
    solver = cfg.solver.build()
    lams = sorted(cfg.lambdas, reverse=True)
    s, gamma = cfg.s, cfg.gamma
    base = sobolev_norm(forward_transform(u0), s)
    lower = sobolev_norm(forward_transform(u0), s - gamma)
    smoothed = [mollify(u0, lam, s) for lam in lams]
    trajs = _map(evolve, [(u_l, bg, solver) for u_l in smoothed], cfg.workers)
    smooth_c = []
    quotients = []
    for lam, u_l in zip(lams, smoothed):
        smooth_c.append(lam**gamma * sobolev_norm(forward_transform(u_l), s + gamma) / base)
        quotients.append(sobolev_norm(forward_transform(u0 - u_l), s - gamma) / lam**gamma / max(lower, 1e-300))
    # sup over |k| of lam^gamma (1+k^2)^{gamma/2} eta0(lam|k|) with |k| < 2/lam
    c_bound = [math.sqrt((lam**2 + 4.0) ** gamma) for lam in lams]
    dists = [hs_distance_sup(trajs[i], trajs[i + 1], s) for i in range(len(lams) - 1)]
    table = _table(cfg, [
        "lambda", "lambda_next", "dist_LinfT_Hs", "dist_prev", "smoothing_constant", "smoothing_bound",
        "quotient", "quotient_prev", "ok_dist_decreasing", "ok_smoothing", "ok_quotient_decreasing",
    ])
    for i, lam in enumerate(lams):
        nxt = lams[i + 1] if i + 1 < len(lams) else float("nan")
        dist = dists[i] if i < len(dists) else float("nan")
        d_prev = dists[i - 1] if 0 < i <= len(dists) else float("nan")
        q_prev = quotients[i - 1] if i > 0 else float("nan")
        # comparisons against nan (first row, or no successor) are vacuous
        ok_dist = not (dist >= d_prev)
        ok_q = not (quotients[i] >= q_prev)
        table.add(
            **{"lambda": lam}, lambda_next=nxt, dist_LinfT_Hs=dist, dist_prev=d_prev,
            smoothing_constant=smooth_c[i], smoothing_bound=c_bound[i], quotient=quotients[i],
            quotient_prev=q_prev,
            ok_dist_decreasing=ok_dist, ok_smoothing=smooth_c[i] <= c_bound[i],
            ok_quotient_decreasing=ok_q,
        )
    return table


def run_background_perturbation(cfg: ScenarioConfig) -> ResultTable:
    grid = cfg.build_grid()
    bg = cfg.background.build()
    traj = evolve(make_data(cfg.data, grid), bg, cfg.solver.build())
    tol_g = cfg.tol("gronwall_rel")
    records = diagnostics_records(traj, bg, cfg.sobolev_s, tol_g)
    energy = energy_rate_report(traj, bg)
    tol_e = cfg.tol("energy_rel")
    err = dict(zip(energy.times, np.abs(energy.lhs - energy.rhs) / max(energy.scale, 1e-300)))
    g_tol = tol_g * max(r.gronwall_bound for r in records)
    sob_cols = [f"Hs_{s:g}" for s in cfg.sobolev_s]
    table = _table(cfg, [
        "t", "I1", "I2", "I3", "invariants_of_total", "modified_energy", "l2_rate",
        "gronwall_bound", "gronwall_tol", "energy_rate_err", *sob_cols, "tol_gronwall_rel", "tol_energy_rel",
        "ok_gronwall", "ok_energy_rate",
    ])
    for r in records:
        # end records have no centered stencil for the energy rate
        e = err.get(r.t, float("nan"))
        table.add(
            t=r.t, I1=r.I1, I2=r.I2, I3=r.I3, invariants_of_total=r.invariants_of_total,
            modified_energy=r.modified_energy, l2_rate=r.l2_rate, gronwall_bound=r.gronwall_bound,
            gronwall_tol=g_tol, energy_rate_err=e, **{c: r.sobolev[float(s)] for c, s in zip(sob_cols, cfg.sobolev_s)},
            tol_gronwall_rel=tol_g, tol_energy_rel=tol_e,
            ok_gronwall=r.gronwall_ok, ok_energy_rate=bool(np.isnan(e) or e <= tol_e),
        )
    return table


def run_growth_bound(cfg: ScenarioConfig) -> ResultTable:
    grid = cfg.build_grid()
    bg = cfg.background.build()
    traj = evolve(make_data(cfg.data, grid), bg, cfg.solver.build())
    rep = gronwall_check(traj, bg, cfg.tol("gronwall_rel"))
    table = _table(cfg, [
        "t", "mass", "rate", "bound", "tol", "envelope", "C_data", "C_psi", "tol_envelope_rel",
        "ok_rate", "ok_envelope",
    ])
    rate = dict(zip(rep.times, rep.rates))
    bound = dict(zip(rep.times, rep.bounds))
    env = rep.envelope(rep.record_times)
    for t, m, e in zip(rep.record_times, rep.mass, env):
        interior = t in rate
        table.add(
            t=t, mass=m, rate=rate.get(t, float("nan")), bound=bound.get(t, float("nan")),
            tol=rep.tol, envelope=e, C_data=rep.envelope.C_data, C_psi=rep.envelope.C_psi,
            tol_envelope_rel=ENVELOPE_SLACK,
            ok_rate=(rate[t] <= bound[t] + rep.tol) if interior else True,
            ok_envelope=m <= e * (1 + ENVELOPE_SLACK),
        )
    return table


def broad_L(template: list[DyadicSupportSpec], factor: float) -> int:
    """Dyadic ``L`` for the broad supports of a saturating sweep point."""
    h = sorted(s.H for s in template)
    l_min = min(s.L for s in template)
    estimate = 12.0 * h[0] ** 0.5 * h[-1] / 8.0
    return dyadic_ceil(factor * estimate + l_min)


def sweep_specs(sweep: SweepBlock, value: int) -> list[DyadicSupportSpec]:
    """First support gets ``vary = value``; the others keep their ``H`` ratio and get a saturating ``L``.

    In an ``L`` sweep the broad ``L`` is sized for the largest value so that
    every point shares the same broad supports.
    """
    first, rest = sweep.template[0], sweep.template[1:]
    if sweep.vary == "H":
        H1, L1 = value, first.L
        rest_H = [int(round(t.H / first.H * value)) for t in rest]
        l_for_size = L1
    else:
        H1, L1 = first.H, value
        rest_H = [t.H for t in rest]
        l_for_size = max(sweep.values)
    sizing = [DyadicSupportSpec(H1, l_for_size)] + [DyadicSupportSpec(H, 1) for H in rest_H]
    big = broad_L(sizing, sweep.broad_factor)
    return [DyadicSupportSpec(H1, L1, first.N)] + [
        DyadicSupportSpec(H, big, t.N) for H, t in zip(rest_H, rest)
    ]


def _bilinear_job(case, specs, trials, seed, resolution, tau_resolution):
    lat = probe_lattice(specs, resolution, tau_resolution)
    return lat, bilinear_probe(case, specs, trials, seed, lat)


def run_bilinear(cfg: ScenarioConfig) -> ResultTable:
    spread = cfg.tol("spread")
    table = _table(cfg, [
        "group", "case", "branch", "specs", "lattice", "trials", "bound", "raw_median",
        "ratio_min", "ratio_median", "ratio_max", "exponent", "exponent_target", "tol_spread",
        "tol_exponent_abs", "ok_finite", "ok_spread", "ok_exponent",
    ])
    target, tol_x = cfg.tol("exponent_target"), cfg.tol("exponent_abs")
    jobs = [[s.build() for s in triple.supports] for triple in cfg.specs]
    jobs += [sweep_specs(sweep, value) for sweep in cfg.sweeps for value in sweep.values]
    res = cfg.lattice.resolution, cfg.lattice.tau_resolution
    results = iter(_map(_bilinear_job, [(cfg.case, specs, cfg.trials, cfg.seed, *res) for specs in jobs], cfg.workers))
    for _ in cfg.specs:
        lat, st = next(results)
        table.add(
            group="bounded", case=cfg.case, branch=st.extra["branch"], specs=st.label,
            lattice="x".join(map(str, lat.shape)), trials=cfg.trials, bound=st.bound,
            raw_median=float(np.median(st.raw)), ratio_min=st.min, ratio_median=st.median,
            ratio_max=st.max, exponent=float("nan"), exponent_target=float("nan"),
            tol_spread=spread, tol_exponent_abs=float("nan"), ok_finite=st.finite,
            ok_spread=st.max <= spread * st.median, ok_exponent=True,
        )
    for k, sweep in enumerate(cfg.sweeps):
        points = [(value, *next(results)) for value in sweep.values]
        exponent = fit_exponent([p[0] for p in points], [np.median(p[2].raw) for p in points])
        ok_x = abs(exponent - target) <= tol_x
        for value, lat, st in points:
            table.add(
                group=f"sweep{k}:{sweep.vary}", case=cfg.case, branch=st.extra["branch"], specs=st.label,
                lattice="x".join(map(str, lat.shape)), trials=cfg.trials, bound=st.bound,
                raw_median=float(np.median(st.raw)), ratio_min=st.min, ratio_median=st.median,
                ratio_max=st.max, exponent=exponent, exponent_target=target, tol_spread=spread,
                tol_exponent_abs=tol_x, ok_finite=st.finite, ok_spread=st.max <= spread * st.median,
                ok_exponent=ok_x,
            )
    return table


def run_strichartz(cfg: ScenarioConfig) -> ResultTable:
    grid = cfg.build_grid()
    tol = cfg.tol("refine_rel")
    fine = Grid2(2 * grid.nx, 2 * grid.ny, grid.Lx, grid.Ly)
    setups = [("base", grid, cfg.nt), ("nt_x2", grid, 2 * cfg.nt), ("grid_x2", fine, cfg.nt)]
    stats = _map(strichartz_probe, [(g, nt, cfg.trials, cfg.seed, cfg.band) for _, g, nt in setups], cfg.workers)
    variants = [(*setup, st) for setup, st in zip(setups, stats)]
    base = stats[0]
    table = _table(cfg, [
        "variant", "nx", "ny", "nt", "trials", "ratio_min", "ratio_median", "ratio_max",
        "rel_change_max", "tol_refine_rel", "ok_finite", "ok_refine",
    ])
    for name, g, nt, st in variants:
        change = abs(st.max - base.max) / base.max if base.max else 0.0
        table.add(
            variant=name, nx=g.nx, ny=g.ny, nt=nt, trials=cfg.trials, ratio_min=st.min,
            ratio_median=st.median, ratio_max=st.max, rel_change_max=change, tol_refine_rel=tol,
            ok_finite=st.finite, ok_refine=change <= tol,
        )
    return table


def commutator_constant(H: int = 2, samples: int = 4001) -> float:
    """``sup |d_xi (psi_H^2 xi)|``; the same for every ``H >= 2`` since ``psi_H`` is a dilate."""
    top = math.sqrt(2.0 * H) * 1.0001
    xi = np.linspace(-top, top, samples)
    XI, MU = np.meshgrid(xi, xi, indexing="ij")
    m = psi_block(XI, MU, H) ** 2 * XI
    d = np.gradient(m, xi, axis=0)
    return float(np.abs(d).max()) * 1.01


def run_commutator(cfg: ScenarioConfig) -> ResultTable:
    grid = cfg.build_grid()
    u = make_data(cfg.data, grid)
    X, _ = grid.mesh
    # low-frequency multiplier with one full period in x
    V = RealField2(grid, np.sin(2.0 * math.pi * X / grid.Lx))
    bound = commutator_constant()
    table = _table(cfg, ["H", "lhs", "rhs", "ratio", "constant", "ok_finite", "ok_bounded"])
    for H in cfg.H_values:
        lhs, rhs = commutator_probe(H, u, V)
        ratio = lhs / rhs if rhs else float("nan")
        table.add(H=H, lhs=lhs, rhs=rhs, ratio=ratio, constant=bound,
                  ok_finite=math.isfinite(ratio), ok_bounded=ratio <= bound)
    return table


RUNNERS = {
    "conservation": run_conservation,
    "scaling": run_scaling,
    "bona_smith": run_bona_smith,
    "background_perturbation": run_background_perturbation,
    "growth_bound": run_growth_bound,
    "bilinear_probe": run_bilinear,
    "strichartz_probe": run_strichartz,
    "commutator_probe": run_commutator,
}


def output_path(cfg: ScenarioConfig, override: Optional[str] = None) -> Optional[Path]:
    target = override or cfg.output
    if target is None:
        return None
    target = Path(target)
    root = os.environ.get(OUTPUT_DIR_ENV)
    if root and not target.is_absolute():
        target = Path(root) / target
    return target


def run_scenario(cfg: ScenarioConfig, output: Optional[str] = None) -> ResultTable:
    """Run ``cfg`` and write its CSV when an output path is configured."""
    table = RUNNERS[cfg.kind](cfg)
    path = output_path(cfg, output)
    if path is not None:
        emit_csv(table, path)
    return table
