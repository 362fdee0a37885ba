"""Config-driven experiment runner and CSV I/O.

A run is described by an INI-style file with sections ``[run]``,
``[model]``, ``[dissipation]``, ``[initial]``, ``[numerics]`` and
``[output]``.  Every key is validated before any computation starts; see
``README.md`` for the full key reference and output columns.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, oracle
from .experiments import compare_lindblad_exact, compare_reset_exact
from .gge import (GgeState, charge_expectation, correlator_series, fit_correlation_length)
from .lindblad_kernel import evolve, lindblad_kernels
from .model import (BogoliubovTable, ModelParams, Variant, bogoliubov_table, build_grid,
                    charge_coefficients)
from .reset_kernel import ResetParams, evolve_cycles, reset_kernels
from .steady import LindbladFlow, make_flow, solve_by_evolution, solve_iterative

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "run",
    "write_csv",
    "read_csv",
    "relative_error_metric",
]

log = logging.getLogger(__name__)

EXPERIMENTS = (
    "evolve-lindblad",
    "evolve-reset",
    "steady-evolution",
    "steady-iterative",
    "oracle-lindblad",
    "oracle-reset",
    "correlators",
    "compare-exact",
)
_DEFAULT_VARIANT = {
    "evolve-lindblad": "continuous",
    "evolve-reset": "floquet",
    "steady-iterative": "continuous",
    "oracle-lindblad": "continuous",
    "oracle-reset": "floquet",
}
_DEFAULT_T_END = {"oracle-lindblad": 3.0, "compare-exact": 3.0}
INITIAL_STATES = ("infinite-temperature", "thermal", "ground", "file")

ORACLE_MAX_L = {"continuous": 8, "floquet": 5}
N_CHARGES = 10


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


# ---------------------------------------------------------------------------
# parsing


def _float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _floats(text: str) -> Tuple[float, ...]:
    items = [s for s in text.replace(",", " ").split()]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(s) for s in items)


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _ints(text: str) -> Tuple[int, ...]:
    items = text.replace(",", " ").split()
    if not items:
        raise ValueError("empty list")
    return tuple(_int(s) for s in items)


def _str(text: str) -> str:
    return text.strip()


# section -> key -> parser; keys are case sensitive
_SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "run": {"experiment": _str},
    "model": {"J": _float, "h": _float, "L": _int, "variant": _str},
    "dissipation": {"epsilon": _floats, "h_A": _floats, "T": _ints, "lambda": _floats},
    "initial": {"state": _str, "beta": _float, "file": _str},
    "numerics": {
        "dt": _float, "dt_reference": _float, "dt_exact": _float, "t_end": _float,
        "snapshots": _floats, "stride": _int, "tol": _float, "max_time": _float,
        "cycles": _int, "k_max": _int, "initial_beta": _float, "ell_max": _int,
        "fit_min": _int, "fit_max": _int, "x_max": _float, "observe_every": _float,
    },
    "output": {"directory": _str},
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration (defaults filled in)."""

    experiment: str
    J: float
    h: float
    L: int
    variant: str
    epsilon: Tuple[float, ...] = (0.1,)
    h_A: Tuple[float, ...] = ()
    T: Tuple[int, ...] = ()
    lambdas: Tuple[float, ...] = ()
    initial: str = "infinite-temperature"
    beta: Optional[float] = None
    initial_file: Optional[str] = None
    dt: float = 0.1
    dt_reference: Optional[float] = None
    dt_exact: Optional[float] = None
    t_end: Optional[float] = None
    snapshots: Tuple[float, ...] = ()
    stride: int = 1
    tol: float = 1e-10
    max_time: float = 1e5
    cycles: int = 300
    k_max: int = 12
    initial_beta: float = 1.0
    ell_max: int = 40
    fit_min: int = 2
    fit_max: int = 20
    x_max: float = 3.0
    observe_every: float = 0.05
    output_dir: str = "out"
    source: Optional[str] = field(default=None, compare=False)

    @property
    def model_params(self) -> ModelParams:
        return ModelParams(self.J, self.h, Variant(self.variant))

    @property
    def is_floquet(self) -> bool:
        return self.variant == "floquet"

    def reset_params(self, h_A: Optional[float] = None, T: Optional[int] = None,
                     lam: Optional[Sequence[float]] = None) -> ResetParams:
        h_A = self.h_A[0] if h_A is None else h_A
        T = self.T[0] if T is None else T
        lam = self.lambdas if lam is None else lam
        lam = np.full(T, lam[0]) if len(lam) == 1 else np.asarray(lam)
        return ResetParams(h_A, T, lam)

    def resolved(self) -> Dict[str, Any]:
        d = asdict(self)
        d.pop("source")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def _read_sections(text: str) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw: Dict[str, Dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        raw[section] = dict(parser[section])
        for key in raw[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{section}.{key}'")
    return raw


def parse_config(text: str, source: Optional[str] = None) -> RunConfig:
    """Parse and validate a config; raises :class:`ConfigError` naming the bad key."""
    raw = _read_sections(text)
    values: Dict[str, Any] = {}
    for section, entries in raw.items():
        for key, text_value in entries.items():
            try:
                values[f"{section}.{key}"] = _SCHEMA[section][key](text_value)
            except ValueError as exc:
                raise ConfigError(f"invalid value for '{section}.{key}': {text_value!r} ({exc})") from None

    def get(key, default=None, required=False):
        if key in values:
            return values[key]
        if required:
            raise ConfigError(f"missing required key '{key}'")
        return default

    experiment = get("run.experiment", required=True)
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"invalid value for 'run.experiment': {experiment!r} "
                          f"(choose from {', '.join(EXPERIMENTS)})")
    variant = get("model.variant", _DEFAULT_VARIANT.get(experiment))
    if variant is None:
        raise ConfigError(f"missing required key 'model.variant' for experiment {experiment}")
    if variant not in ("continuous", "floquet"):
        raise ConfigError(f"invalid value for 'model.variant': {variant!r}")
    fixed = _DEFAULT_VARIANT.get(experiment)
    if fixed is not None and variant != fixed:
        raise ConfigError(f"invalid value for 'model.variant': {experiment} needs {fixed}")

    kwargs: Dict[str, Any] = dict(
        experiment=experiment, J=get("model.J", required=True), h=get("model.h", required=True),
        L=get("model.L", required=True), variant=variant, source=source,
    )
    renames = {
        "dissipation.epsilon": "epsilon", "dissipation.h_A": "h_A", "dissipation.T": "T",
        "dissipation.lambda": "lambdas", "initial.state": "initial", "initial.beta": "beta",
        "initial.file": "initial_file", "output.directory": "output_dir",
    }
    for key, value in values.items():
        section, name = key.split(".", 1)
        if section in ("run", "model"):
            continue
        kwargs[renames.get(key, name)] = value
    if "t_end" not in kwargs:
        kwargs["t_end"] = _DEFAULT_T_END.get(experiment, 30.0)
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    def bad(key, why):
        raise ConfigError(f"invalid value for '{key}': {why}")

    if cfg.L < 2:
        bad("model.L", "need L >= 2")
    if cfg.experiment.startswith("oracle") or cfg.experiment == "compare-exact":
        limit = ORACLE_MAX_L[cfg.variant]
        if cfg.L > limit:
            bad("model.L", f"dense oracle supports L <= {limit} for the {cfg.variant} model")
    if any(e <= 0 for e in cfg.epsilon):
        bad("dissipation.epsilon", "couplings must be positive")
    single_eps = cfg.experiment == "oracle-lindblad"
    if single_eps and len(cfg.epsilon) != 1:
        bad("dissipation.epsilon", "give one value")
    if cfg.is_floquet:
        for key, val in (("dissipation.h_A", cfg.h_A), ("dissipation.T", cfg.T),
                         ("dissipation.lambda", cfg.lambdas)):
            if not val:
                raise ConfigError(f"missing required key '{key}' for the reset protocol")
        if any(t < 1 for t in cfg.T):
            bad("dissipation.T", "T must be >= 1")
        if cfg.experiment != "correlators" and (len(cfg.h_A) > 1 or len(cfg.T) > 1):
            bad("dissipation.h_A" if len(cfg.h_A) > 1 else "dissipation.T",
                "parameter scans are only supported by the correlators experiment")
        if cfg.experiment == "compare-exact":
            if any(lam <= 0 for lam in cfg.lambdas):
                bad("dissipation.lambda", "couplings must be positive")
        elif len(cfg.lambdas) != 1 and any(len(cfg.lambdas) != t for t in cfg.T):
            bad("dissipation.lambda", "give one value or one value per step (T values)")
    if cfg.initial not in INITIAL_STATES:
        bad("initial.state", f"{cfg.initial!r} (choose from {', '.join(INITIAL_STATES)})")
    if cfg.initial == "thermal" and cfg.beta is None:
        raise ConfigError("missing required key 'initial.beta' for a thermal initial state")
    if cfg.initial == "file":
        if cfg.initial_file is None:
            raise ConfigError("missing required key 'initial.file'")
        if cfg.experiment.startswith("oracle") or cfg.experiment == "compare-exact":
            bad("initial.state", "the dense oracle cannot start from an occupation file")
    if cfg.experiment == "compare-exact" and cfg.initial != "infinite-temperature":
        bad("initial.state", "compare-exact always starts at infinite temperature")
    for key, val in (("numerics.dt", cfg.dt), ("numerics.tol", cfg.tol),
                     ("numerics.max_time", cfg.max_time), ("numerics.x_max", cfg.x_max),
                     ("numerics.observe_every", cfg.observe_every)):
        if not val > 0:
            bad(key, "must be positive")
    for key, val in (("numerics.dt_reference", cfg.dt_reference), ("numerics.dt_exact", cfg.dt_exact)):
        if val is not None and not val > 0:
            bad(key, "must be positive")
    if cfg.t_end < 0:
        bad("numerics.t_end", "must be nonnegative")
    if any(s < 0 for s in cfg.snapshots):
        bad("numerics.snapshots", "times must be nonnegative")
    if cfg.experiment == "evolve-reset" and any(
            math.isfinite(s) and s != int(s) for s in cfg.snapshots):
        bad("numerics.snapshots", "reset snapshots are cycle counts")
    if cfg.stride < 1:
        bad("numerics.stride", "must be >= 1")
    if cfg.cycles < 0:
        bad("numerics.cycles", "must be >= 0")
    if cfg.k_max < 0:
        bad("numerics.k_max", "must be >= 0")
    if cfg.experiment == "correlators" and not 1 <= cfg.ell_max <= cfg.L // 2:
        bad("numerics.ell_max", f"must lie in [1, L/2 = {cfg.L // 2}]")
    if not 1 <= cfg.fit_min < cfg.fit_max:
        bad("numerics.fit_min", "need 1 <= fit_min < fit_max")
    # catch gapless grids before any heavy computation
    try:
        bogoliubov_table(cfg.model_params, build_grid(cfg.L))
    except ValueError as exc:
        bad("model.h", str(exc))


# ---------------------------------------------------------------------------
# CSV


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path, columns: Sequence[str], rows, config: RunConfig,
              meta: Optional[Dict[str, Any]] = None) -> Path:
    """Write ``rows`` with a ``#`` header carrying the version and resolved config."""
    path = Path(path)
    buf = io.StringIO()
    buf.write(f"# artifact {__version__}\n")
    buf.write("# config " + json.dumps(config.resolved(), sort_keys=True) + "\n")
    if meta:
        buf.write("# meta " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


@dataclass(frozen=True)
class CsvTable:
    version: str
    config: Dict[str, Any]
    meta: Dict[str, Any]
    columns: List[str]
    data: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


def read_csv(path) -> CsvTable:
    version, config, meta = "", {}, {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = []
    for line in lines:
        if line.startswith("# artifact "):
            version = line[len("# artifact "):]
        elif line.startswith("# config "):
            config = json.loads(line[len("# config "):])
        elif line.startswith("# meta "):
            meta = json.loads(line[len("# meta "):])
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    data = np.array([[float(x) for x in row] for row in reader], dtype=float).reshape(-1, len(columns))
    return CsvTable(version, config, meta, columns, data)


# ---------------------------------------------------------------------------
# metrics


def relative_error_metric(series_a, series_b) -> np.ndarray:
    """Per time stamp ``(1/L) sum_q |(n_a - n_b) / n_b|``; inputs have shape ``(times, L)``."""
    a = np.atleast_2d(np.asarray(series_a, dtype=float))
    b = np.atleast_2d(np.asarray(series_b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"series shapes differ: {a.shape} vs {b.shape}")
    return np.mean(np.abs((a - b) / b), axis=1)


# ---------------------------------------------------------------------------
# experiments


def _initial_state(cfg: RunConfig, table: BogoliubovTable) -> GgeState:
    if cfg.initial == "infinite-temperature":
        return GgeState.infinite_temperature(table)
    if cfg.initial == "thermal":
        return GgeState.thermal(table, cfg.beta)
    if cfg.initial == "ground":
        return GgeState.ground(table)
    src = read_csv(cfg.initial_file)
    if "n" not in src.columns:
        raise ConfigError(f"invalid value for 'initial.file': no column 'n' in {cfg.initial_file}")
    n = src.column("n")
    if n.shape != (table.L,):
        raise ConfigError(f"invalid value for 'initial.file': {n.size} occupations, expected {table.L}")
    return GgeState(table, n)


def _occupation_rows(state: GgeState, clock=None):
    t = state.table
    clock = state.clock if clock is None else clock
    return [(clock, k, t.q[k], t.eps[k], state.n[k]) for k in range(t.L)]


_OCC_COLUMNS = ["clock", "k", "q", "eps", "n"]


def _charge_rows(state: GgeState):
    rows = []
    for ell in range(1, N_CHARGES + 1):
        odd = charge_expectation(state, charge_coefficients(state.table, 2 * ell - 1))
        even = charge_expectation(state, charge_coefficients(state.table, 2 * ell))
        rows.append((ell, odd, even))
    return rows


def _lindblad_trajectory(state, dt, kernels, targets):
    snaps = []
    for target in targets:
        state = evolve(state, target, dt, kernels=kernels)
        snaps.append(state)
    return snaps


def _run_evolve_lindblad(cfg: RunConfig, out: Path) -> List[Path]:
    table = bogoliubov_table(cfg.model_params, build_grid(cfg.L))
    kernels = lindblad_kernels(table)
    start = _initial_state(cfg, table)
    finite = sorted({s for s in cfg.snapshots if math.isfinite(s) and s <= cfg.t_end} | {0.0, cfg.t_end})
    snaps = _lindblad_trajectory(start, cfg.dt, kernels, finite)
    rows = [r for s in snaps for r in _occupation_rows(s)]
    files = []
    meta = {}
    if any(math.isinf(s) for s in cfg.snapshots):
        res = solve_by_evolution(snaps[-1], LindbladFlow(table), cfg.dt, cfg.tol, cfg.max_time)
        rows += _occupation_rows(res.state, math.inf)
        meta.update(steady_residual=res.residual, steady_clock=res.state.clock)
        final = res.state
    else:
        final = snaps[-1]
    files.append(write_csv(out / "occupations.csv", _OCC_COLUMNS, rows, cfg, meta))
    files.append(write_csv(out / "charges.csv", ["ell", "C_odd", "C_even"], _charge_rows(final), cfg,
                           {"clock": final.clock}))
    if cfg.dt_reference is not None:
        ref = _lindblad_trajectory(start, cfg.dt_reference, kernels, finite)
        err = relative_error_metric([s.n for s in snaps], [s.n for s in ref])
        files.append(write_csv(out / "relative_error.csv", ["clock", "relative_error"],
                               zip(finite, err), cfg))
    return files


def _run_evolve_reset(cfg: RunConfig, out: Path) -> List[Path]:
    table = bogoliubov_table(cfg.model_params, build_grid(cfg.L))
    reset = cfg.reset_params()
    kernels = reset_kernels(table, reset)
    state = _initial_state(cfg, table)
    wanted = {int(s) for s in cfg.snapshots if math.isfinite(s)} | {0, cfg.cycles}
    occ = _occupation_rows(state) if 0 in wanted else []
    traj = []
    prev = [state.n]

    def observe(s):
        change = s.n - prev[0]
        prev[0] = s.n
        c = int(s.clock)
        if c % cfg.stride == 0 or c == cfg.cycles:
            traj.append((c, float(np.abs(change).max()), float(np.abs(change).mean())))
        if int(s.clock) in wanted:
            occ.extend(_occupation_rows(s))

    final = evolve_cycles(state, reset, cfg.cycles, observe, kernels)
    return [
        write_csv(out / "trajectory.csv", ["cycle", "max_change", "mean_change"], traj, cfg),
        write_csv(out / "occupations.csv", _OCC_COLUMNS, occ, cfg, {"cycles": int(final.clock)}),
    ]


def _flow_for(cfg: RunConfig, table: BogoliubovTable, T=None, h_A=None):
    return make_flow(table, cfg.reset_params(h_A, T) if cfg.is_floquet else None)


def _run_steady_evolution(cfg: RunConfig, out: Path) -> List[Path]:
    table = bogoliubov_table(cfg.model_params, build_grid(cfg.L))
    flow = _flow_for(cfg, table)
    dt = 1.0 if cfg.is_floquet else cfg.dt
    res = solve_by_evolution(_initial_state(cfg, table), flow, dt, cfg.tol, cfg.max_time)
    meta = {"residual": res.residual, "steps": res.iterations, "clock": res.state.clock}
    return [write_csv(out / "steady.csv", _OCC_COLUMNS, _occupation_rows(res.state), cfg, meta)]


def _run_steady_iterative(cfg: RunConfig, out: Path) -> List[Path]:
    table = bogoliubov_table(cfg.model_params, build_grid(cfg.L))
    res = solve_iterative(_flow_for(cfg, table), cfg.initial_beta, cfg.k_max, cfg.tol)
    iters = [(r.k, r.residual, r.stationarity) for r in res.history]
    occ = [row for r in res.history for row in _occupation_rows(GgeState(table, r.n), r.k)]
    meta = {"residual": res.residual, "k": res.iterations}
    return [
        write_csv(out / "iterations.csv", ["k", "residual", "stationarity"], iters, cfg, meta),
        write_csv(out / "occupations.csv", _OCC_COLUMNS, occ, cfg, meta),
    ]


def _dense_initial(cfg: RunConfig, H) -> np.ndarray:
    if cfg.initial == "infinite-temperature":
        return oracle.infinite_temperature(cfg.L, "even")
    if cfg.initial == "thermal":
        return oracle.thermal_density_matrix(H, cfg.beta)
    return oracle.ground_state_density_matrix(H, "even")


def _run_oracle_lindblad(cfg: RunConfig, out: Path) -> List[Path]:
    params = cfg.model_params
    eps = cfg.epsilon[0]
    spec = oracle.lindblad_spec(params, cfg.L, eps)
    table = bogoliubov_table(params, build_grid(cfg.L))
    nops = oracle.mode_number_operators(table)
    i = cfg.L // 2 - 1
    xx, yy = oracle.string_operator("xx", i, 1, cfg.L), oracle.string_operator("yy", i, 1, cfg.L)
    rows = []

    def observe(t, rho):
        n = oracle.mode_occupations_exact(rho, table, nops)
        rows.append((eps * t, oracle.expectation(xx, rho).real, oracle.expectation(yy, rho).real,
                     np.trace(rho).real, *n))

    rho0 = _dense_initial(cfg, spec.hamiltonian)
    oracle.lindblad_evolve(rho0, spec, cfg.t_end / eps, cfg.dt_exact, observe,
                           observe_every=cfg.observe_every / eps)
    cols = ["clock", "xx", "yy", "trace"] + [f"n_{k}" for k in range(cfg.L)]
    return [write_csv(out / "trajectory.csv", cols, rows, cfg)]


def _run_oracle_reset(cfg: RunConfig, out: Path) -> List[Path]:
    params = cfg.model_params
    circuit = oracle.reset_circuit(params, cfg.reset_params(), cfg.L)
    table = bogoliubov_table(params, build_grid(cfg.L))
    nops = oracle.mode_number_operators(table)
    i = cfg.L // 2 - 1
    xx, yy = oracle.string_operator("xx", i, 1, cfg.L), oracle.string_operator("yy", i, 1, cfg.L)
    H = oracle.build_tfim_sparse(params.J, params.h, cfg.L)
    rho = _dense_initial(cfg, H)
    rows = []
    for c in range(cfg.cycles + 1):
        if c:
            rho = circuit.cycle(rho)
        n = oracle.mode_occupations_exact(rho, table, nops)
        rows.append((c, oracle.expectation(xx, rho).real, oracle.expectation(yy, rho).real,
                     np.trace(rho).real, *n))
    cols = ["cycle", "xx", "yy", "trace"] + [f"n_{k}" for k in range(cfg.L)]
    return [write_csv(out / "trajectory.csv", cols, rows, cfg)]


def _run_correlators(cfg: RunConfig, out: Path) -> List[Path]:
    table = bogoliubov_table(cfg.model_params, build_grid(cfg.L))
    ground = GgeState.ground(table)
    gs = correlator_series(ground, "yy", cfg.ell_max)
    xi_gs = fit_correlation_length(gs, cfg.fit_min, cfg.fit_max)
    points = [(h_A, T) for h_A in cfg.h_A for T in cfg.T] if cfg.is_floquet else [(math.nan, 0)]
    corr_rows, xi_rows = [], []
    for h_A, T in points:
        flow = _flow_for(cfg, table, T if cfg.is_floquet else None, h_A if cfg.is_floquet else None)
        dt = 1.0 if cfg.is_floquet else cfg.dt
        res = solve_by_evolution(_initial_state(cfg, table), flow, dt, cfg.tol, cfg.max_time)
        sxx = correlator_series(res.state, "xx", cfg.ell_max)
        syy = correlator_series(res.state, "yy", cfg.ell_max)
        for ell, a, b, g in zip(syy.ells, sxx.values, syy.values, gs.values):
            corr_rows.append((h_A, T, ell, a, b, g))
        xi_rows.append((h_A, T, fit_correlation_length(syy, cfg.fit_min, cfg.fit_max), xi_gs,
                        res.residual))
    return [
        write_csv(out / "correlators.csv", ["h_A", "T", "ell", "xx", "yy", "yy_ground"], corr_rows, cfg),
        write_csv(out / "correlation_length.csv", ["h_A", "T", "xi", "xi_ground", "residual"],
                  xi_rows, cfg),
    ]


def _run_compare_exact(cfg: RunConfig, out: Path) -> List[Path]:
    params = cfg.model_params
    if cfg.is_floquet:
        traces = compare_reset_exact(params, cfg.h_A[0], cfg.T[0], cfg.L, cfg.lambdas,
                                     cfg.x_max, kinds=("xx", "yy"))
    else:
        traces = compare_lindblad_exact(params, cfg.L, cfg.epsilon, cfg.t_end,
                                        cfg.observe_every, dt_exact=cfg.dt_exact)
    rows, summary = [], []
    for c, tr in traces.items():
        for i, x in enumerate(tr.x):
            rows.append((c, x, tr.exact["xx"][i], tr.gge["xx"][i], tr.exact["yy"][i], tr.gge["yy"][i]))
        summary.append((c, tr.max_deviation("xx"), tr.max_deviation("yy")))
    return [
        write_csv(out / "comparison.csv", ["coupling", "x", "exact_xx", "gge_xx", "exact_yy", "gge_yy"],
                  rows, cfg),
        write_csv(out / "deviation.csv", ["coupling", "max_dev_xx", "max_dev_yy"], summary, cfg),
    ]


_RUNNERS = {
    "evolve-lindblad": _run_evolve_lindblad,
    "evolve-reset": _run_evolve_reset,
    "steady-evolution": _run_steady_evolution,
    "steady-iterative": _run_steady_iterative,
    "oracle-lindblad": _run_oracle_lindblad,
    "oracle-reset": _run_oracle_reset,
    "correlators": _run_correlators,
    "compare-exact": _run_compare_exact,
}


def run(cfg: RunConfig, out_dir=None) -> List[Path]:
    """Execute ``cfg`` and return the written files."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s into %s", cfg.experiment, out)
    return _RUNNERS[cfg.experiment](cfg, out)
