"""Config-driven solve / sweep / entropy-check / properties workflows.

Config files are plain ``section.key = value`` lines; ``#`` starts a comment.
Every command writes its artifacts into an output directory and returns an
exit code: 0 pass, 1 quantitative failure (or solver abort), 2 bad config or
I/O.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .diagnostics import RateReport, cone_l1_error, mass, rate_fit, total_variation
from .entropy import (ConeSpec, Cutoff, PsiProfile, TestFunction, TimeWindow,
                      build_test_function, entropy_residual, parse_psi)
from .flux import FluxModel, lipschitz_bound, parse_flux
from .grid import Field, GridSpec, TimeSpec, make_grid, project_initial
from .reference import (ReferenceSpec, reference_field, smoothed_step,
                        travelling_jump_history)
from .solver import SolveResult, SolverConfig, SolverError, advance

logger = logging.getLogger(__name__)

FIELD_MAGIC = "anisovisc-field v1"

DEFAULTS = {
    "grid.x_min": "-1", "grid.x_max": "1", "grid.y_min": "-1", "grid.y_max": "1",
    "grid.nx": "16", "grid.ny": "64",
    "flux.model": "burgers",
    "initial.kind": "riemann",
    "initial.u_l": "1", "initial.u_r": "0", "initial.amplitude": "1",
    "initial.sigma": "0.5", "initial.sigma_x": "0.5", "initial.sigma_y": "0.5",
    "initial.width": "0", "initial.value": "0",
    "time.t_end": "1",
    "solver.epsilon": "0", "solver.splitting": "lie", "solver.boundary": "periodic",
    "solver.cfl": "0.45", "solver.record_every": "1", "solver.dt": "",
    "reference.kind": "discrete_eps0", "reference.refine": "2",
    "cone.L": "", "cone.M": "auto",
    "sweep.epsilons": "0.04,0.02,0.01,0.005", "sweep.threshold": "0.45",
    "entropy.psi": "const:0.25;const:0.5;const:0.75",
    "entropy.test_functions": "",
    "entropy.tolerance": "auto",
    "entropy.source": "solver",
    "entropy.jump_u_l": "0", "entropy.jump_u_r": "1",
    "output.dir": "out",
}


class ConfigError(ValueError):
    pass


# {{{ config parsing

def parse_config(text: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        if not eq or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        values[key] = value.strip()
    return values


def load_config(path) -> "ExperimentConfig":
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_mapping(parse_config(text))


def _float(raw: dict, key: str) -> float:
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw[key]!r}") from None


def _int(raw: dict, key: str) -> int:
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw[key]!r}") from None


def initial_datum(kind: str, p: dict[str, float]) -> Callable:
    """Initial data built-ins, as callables of ``(x, y)``."""
    if kind == "constant":
        c = p["value"]
        return lambda x, y: np.full(np.broadcast(x, y).shape, c)
    if kind == "riemann":
        step = smoothed_step(p["u_l"], p["u_r"], 0.0)
        return lambda x, y: np.broadcast_to(step(y), np.broadcast(x, y).shape)
    if kind == "gaussian_x_times_step_y":
        A, s = p["amplitude"], p["sigma"]
        step = smoothed_step(p["u_l"], p["u_r"], p["width"])
        return lambda x, y: A * np.exp(-np.asarray(x) ** 2 / (2 * s * s)) * step(y)
    if kind == "gaussian_xy":
        A, sx, sy = p["amplitude"], p["sigma_x"], p["sigma_y"]
        return lambda x, y: A * np.exp(-np.asarray(x) ** 2 / (2 * sx * sx) - np.asarray(y) ** 2 / (2 * sy * sy))
    raise ConfigError(f"unknown initial.kind {kind!r}")


def parse_test_functions(text: str, grid: GridSpec, t_end: float, M: float) -> list[TestFunction]:
    """``beta=..,nu=..,tau=..,alpha0=..,L=..,alpha=..[,M=..]`` entries separated by ``;``."""
    out = []
    for entry in filter(None, (s.strip() for s in text.split(";"))):
        params = {}
        for item in filter(None, (s.strip() for s in entry.split(","))):
            key, _, value = item.partition("=")
            params[key.strip()] = float(value)
        missing = {"beta", "nu", "tau", "alpha0", "L", "alpha"} - params.keys()
        if missing:
            raise ConfigError(f"test function {entry!r} is missing {sorted(missing)}")
        out.append(build_test_function(
            Cutoff(params["beta"]),
            TimeWindow(params["nu"], params["tau"], params["alpha0"], t_end),
            ConeSpec(params["L"], params.get("M", M)),
            params["alpha"],
        ))
    return out


@dataclass
class ExperimentConfig:
    grid: GridSpec
    model: FluxModel
    initial_kind: str
    initial_params: dict[str, float]
    time: TimeSpec
    solver: SolverConfig
    reference_kind: str
    reference_refine: int
    cone_L: float | None
    cone_M: float | None  # None means "auto"
    epsilons: list[float]
    threshold: float
    psi_labels: list[str]
    test_function_text: str
    entropy_tolerance: float | None
    entropy_source: str
    jump_states: tuple[float, float]
    output_dir: Path
    raw: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "ExperimentConfig":
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
        raw = {**DEFAULTS, **values}
        try:
            grid = make_grid(*(_float(raw, f"grid.{k}") for k in ("x_min", "x_max", "y_min", "y_max")),
                             _int(raw, "grid.nx"), _int(raw, "grid.ny"))
            model = parse_flux(raw["flux.model"])
            init = {k: _float(raw, f"initial.{k}") for k in
                    ("u_l", "u_r", "amplitude", "sigma", "sigma_x", "sigma_y", "width", "value")}
            time = TimeSpec(_float(raw, "time.t_end"))
            solver = SolverConfig(
                epsilon=_float(raw, "solver.epsilon"),
                splitting=raw["solver.splitting"],
                boundary=raw["solver.boundary"],
                cfl=_float(raw, "solver.cfl"),
                record_every=_int(raw, "solver.record_every"),
                dt=_float(raw, "solver.dt") if raw["solver.dt"] else None,
            )
            epsilons = [float(s) for s in raw["sweep.epsilons"].split(",") if s.strip()]
            psi_labels = [s.strip() for s in raw["entropy.psi"].split(";") if s.strip()]
            for label in psi_labels:
                parse_psi(label)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if raw["reference.kind"] not in ("linear_gaussian", "riemann_1d", "discrete_eps0"):
            raise ConfigError(f"unknown reference.kind {raw['reference.kind']!r}")
        if raw["entropy.source"] not in ("solver", "travelling_jump"):
            raise ConfigError(f"unknown entropy.source {raw['entropy.source']!r}")
        initial_datum(raw["initial.kind"], init)
        tol = raw["entropy.tolerance"]
        return cls(
            grid=grid, model=model, initial_kind=raw["initial.kind"], initial_params=init,
            time=time, solver=solver,
            reference_kind=raw["reference.kind"], reference_refine=_int(raw, "reference.refine"),
            cone_L=_float(raw, "cone.L") if raw["cone.L"] else None,
            cone_M=None if raw["cone.M"] == "auto" else _float(raw, "cone.M"),
            epsilons=epsilons, threshold=_float(raw, "sweep.threshold"),
            psi_labels=psi_labels, test_function_text=raw["entropy.test_functions"],
            entropy_tolerance=None if tol == "auto" else _float(raw, "entropy.tolerance"),
            entropy_source=raw["entropy.source"],
            jump_states=(_float(raw, "entropy.jump_u_l"), _float(raw, "entropy.jump_u_r")),
            output_dir=Path(raw["output.dir"]),
            raw=raw,
        )

    # derived objects

    @property
    def u0(self) -> Callable:
        return initial_datum(self.initial_kind, self.initial_params)

    def initial_field(self) -> Field:
        return project_initial(self.u0, self.grid)

    def resolve_cone(self, u0_field: Field | None = None) -> ConeSpec:
        """Cone with ``M > max |f'|`` over ``|u| <= ||u0||_inf`` (when auto) and ``L > M T``."""
        u0_field = u0_field or self.initial_field()
        if self.cone_M is None:
            bound = u0_field.sup_norm
            M = lipschitz_bound(self.model, -bound, bound)
        else:
            M = self.cone_M
        if self.cone_L is None:
            raise ConfigError("cone.L is required")
        if not self.cone_L > M * self.time.t_end:
            raise ConfigError(f"cone.L={self.cone_L} must exceed M*T={M * self.time.t_end:.6g}")
        return ConeSpec(self.cone_L, M)

    def reference_spec(self) -> ReferenceSpec:
        p = self.initial_params
        if self.reference_kind == "linear_gaussian":
            if not self.model.is_linear or self.initial_kind != "gaussian_x_times_step_y":
                raise ConfigError("linear_gaussian reference needs a linear flux and "
                                  "gaussian_x_times_step_y initial data")
            return ReferenceSpec("linear_gaussian", dict(
                a=self.model.speed, sigma=p["sigma"], amplitude=p["amplitude"],
                u_l=p["u_l"], u_r=p["u_r"], width=p["width"]))
        if self.reference_kind == "riemann_1d":
            if self.model.label != "burgers" or self.initial_kind != "riemann":
                raise ConfigError("riemann_1d reference needs the burgers flux and riemann initial data")
            return ReferenceSpec("riemann_1d", dict(u_l=p["u_l"], u_r=p["u_r"]))
        return ReferenceSpec("discrete_eps0", dict(
            u0=self.u0, model=self.model, config=self.solver, refine=self.reference_refine))

# }}}


# {{{ file formats

def write_field(path, field: Field) -> None:
    """Snapshot: magic line, grid line, then ``ny`` rows of ``nx`` values (row ``j`` is ``y_j``)."""
    g = field.grid
    lines = [FIELD_MAGIC,
             " ".join(repr(float(v)) for v in (g.x_min, g.x_max, g.y_min, g.y_max))
             + f" {g.nx} {g.ny} {float(field.time)!r}"]
    for j in range(g.ny):
        lines.append(" ".join(repr(float(v)) for v in field.values[:, j]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> Field:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != FIELD_MAGIC:
        raise ValueError(f"{path} is not an {FIELD_MAGIC!r} file")
    head = lines[1].split()
    grid = make_grid(*map(float, head[:4]), int(head[4]), int(head[5]))
    rows = [list(map(float, ln.split())) for ln in lines[2:2 + grid.ny]]
    values = np.array(rows).T
    return Field(grid, values, float(head[6]))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def write_step_log(path, result: SolveResult) -> None:
    _write_csv(path, ["step", "t", "dt", "mass", "tv", "dudt_l1"],
               ([r.step, r.t, r.dt, r.mass, r.tv, r.dudt_l1] for r in result.step_log))


def _plot_rate(path, report: RateReport) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    eps = np.array([p[0] for p in report.pairs])
    err = np.array([p[1] for p in report.pairs])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, err, "o-", label=f"measured (slope {report.slope:.3f})")
    ax.loglog(eps, err[0] * np.sqrt(eps / eps[0]), "k--", label=r"$\varepsilon^{1/2}$")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("cone L1 error")
    ax.legend()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_field(path, f: Field) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    g = f.grid
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(f.values.T, origin="lower", aspect="auto",
                   extent=(g.x_min, g.x_max, g.y_min, g.y_max))
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"t = {f.time:.4g}")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

# }}}


# {{{ commands

def _outdir(cfg: ExperimentConfig, out) -> Path:
    path = Path(out) if out is not None else cfg.output_dir
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_solve(cfg: ExperimentConfig, out=None, plot=False) -> int:
    outdir = _outdir(cfg, out)
    try:
        result = advance(cfg.initial_field(), cfg.model, cfg.solver, cfg.time)
    except SolverError as exc:
        print(f"solver aborted: {exc}", file=sys.stderr)
        return 1
    write_field(outdir / "final_field.txt", result.final)
    write_step_log(outdir / "step_log.csv", result)
    if plot:
        _plot_field(outdir / "final_field.svg", result.final)
    print(f"solve: {len(result.step_log)} steps to t={result.final.time:.6g}, "
          f"mass={mass(result.final):.12g}")
    return 0


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> tuple[RateReport, str]:
    """Cone errors of the viscous runs against the reference at ``t_end``."""
    if len(cfg.epsilons) < 3:
        raise ConfigError(f"sweep needs at least 3 epsilon values, got {len(cfg.epsilons)}")
    if len(set(cfg.epsilons)) < 2:
        raise ConfigError("sweep epsilons are all equal; the rate fit is degenerate")
    u0 = cfg.initial_field()
    cone = cfg.resolve_cone(u0)
    t_end = cfg.time.t_end
    ref = reference_field(cfg.reference_spec(), cfg.grid, t_end)

    def one(eps):
        conf = replace(cfg.solver, epsilon=eps, record_every=10**9)
        return cone_l1_error(advance(u0, cfg.model, conf, cfg.time).final, ref, cone, t_end)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        errors = list(pool.map(one, cfg.epsilons))
    note = ""
    if cfg.reference_kind != "discrete_eps0":
        note = "errors include the scheme error against an exact solution (floor as eps->0)"
    return rate_fit(list(zip(cfg.epsilons, errors))), note


def cmd_sweep(cfg: ExperimentConfig, out=None, plot=False, threads=1) -> int:
    outdir = _outdir(cfg, out)
    try:
        report, note = run_sweep(cfg, threads)
    except SolverError as exc:
        print(f"solver aborted: {exc}", file=sys.stderr)
        return 1
    (outdir / "sweep.csv").write_text(report.to_csv())
    summary = report.summary(cfg.threshold, note)
    (outdir / "sweep_summary.txt").write_text(summary + "\n")
    if plot:
        _plot_rate(outdir / "sweep.svg", report)
    print(summary)
    return 0 if report.passes(cfg.threshold) else 1


def cmd_entropy_check(cfg: ExperimentConfig, out=None) -> int:
    outdir = _outdir(cfg, out)
    u0 = cfg.initial_field()
    if cfg.entropy_source == "travelling_jump":
        ul, ur = cfg.jump_states
        speed = float((cfg.model.eval(ul) - cfg.model.eval(ur)) / (ul - ur)) if ul != ur else 0.0
        n = max(2, int(math.ceil(cfg.time.t_end / (cfg.solver.cfl * cfg.grid.dy))) + 1)
        history = travelling_jump_history(cfg.grid, ul, ur, speed, np.linspace(0.0, cfg.time.t_end, n))
    else:
        try:
            history = advance(u0, cfg.model, cfg.solver, cfg.time)
        except SolverError as exc:
            print(f"solver aborted: {exc}", file=sys.stderr)
            return 1
    sup = max(f.sup_norm for f in history.history)
    M = lipschitz_bound(cfg.model, -sup, sup)
    try:
        phis = parse_test_functions(cfg.test_function_text, cfg.grid, cfg.time.t_end, M)
    except ValueError as exc:
        print(f"bad test function: {exc}", file=sys.stderr)
        return 2
    if not phis:
        print("entropy.test_functions is empty", file=sys.stderr)
        return 2
    gap = float(np.diff(history.times).max())
    for k, phi in enumerate(phis):
        if gap > 0.25 * phi.window.alpha0:
            print(f"warning: frame spacing {gap:.3g} is coarse for the time window of test "
                  f"function {k} (alpha0={phi.window.alpha0:g}); residuals carry quadrature error",
                  file=sys.stderr)
    rows, failed, violations = [], 0, 0
    for k, phi in enumerate(phis):
        for label in cfg.psi_labels:
            volume = phi.support_volume()
            tol = cfg.entropy_tolerance if cfg.entropy_tolerance is not None else 1e-3 * sup * volume
            try:
                r = entropy_residual(history, cfg.model, parse_psi(label), phi)
            except ValueError as exc:
                violations += 1
                rows.append([label, k, "", volume, tol, f"support_violation: {exc}"])
                continue
            ok = r >= -tol
            failed += not ok
            rows.append([label, k, r, volume, tol, "pass" if ok else "fail"])
    _write_csv(outdir / "entropy_residuals.csv",
               ["psi", "test_function", "residual", "support_volume", "tolerance", "status"], rows)
    print(f"entropy-check: {len(rows)} cases, {failed} below tolerance, {violations} support violations")
    if violations:
        return 2
    return 1 if failed else 0


def check_properties(result: SolveResult) -> tuple[list[str], float]:
    """Violations of mass conservation, TV bound and maximum principle, and max |u_t|_1."""
    u0 = result.initial
    m0 = mass(u0)
    scale = max(abs(m0), u0.grid.cell_area * float(np.abs(u0.values).sum()))
    tv0 = total_variation(u0, result.boundary)
    lo, hi = float(u0.values.min()), float(u0.values.max())
    problems = []
    for rec in result.step_log:
        drift = abs(rec.mass - m0) / scale if scale > 0 else abs(rec.mass - m0)
        if drift > 1e-10:
            problems.append(f"mass drift {drift:.3e} at step {rec.step}")
            break
    for rec in result.step_log:
        if rec.tv > tv0 * (1 + 1e-8):
            problems.append(f"TV {rec.tv:.12g} exceeds initial {tv0:.12g} at step {rec.step}")
            break
    for k, f in enumerate(result.history):
        if f.values.min() < lo - 1e-10 or f.values.max() > hi + 1e-10:
            problems.append(f"maximum principle violated in frame {k} (t={f.time:.6g})")
            break
    dudt = max((r.dudt_l1 for r in result.step_log), default=0.0)
    return problems, dudt


def cmd_properties(cfg: ExperimentConfig, out=None) -> int:
    outdir = _outdir(cfg, out)
    try:
        result = advance(cfg.initial_field(), cfg.model, cfg.solver, cfg.time)
    except SolverError as exc:
        print(f"properties: FAIL solver guard: {exc}", file=sys.stderr)
        (outdir / "properties_summary.txt").write_text(f"FAIL solver guard: {exc}\n")
        return 1
    write_step_log(outdir / "step_log.csv", result)
    problems, dudt = check_properties(result)
    lines = [f"max_dudt_l1={dudt!r}"] + problems + ["PASS" if not problems else "FAIL"]
    (outdir / "properties_summary.txt").write_text("\n".join(lines) + "\n")
    print("properties: " + "; ".join(lines))
    return 1 if problems else 0

# }}}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="anisovisc", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["solve", "sweep", "entropy-check", "properties"])
    parser.add_argument("--config", required=True, help="key=value config file")
    parser.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    parser.add_argument("--plot", action="store_true", help="also write SVG plots")
    parser.add_argument("--threads", type=int, default=1, help="concurrent sweep runs")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    try:
        cfg = load_config(args.config)
        if args.command == "solve":
            return cmd_solve(cfg, args.out, args.plot)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.plot, args.threads)
        if args.command == "entropy-check":
            return cmd_entropy_check(cfg, args.out)
        return cmd_properties(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
