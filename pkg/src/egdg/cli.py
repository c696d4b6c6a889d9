"""Experiment driver: convergence studies, field/energy runs, verification.

Subcommands
-----------
converge  run a mesh sequence against an exact solution, emit errors.csv
run       evolve one configuration, emit energy.csv and field snapshots
energy    like run, but energy history only
verify    run the numerical property suites (oracle, identities, fluxes)

Configuration is a TOML file of flat keys (see RunConfig); every key can
be overridden by a command-line flag of the same name.  Exit codes:
0 success, 1 usage error, 2 numerical breakdown, 3 property-suite failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import problems as problem_catalog
from .diagnostics import ErrorRecord, attach_rates, discrete_energy, l2_error, regression_rate
from .errors import NumericalBreakdownError
from .flux import BoundaryParams, FluxParams, PRESET_NAMES
from .mesh import build_cartesian_mesh, build_interval_mesh
from .problems import PROBLEM_NAMES, shifted
from .semidisc import Discretization
from .timeint import StepRule, integrate, n_steps_for


@dataclass
class RunConfig:
    """Fully resolved run parameters; serialized verbatim to the manifest."""

    problem: str = "sine-gordon"
    flux: str = "sommerfeld"
    alpha: float = None
    tau: float = None
    beta: float = None
    xi: float = 1.0
    q: int = 4
    s: int = None
    N: int = 120
    nx: int = None
    ny: int = None
    domain: list = None
    boundary: str = None  # dirichlet | neumann | periodic | exact | "g,e,a"
    T: float = 2.0
    dt: float = None
    kappa: float = None
    quad_n: int = 16
    stride: int = 0  # 0: pick ~200 samples per run
    outdir: str = "out"
    shift: bool = None
    seed: int = 0
    theta: float = None
    mu: float = 0.2
    uniform_samples: int = 0
    snapshots: bool = True
    Ns: list = field(default_factory=list)  # converge mesh sequence
    regression_count: int = 6

    def resolved_s(self) -> int:
        return self.q if self.s is None else self.s

    def validate(self, needs_timestep: bool = True):
        if self.problem not in PROBLEM_NAMES:
            raise UsageError(f"unknown problem {self.problem!r}")
        if self.flux not in PRESET_NAMES and self.flux != "custom":
            raise UsageError(f"unknown flux {self.flux!r}")
        s = self.resolved_s()
        if not (self.q - 2 <= s <= self.q):
            raise UsageError(f"s={s} outside the supported range [q-2, q] for q={self.q}")
        if s < self.q - 1:
            print(f"warning: s={s} is below q-1={self.q - 1}; accuracy degrades", file=sys.stderr)
        if needs_timestep and self.dt is None and self.kappa is None:
            raise UsageError("need a time step: set dt or kappa")


class UsageError(ValueError):
    pass


def load_config(path: str = None, overrides: dict = None) -> RunConfig:
    data = {}
    if path:
        with open(path, "rb") as fh:
            data.update(tomllib.load(fh))
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**data)


def make_flux(cfg: RunConfig) -> FluxParams:
    if cfg.flux != "custom":
        p = FluxParams.preset(cfg.flux, xi=cfg.xi)
        if cfg.alpha is None and cfg.tau is None and cfg.beta is None:
            return p
        return FluxParams(
            alpha=p.alpha if cfg.alpha is None else cfg.alpha,
            tau=p.tau if cfg.tau is None else cfg.tau,
            beta=p.beta if cfg.beta is None else cfg.beta,
            name="custom",
        )
    return FluxParams(cfg.alpha or 0.5, cfg.tau or 0.0, cfg.beta or 0.0, "custom")


def make_problem(cfg: RunConfig):
    problem = problem_catalog.by_name(cfg.problem, theta=cfg.theta, mu=cfg.mu)
    shift_on = cfg.shift
    if shift_on is None:
        # convergence-study problems default to the zero-initial-data form
        shift_on = cfg.problem in ("breather-forced", "manufactured-1d", "manufactured-2d")
    if shift_on:
        problem = shifted(problem)
    if cfg.boundary is not None:
        problem = dataclasses.replace(problem, boundary=parse_boundary(cfg.boundary))
    return problem


def parse_boundary(spec: str):
    table = {
        "dirichlet": BoundaryParams.dirichlet,
        "neumann": BoundaryParams.neumann,
    }
    if spec in table:
        return table[spec]()
    if spec in ("periodic", "exact"):
        return spec
    try:
        parts = [float(p) for p in spec.split(",")]
    except ValueError:
        raise UsageError(f"boundary spec {spec!r} is not a name or 'gamma,eta[,a]'")
    if len(parts) not in (2, 3):
        raise UsageError(f"boundary spec {spec!r} is not a name or 'gamma,eta[,a]'")
    return BoundaryParams(*parts)


def make_mesh(cfg: RunConfig, problem, N: int = None):
    periodic = problem.boundary == "periodic"
    if problem.ndim == 1:
        a, b = cfg.domain if cfg.domain else problem.domain
        return build_interval_mesh(a, b, N or cfg.N, periodic=periodic)
    dom = tuple(cfg.domain) if cfg.domain else problem.domain
    nx = N or cfg.nx or cfg.N
    ny = N or cfg.ny or cfg.N
    return build_cartesian_mesh(dom, nx, ny, periodic=(periodic, periodic))


def make_rule(cfg: RunConfig) -> StepRule:
    if cfg.dt is not None:
        return StepRule.fixed(cfg.dt)
    return StepRule.proportional(cfg.kappa)


def build_run(cfg: RunConfig, N: int = None):
    problem = make_problem(cfg)
    mesh = make_mesh(cfg, problem, N)
    disc = Discretization(
        problem, mesh, cfg.q, cfg.resolved_s(), flux=make_flux(cfg),
        boundary_flux=FluxParams.sommerfeld(xi=cfg.xi), quad_n=cfg.quad_n,
    )
    return problem, mesh, disc


def write_manifest(cfg: RunConfig, outdir: Path, extra: dict = None):
    payload = dataclasses.asdict(cfg)
    payload.update(extra or {})
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, default=str)


def write_csv(path: Path, header: list, rows: list):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_csv(path) -> tuple:
    """Round-trip reader for the tool's own CSV output."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _single_converge_run(args):
    cfg, N = args
    problem, mesh, disc = build_run(cfg, N)
    if problem.exact is None:
        raise UsageError(f"problem {cfg.problem!r} has no exact solution to converge against")
    state = disc.project_initial()
    final, _ = integrate(state, cfg.T, make_rule(cfg), disc.rhs, h=float(min(mesh.h)))
    err = l2_error(disc, final)
    return ErrorRecord(
        N=N, h=float(min(mesh.h)), q=cfg.q, s=cfg.resolved_s(),
        flux=cfg.flux, l2_error_u=err,
    )


def cmd_converge(cfg: RunConfig) -> int:
    if not cfg.Ns:
        raise UsageError("converge needs a mesh sequence, e.g. --Ns 100,200,400")
    outdir = Path(cfg.outdir)
    workers = _worker_count(len(cfg.Ns))
    jobs = [(cfg, int(N)) for N in cfg.Ns]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_single_converge_run, jobs))
    else:
        records = [_single_converge_run(j) for j in jobs]
    records = attach_rates(records)
    rows = [
        [r.N, f"{r.h:.12g}", r.q, r.s, r.flux, f"{r.l2_error_u:.12e}",
         "" if r.rate is None else f"{r.rate:.4f}"]
        for r in records
    ]
    write_csv(outdir / "errors.csv", ["N", "h", "q", "s", "flux", "l2_error_u", "rate"], rows)
    extra = {}
    if len(records) >= 2:
        count = min(cfg.regression_count, len(records))
        extra["regression_rate"] = regression_rate(records, count)
        extra["regression_count"] = count
    write_manifest(cfg, outdir, extra)
    for r in records:
        rate = "--" if r.rate is None else f"{r.rate:.2f}"
        print(f"N={r.N:<6d} h={r.h:<10.4g} l2={r.l2_error_u:.4e} ({rate})")
    if "regression_rate" in extra:
        print(f"regression rate ({extra['regression_count']} finest): {extra['regression_rate']:.3f}")
    return 0


def _snapshot_rows(disc, state, uniform: int):
    problem = disc.problem
    if uniform > 0:
        return _uniform_snapshot_rows(disc, state, uniform)
    u = disc.u_at_nodes(state)
    v = disc.v_at_nodes(state)
    if problem.is_shifted:
        u = u + disc.u0_nodes
    x = disc.x_nodes
    rows = []
    if disc.mesh.ndim == 1:
        order = np.argsort(x.ravel())
        xs, us, vs = x.ravel()[order], u.ravel()[order], v.ravel()[order]
        for xi, ui, vi in zip(xs, us, vs):
            rows.append([f"{xi:.9g}", f"{ui:.12e}", f"{vi:.12e}"])
        return ["x", "u", "v"], rows
    xs = x.reshape(-1, 2)
    for (xi, yi), ui, vi in zip(xs, u.ravel(), v.ravel()):
        rows.append([f"{xi:.9g}", f"{yi:.9g}", f"{ui:.12e}", f"{vi:.12e}"])
    return ["x", "y", "u", "v"], rows


def _uniform_snapshot_rows(disc, state, m: int):
    """Interpolate the modal solution onto a uniform plotting grid."""
    mesh = disc.mesh
    basis = disc.basis
    problem = disc.problem
    rows = []
    if mesh.ndim == 1:
        xs = np.linspace(mesh.lo[0], mesh.hi[0], m)
        h = mesh.h[0]
        ix = np.clip(((xs - mesh.lo[0]) / h).astype(int), 0, mesh.n_elements - 1)
        ref = 2.0 * (xs - mesh.cell_lo[ix, 0]) / h - 1.0
        V = basis.eval_at(ref)
        u = np.sum(state.u[ix] * V, axis=1)
        v = np.sum(state.v[ix] * V[:, disc.sel_s], axis=1)
        if problem.is_shifted:
            u = u + problem.shift.u0(xs)
        for xi, ui, vi in zip(xs, u, v):
            rows.append([f"{xi:.9g}", f"{ui:.12e}", f"{vi:.12e}"])
        return ["x", "u", "v"], rows
    gx = np.linspace(mesh.lo[0], mesh.hi[0], m)
    gy = np.linspace(mesh.lo[1], mesh.hi[1], m)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    nx, ny = mesh.shape
    ix = np.clip(((pts[:, 0] - mesh.lo[0]) / mesh.h[0]).astype(int), 0, nx - 1)
    iy = np.clip(((pts[:, 1] - mesh.lo[1]) / mesh.h[1]).astype(int), 0, ny - 1)
    eid = iy * nx + ix
    ref = 2.0 * (pts - mesh.cell_lo[eid]) / mesh.h - 1.0
    V = basis.eval_at(ref)
    u = np.sum(state.u[eid] * V, axis=1)
    v = np.sum(state.v[eid] * V[:, disc.sel_s], axis=1)
    if problem.is_shifted:
        u = u + problem.shift.u0(pts)
    for (xi, yi), ui, vi in zip(pts, u, v):
        rows.append([f"{xi:.9g}", f"{yi:.9g}", f"{ui:.12e}", f"{vi:.12e}"])
    return ["x", "y", "u", "v"], rows


def _run_with_observers(cfg: RunConfig, want_snapshots: bool) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    problem, mesh, disc = build_run(cfg)
    state = disc.project_initial()
    rule = make_rule(cfg)
    n_total = n_steps_for(cfg.T, rule.dt(float(min(mesh.h))))
    stride = cfg.stride if cfg.stride > 0 else max(1, n_total // 200)

    e0 = discrete_energy(disc, state)
    energy_rows = []
    snap_idx = [0]

    def observer(step, t, st):
        sample = discrete_energy(disc, st)
        drift = (sample.E - e0.E) / abs(e0.E) if e0.E != 0 else sample.E
        energy_rows.append(
            [f"{t:.12g}", f"{sample.E:.15e}", f"{sample.kinetic:.15e}",
             f"{sample.strain:.15e}", f"{sample.potential:.15e}", f"{drift:.6e}"]
        )
        if want_snapshots and cfg.snapshots:
            header, rows = _snapshot_rows(disc, st, cfg.uniform_samples)
            write_csv(outdir / f"snapshot_{snap_idx[0]:05d}.csv", header, rows)
            snap_idx[0] += 1

    status = 0
    extra = {"stride": stride}
    try:
        final, _ = integrate(
            state, cfg.T, rule, disc.rhs, h=float(min(mesh.h)),
            observer=observer, stride=stride,
        )
        extra["completed"] = True
        if problem.exact is not None:
            extra["final_l2_error_u"] = l2_error(disc, final)
    except NumericalBreakdownError as err:
        extra.update(completed=False, abort_time=err.t, abort_element=err.element,
                     error=str(err))
        status = 2
    write_csv(
        outdir / "energy.csv",
        ["t", "E", "kinetic", "strain", "potential", "rel_drift"],
        energy_rows,
    )
    write_manifest(cfg, outdir, extra)
    if status == 0:
        last = energy_rows[-1]
        print(f"done: t={last[0]} E={last[1]} rel_drift={last[5]}")
        if "final_l2_error_u" in extra:
            print(f"final l2 error: {extra['final_l2_error_u']:.6e}")
    else:
        print(f"numerical breakdown: {extra['error']}", file=sys.stderr)
    return status


def cmd_run(cfg: RunConfig) -> int:
    return _run_with_observers(cfg, want_snapshots=True)


def cmd_energy(cfg: RunConfig) -> int:
    return _run_with_observers(cfg, want_snapshots=False)


def cmd_verify(cfg: RunConfig) -> int:
    from . import verification

    results = verification.run_all(seed=cfg.seed)
    ok = True
    for r in results:
        print(r.line())
        ok = ok and r.ok
    return 0 if ok else 3


def _worker_count(n_jobs: int) -> int:
    cap = os.environ.get("EGDG_THREADS")
    if cap is None:
        return 1
    return max(1, min(int(cap), n_jobs, os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--problem", choices=PROBLEM_NAMES)
    p.add_argument("--flux", choices=PRESET_NAMES + ("custom",))
    p.add_argument("--alpha", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--domain", type=_float_list)
    p.add_argument("--boundary")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--quad-n", dest="quad_n", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--outdir")
    p.add_argument("--shift", type=_parse_bool)
    p.add_argument("--seed", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--uniform-samples", dest="uniform_samples", type=int)
    p.add_argument("--no-snapshots", dest="snapshots", action="store_false", default=None)


def _float_list(text: str) -> list:
    return [float(p) for p in text.split(",")]


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egdg",
        description="Energy-based DG solver for semilinear wave equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("converge", cmd_converge),
        ("run", cmd_run),
        ("energy", cmd_energy),
        ("verify", cmd_verify),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "converge":
            p.add_argument("--Ns", type=_int_list, help="mesh sequence, e.g. 100,200,400")
            p.add_argument("--regression-count", dest="regression_count", type=int)
        p.set_defaults(fn=fn)
    return parser


def _int_list(text: str) -> list:
    return [int(p) for p in text.split(",")]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as err:  # argparse uses exit code 2 for usage errors
        return 0 if err.code == 0 else 1
    fn = args.pop("fn")
    args.pop("command")
    config_path = args.pop("config", None)
    try:
        cfg = load_config(config_path, overrides=args)
        cfg.validate(needs_timestep=fn is not cmd_verify)
        return fn(cfg)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except NumericalBreakdownError as err:
        print(f"numerical breakdown: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
