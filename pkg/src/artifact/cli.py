"""Scenario runner.

    artifact <subcommand> --config <path> [--out-dir <path>] [--seed <u64>]

Subcommands: evolve, bose-evolve, verify, picard, cutoff-sweep, norms.
Exit status: 0 success, 2 invalid configuration, 3 numerical failure,
4 a verification check exceeded its tolerance. Failures write error.json.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics_bose as db
from . import dynamics_fermi as df
from . import fock_oracle as fo
from . import geometry as geo
from . import lattice as lat
from . import quasifree as qf
from .errors import ArtifactError, InvalidConfiguration, NoContraction, NumericalFailure

SUBCOMMANDS = ("evolve", "bose-evolve", "verify", "picard", "cutoff-sweep", "norms")

FERMI_CSV_HEADER = "t,tr_gamma,energy,purity_defect,alpha_s2,spec_drift,unitarity_residual"
BOSE_CSV_HEADER = "t,total_N,energy_placeholder,purity_quantity,bog_residual"

DEFAULT_TOLERANCES = {
    "tr_gamma_drift_per_mode": 1e-8,
    "energy_drift_rel": 1e-6,
    "spectrum_drift": 1e-6,
    "purity_drift": 1e-6,
    "unitarity": 1e-6,
    "reconstruction": 1e-6,
    "car": 1e-13,
    "wick": 1e-10,
    "reduction_theorem": 1e-9,
    "geometry": 1e-11,
    "picard_agreement": 1e-6,
    "picard_contraction": 1.0,
    "cutoff_final": 1e-8,
    "cutoff_consistency": 1e-9,
    "bose_total_N": 1e-6,
    "bose_purity": 1e-6,
    "bose_structure": 1e-7,
    "bose_symplectic": 1e-11,
    "bose_tangent": 1e-9,
}

VERIFY_CHECKS = ("car", "wick", "reduction_theorem", "geometry")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


class ConfigError(InvalidConfiguration):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# configuration -------------------------------------------------------------

def _get(d: dict, key: str, path: str, default=..., kind=None):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "required field missing")
        return default
    val = d[key]
    name = f"{path}.{key}" if path else key
    if kind == "int":
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(name, f"expected an integer, got {val!r}")
    elif kind == "num":
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ConfigError(name, f"expected a finite number, got {val!r}")
        val = float(val)
    elif kind == "str":
        if not isinstance(val, str):
            raise ConfigError(name, f"expected a string, got {val!r}")
    return val


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    return cfg


def build_grid_cfg(cfg: dict) -> lat.Grid:
    g = _get(cfg, "grid", "")
    n_per_dim = _get(g, "n_per_dim", "grid", kind="int")
    dim = _get(g, "dim", "grid", 1, kind="int")
    box = _get(g, "box_length", "grid", 2 * math.pi, kind="num")
    if n_per_dim < 2:
        raise ConfigError("grid.n_per_dim", f"must be >= 2, got {n_per_dim}")
    if dim not in (1, 2, 3):
        raise ConfigError("grid.dim", f"must be 1, 2 or 3, got {dim}")
    if box <= 0:
        raise ConfigError("grid.box_length", f"must be positive, got {box}")
    return lat.build_grid(n_per_dim, dim, box)


def build_potential_cfg(cfg: dict, grid: lat.Grid) -> lat.PairPotential:
    p = _get(cfg, "potential", "", {"profile": "zero"})
    profile = _get(p, "profile", "potential", kind="str")
    if profile not in ("zero", "onsite", "gaussian", "yukawa", "coulomb_regularized"):
        raise ConfigError("potential.profile", f"unknown profile {profile!r}")
    amp = _get(p, "amplitude", "potential", 1.0, kind="num")
    rng_ = _get(p, "range", "potential", 1.0, kind="num")
    a = p.get("a")
    if a is not None:
        a = _get(p, "a", "potential", kind="num")
        if a <= 0:
            raise ConfigError("potential.a", "must be positive")
    if rng_ <= 0:
        raise ConfigError("potential.range", "must be positive")
    return lat.make_potential(grid, profile, amp, rng_, a)


def _run_block(cfg: dict) -> dict:
    run = _get(cfg, "run", "", {})
    out = {
        "t_final": _get(run, "t_final", "run", 1.0, kind="num"),
        "dt": _get(run, "dt", "run", 1e-3, kind="num"),
        "scheme": _get(run, "scheme", "run", "rk4", kind="str"),
        "snapshot_stride": _get(run, "snapshot_stride", "run", 0, kind="int"),
        "with_propagator": bool(_get(run, "with_propagator", "run", False)),
        "cutoff": run.get("cutoff"),
        "picard": _get(run, "picard", "run", None),
        "cutoff_sweep": _get(run, "cutoff_sweep", "run", None),
    }
    if out["t_final"] <= 0:
        raise ConfigError("run.t_final", "must be positive")
    if out["dt"] <= 0:
        raise ConfigError("run.dt", "must be positive")
    if not out["dt"] < out["t_final"]:
        raise ConfigError("run.dt", "must be smaller than run.t_final")
    if out["scheme"] not in ("rk4", "split"):
        raise ConfigError("run.scheme", f"unknown scheme {out['scheme']!r}")
    if out["snapshot_stride"] < 0:
        raise ConfigError("run.snapshot_stride", "must be nonnegative")
    if out["cutoff"] is not None:
        out["cutoff"] = _get(run, "cutoff", "run", kind="num")
        if out["cutoff"] < 0:
            raise ConfigError("run.cutoff", "must be nonnegative")
    return out


def tolerances(cfg: dict) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    user = _get(cfg, "tolerances", "", {})
    if not isinstance(user, dict):
        raise ConfigError("tolerances", "expected an object")
    for k in user:
        if k not in tol:
            raise ConfigError(f"tolerances.{k}", "unknown tolerance name")
        tol[k] = _get(user, k, "tolerances", kind="num")
    return tol


def initial_fermi(cfg: dict, grid: lat.Grid, seed_override, config_dir: Path) -> qf.BdGState:
    ini = _get(cfg, "initial", "")
    kind = _get(ini, "kind", "initial", kind="str")
    seed = seed_override if seed_override is not None else _get(ini, "seed", "initial", 0, kind="int")
    n = grid.n
    if kind == "slater":
        N = _get(ini, "N", "initial", kind="int")
        if not 0 <= N <= n:
            raise ConfigError("initial.N", f"must lie in [0, {n}], got {N}")
        if _get(ini, "plane_waves", "initial", False):
            # N lowest plane waves
            order = np.argsort(grid.k2, kind="stable")[:N]
            F = grid.dft
            vecs = F.conj().T[:, order]
            g = vecs @ vecs.conj().T
            return qf.BdGState(0.5 * (g + g.conj().T), np.zeros((n, n), dtype=complex))
        return qf.random_quasifree(n, seed, "slater", N=N)
    if kind == "paired":
        scale = _get(ini, "scale", "initial", 1.0, kind="num")
        return qf.random_quasifree(n, seed, "paired", scale=scale)
    if kind == "mixed":
        scale = _get(ini, "scale", "initial", 1.0, kind="num")
        return qf.random_mixed(n, seed, scale=scale)
    if kind == "vacuum":
        return qf.BdGState.vacuum(n)
    if kind == "file":
        path = Path(_get(ini, "path", "initial", kind="str"))
        if not path.is_absolute():
            path = config_dir / path
        try:
            snap = json.loads(path.read_text(encoding="utf-8"))
            st = qf.from_snapshot(snap)
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise ConfigError("initial.path", f"cannot load snapshot: {e}") from e
        if st.n != n:
            raise ConfigError("initial.path", f"snapshot has n = {st.n}, grid has {n}")
        try:
            st.check()
        except InvalidConfiguration as e:
            raise ConfigError("initial.path", str(e)) from e
        return st
    raise ConfigError("initial.kind", f"unknown kind {kind!r} for fermions")


def initial_bose(cfg: dict, grid: lat.Grid, seed_override) -> db.HFBState:
    ini = _get(cfg, "initial", "")
    kind = _get(ini, "kind", "initial", kind="str")
    seed = seed_override if seed_override is not None else _get(ini, "seed", "initial", 0, kind="int")
    if kind == "bogoliubov":
        scale = _get(ini, "scale", "initial", 0.5, kind="num")
        phi_scale = _get(ini, "phi_scale", "initial", 1.0, kind="num")
        return db.random_bogoliubov(grid.n, seed, scale, phi_scale)
    if kind == "coherent":
        phi_scale = _get(ini, "phi_scale", "initial", 1.0, kind="num")
        st = db.random_bogoliubov(grid.n, seed, 0.0, phi_scale)
        return st
    if kind == "vacuum":
        return db.HFBState.vacuum(grid.n)
    raise ConfigError("initial.kind", f"unknown kind {kind!r} for bosons")


# output helpers ------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _fmt(x) -> str:
    # 17 significant digits round-trip every double exactly
    return "" if x is None else format(float(x), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n", encoding="utf-8")


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class CheckList:
    def __init__(self):
        self.items = []

    def add(self, name: str, residual: float, tolerance: float, lower_is_pass: bool = True):
        residual = float(residual)
        ok = residual <= tolerance if lower_is_pass else residual >= tolerance
        self.items.append({"name": name, "residual": _num(residual),
                           "tolerance": float(tolerance), "pass": bool(ok)})

    def failed(self):
        return [c for c in self.items if not c["pass"]]


# subcommands ---------------------------------------------------------------

def _fermi_csv_rows(traj: df.Trajectory):
    for i, t in enumerate(traj.times):
        yield (t, traj.tr_gamma[i], traj.energy[i], traj.purity_defect[i], traj.alpha_s2[i],
               traj.spec_drift[i], traj.unitarity_residual[i])


def cmd_evolve(cfg, grid, V, out: Path, seed, config_dir, tol, checks: CheckList) -> dict:
    run = _run_block(cfg)
    state0 = initial_fermi(cfg, grid, seed, config_dir)
    h = lat.build_kinetic(grid)
    stride = run["snapshot_stride"] or 10**12
    if run["cutoff"] is not None:
        traj = df.cutoff_evolve(state0, h, V, run["cutoff"], run["t_final"], run["dt"],
                                run["with_propagator"], stride)
    else:
        traj = df.integrate(state0, h, V, run["t_final"], run["dt"], run["scheme"],
                            run["with_propagator"], stride)
    write_csv(out / "trajectory.csv", FERMI_CSV_HEADER, _fermi_csv_rows(traj))
    if run["snapshot_stride"]:
        snapdir = out / "snapshots"
        snapdir.mkdir(exist_ok=True)
        for k, (t, st) in enumerate(zip(traj.state_times, traj.states)):
            write_json(snapdir / f"snapshot_{k:06d}.json", qf.to_snapshot(st, grid, t))
    d = traj.drifts()
    E0 = traj.energy[0]
    checks.add("tr_gamma_drift", d["tr_gamma"], tol["tr_gamma_drift_per_mode"] * grid.n)
    checks.add("energy_drift", d["energy"], tol["energy_drift_rel"] * (1 + abs(E0)))
    checks.add("spectrum_drift", d["spectrum"], tol["spectrum_drift"])
    checks.add("purity_drift", d["purity_defect"], tol["purity_drift"])
    if "unitarity" in d:
        checks.add("propagator_unitarity", d["unitarity"], tol["unitarity"])
        checks.add("propagator_reconstruction", d["reconstruction"], tol["reconstruction"])
    f = traj.final
    return {
        "final": {"t": traj.times[-1], "tr_gamma": traj.tr_gamma[-1], "energy": traj.energy[-1],
                  "purity_defect": traj.purity_defect[-1], "alpha_s2": traj.alpha_s2[-1]},
        "drifts": {k: _num(v) for k, v in d.items()},
        "steps": len(traj.times) - 1,
        "final_snapshot": qf.to_snapshot(f, grid, traj.times[-1]),
    }


def cmd_bose(cfg, grid, V, out: Path, seed, config_dir, tol, checks: CheckList) -> dict:
    stats = _get(cfg, "statistics", "", "bose", kind="str")
    if stats != "bose":
        raise ConfigError("statistics", "bose-evolve requires statistics = 'bose'")
    run = _run_block(cfg)
    state0 = initial_bose(cfg, grid, seed)
    h = lat.build_kinetic(grid)
    stride = run["snapshot_stride"] or 10**12
    traj = db.integrate_hfb(state0, h, V, run["t_final"], run["dt"], stride)
    rows = ((t, r.total_N, None, r.purity_quantity, r.bogoliubov_residual)
            for t, r in zip(traj.times, traj.reports))
    write_csv(out / "trajectory.csv", BOSE_CSV_HEADER, rows)
    if run["snapshot_stride"]:
        snapdir = out / "snapshots"
        snapdir.mkdir(exist_ok=True)
        stored = [t for k, t in enumerate(traj.times)
                  if k % stride == 0 or k == len(traj.times) - 1]
        for k, (t, st) in enumerate(zip(stored, traj.states)):
            write_json(snapdir / f"snapshot_{k:06d}.json", bose_snapshot(st, grid, t))
    d = traj.drifts()
    checks.add("total_N_drift", d["total_N"], tol["bose_total_N"])
    checks.add("purity_quantity_drift", d["purity_quantity"], tol["bose_purity"])
    declared_bog = bool(_get(cfg["initial"], "kind", "initial") in ("bogoliubov", "coherent", "vacuum"))
    if declared_bog:
        checks.add("bogoliubov_residual", d["bogoliubov_residual"], tol["bose_structure"])
    # dual-formula and tangent checks on the stored states
    rng = np.random.default_rng(0 if seed is None else seed)
    sym_gap = 0.0
    tan_gap = 0.0
    for st in traj.states:
        dp, dg, da = db.hfb_rhs(st, h, V)
        D = np.block([[dg, da], [da.conj(), dg.conj()]])
        sym_gap = max(sym_gap, float(np.abs(D - db.hfb_rhs_symplectic(st, h, V)).max()))
        if declared_bog:
            Gt = db.assemble_bosonic(st.gamma_t, st.alpha_t)
            for _ in range(20):
                A = geo.bosonic_normal_component(Gt, geo.random_bosonic_normal_input(grid.n, rng), tol=1e-6)
                A = A / max(np.linalg.norm(A), 1e-300)  # unit HS norm
                tan_gap = max(tan_gap, abs(np.vdot(A, D)))
    checks.add("symplectic_dual_formula", sym_gap, tol["bose_symplectic"])
    if declared_bog:
        checks.add("tangent_orthogonality", tan_gap, tol["bose_tangent"])
    r = traj.reports[-1]
    return {"final": {"t": traj.times[-1], "total_N": r.total_N,
                      "purity_quantity": r.purity_quantity,
                      "bog_residual": r.bogoliubov_residual},
            "drifts": {k: _num(v) for k, v in d.items()},
            "steps": len(traj.times) - 1}


def bose_snapshot(state: db.HFBState, grid: lat.Grid, t: float) -> dict:
    return {"n": grid.n, "dim": grid.dim, "box_length": grid.box_length,
            "n_per_dim": grid.n_per_dim, "t": float(t),
            "phi": [[float(z.real), float(z.imag)] for z in state.phi],
            "gamma_t": [[float(z.real), float(z.imag)] for z in state.gamma_t.ravel()],
            "alpha_t": [[float(z.real), float(z.imag)] for z in state.alpha_t.ravel()]}


def cmd_verify(cfg, grid, V, out: Path, seed, config_dir, tol, checks: CheckList) -> dict:
    if grid.n > fo.MAX_MODES:
        raise ConfigError("grid", f"oracle checks need at most {fo.MAX_MODES} modes, got {grid.n}")
    ver = _get(cfg, "verify", "", {"checks": list(VERIFY_CHECKS)})
    names = ver.get("checks", list(VERIFY_CHECKS)) if isinstance(ver, dict) else ver
    if not isinstance(names, list) or not names:
        raise ConfigError("verify.checks", "expected a nonempty list of check names")
    for nm in names:
        if nm not in VERIFY_CHECKS:
            raise ConfigError("verify.checks", f"unknown check {nm!r}")
    state = initial_fermi(cfg, grid, seed, config_dir)
    G = qf.assemble(state)
    if abs(qf.constraint_report(G).purity_defect) > qf.PURITY_TOL:
        raise ConfigError("initial", "verify needs a pure quasifree initial state")
    h = lat.build_kinetic(grid)
    n = grid.n
    ops = fo.build_car(n)
    report = {}
    if "car" in names:
        gap = car_residual(ops)
        checks.add("car", gap, tol["car"])
        report["car"] = gap
    if "wick" in names:
        psi = fo.quasifree_vector(G, ops)
        gap = fo.wick_sweep(psi, ops)
        checks.add("wick", gap, tol["wick"])
        report["wick_gap"] = gap
    if "reduction_theorem" in names:
        rr = fo.verify_reduction_theorem(G, h, V, ops)
        checks.add("reduction_mb_vs_proj", rr.mb_vs_proj, tol["reduction_theorem"])
        checks.add("reduction_mb_vs_bdg", rr.mb_vs_bdg, tol["reduction_theorem"])
        checks.add("reduction_proj_vs_bdg", rr.proj_vs_bdg, tol["reduction_theorem"])
        report["reduction_theorem"] = {"mb_vs_proj": rr.mb_vs_proj, "mb_vs_bdg": rr.mb_vs_bdg,
                                       "proj_vs_bdg": rr.proj_vs_bdg}
    if "geometry" in names:
        rng = np.random.default_rng(0 if seed is None else seed)
        X = rng.standard_normal((2 * n, 2 * n)) + 1j * rng.standard_normal((2 * n, 2 * n))
        Xi = 0.5 * (X + X.conj().T)
        P1 = geo.proj_quasifree(G, Xi)
        P2 = geo.proj_quasifree(G, P1)
        idem = float(np.linalg.norm(P2 - P1))
        rng_res = float(max(np.linalg.norm(G @ P1 @ G),
                            np.linalg.norm((np.eye(2 * n) - G) @ P1 @ (np.eye(2 * n) - G)),
                            np.linalg.norm(P1 + qf.j_conj(P1))))
        orth = abs(np.vdot(Xi - P1, P1))
        checks.add("projection_idempotence", idem, tol["geometry"])
        checks.add("projection_range", rng_res, tol["geometry"])
        checks.add("projection_orthogonality", orth, tol["geometry"])
        report["geometry"] = {"idempotence": idem, "range": rng_res, "orthogonality": float(orth)}
    return {"report": report}


def car_residual(ops: fo.FockOperatorSet) -> float:
    a, c = ops.annihilators, ops.creators
    eye = np.eye(ops.dim)
    worst = 0.0
    for i in range(ops.n_modes):
        for j in range(ops.n_modes):
            worst = max(worst,
                        abs((a[i] @ a[j] + a[j] @ a[i]).toarray()).max(initial=0.0),
                        abs((c[i] @ c[j] + c[j] @ c[i]).toarray()).max(initial=0.0),
                        abs((a[i] @ c[j] + c[j] @ a[i]).toarray() - (i == j) * eye).max())
    return float(worst)


def cmd_picard(cfg, grid, V, out: Path, seed, config_dir, tol, checks: CheckList) -> dict:
    run = _get(cfg, "run", "", {})
    pc = _get(run, "picard", "run", {})
    interval = _get(pc, "interval", "run.picard", kind="num")
    steps = _get(pc, "quadrature_steps", "run.picard", 64, kind="int")
    ptol = _get(pc, "tol", "run.picard", 1e-12, kind="num")
    max_iter = _get(pc, "max_iter", "run.picard", 100, kind="int")
    two_body = _get(pc, "two_body", "run.picard", "strang", kind="str")
    ref_dt = _get(pc, "reference_dt", "run.picard", 1e-4, kind="num")
    if interval <= 0:
        raise ConfigError("run.picard.interval", "must be positive")
    if steps < 1:
        raise ConfigError("run.picard.quadrature_steps", "must be >= 1")
    if two_body not in ("strang", "exact"):
        raise ConfigError("run.picard.two_body", f"unknown method {two_body!r}")
    if not 0 < ref_dt < interval:
        raise ConfigError("run.picard.reference_dt", "must lie in (0, interval)")
    state0 = initial_fermi(cfg, grid, seed, config_dir)
    h = lat.build_kinetic(grid)
    traj, rep = df.picard_solve(state0, h, V, interval, steps, ptol, max_iter, two_body)
    ref = df.integrate(state0, h, V, interval, ref_dt, "rk4").final
    f = traj.final
    agree = lat.pair_norm(f.gamma - ref.gamma, f.alpha - ref.alpha)
    checks.add("picard_converged", 0.0 if rep.converged else 1.0, 0.0)
    checks.add("picard_contraction", rep.contraction, tol["picard_contraction"])
    checks.add("picard_vs_rk4", agree, tol["picard_agreement"])
    return {"picard": {"interval": rep.interval, "iterations": rep.iterations,
                       "differences": [_num(x) for x in rep.differences],
                       "contraction": rep.contraction, "converged": rep.converged,
                       "two_body": rep.two_body, "agreement_rk4": agree}}


def cmd_cutoff_sweep(cfg, grid, V, out: Path, seed, config_dir, tol, checks: CheckList) -> dict:
    run = _get(cfg, "run", "", {})
    sw = _get(run, "cutoff_sweep", "run", {})
    t_final = _get(sw, "t_final", "run.cutoff_sweep", 0.5, kind="num")
    dt = _get(sw, "dt", "run.cutoff_sweep", 1e-3, kind="num")
    if t_final <= 0 or dt <= 0 or not dt < t_final:
        raise ConfigError("run.cutoff_sweep", "need 0 < dt < t_final")
    state0 = initial_fermi(cfg, grid, seed, config_dir)
    h = lat.build_kinetic(grid)
    ref = df.integrate(state0, h, V, t_final, dt).final
    th = df.cutoff_thresholds(h)
    lams = list(0.5 * (th[:-1] + th[1:])) + [float(th[-1]) + 1.0]
    rows = []
    for L in lams:
        traj = df.cutoff_evolve(state0, h, V, L, t_final, dt, store_every=max(1, int(round(t_final / dt)) // 10))
        P = getattr(traj, "projector", np.eye(grid.n))
        cons = max(float(np.abs(P @ s.gamma @ P - s.gamma).max() +
                         np.abs(P @ s.alpha @ P.conj() - s.alpha).max()) for s in traj.states)
        err = lat.pair_norm(traj.final.gamma - ref.gamma, traj.final.alpha - ref.alpha)
        rows.append((float(L), int(round(np.trace(P).real)), err, cons))
    write_csv(out / "cutoff_table.csv", "cutoff,retained_modes,error,consistency", rows)
    errs = [r[2] for r in rows]
    increase = max([0.0] + [errs[i + 1] - errs[i] for i in range(len(errs) - 1)])
    checks.add("cutoff_monotone", increase, 0.0)
    checks.add("cutoff_full_error", errs[-1], tol["cutoff_final"])
    checks.add("cutoff_consistency", max(r[3] for r in rows), tol["cutoff_consistency"])
    return {"cutoff_table": [{"cutoff": r[0], "retained_modes": r[1], "error": r[2],
                              "consistency": r[3]} for r in rows]}


def cmd_norms(cfg, grid, V, out: Path, seed, config_dir, tol, checks: CheckList) -> dict:
    state = initial_fermi(cfg, grid, seed, config_dir)
    M = lat.build_multiplier(grid)
    rep = lat.norms(state.gamma, state.alpha, M, grid)
    return {"norms": {k: getattr(rep, k) for k in ("s1", "s2", "h1_kernel", "y1", "y2", "z1")},
            "alpha_h1": lat.h1_kernel(state.alpha, grid),
            "c_v": lat.compute_cv(V, M)}


DISPATCH = {
    "evolve": cmd_evolve,
    "bose-evolve": cmd_bose,
    "verify": cmd_verify,
    "picard": cmd_picard,
    "cutoff-sweep": cmd_cutoff_sweep,
    "norms": cmd_norms,
}


# entry point ---------------------------------------------------------------

def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    p.add_argument("subcommand")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=_u64, default=None)
    return p


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def run(argv=None) -> int:
    parser = _parser()
    parser.__class__ = _Parser
    out = None
    try:
        try:
            args = parser.parse_args(argv)
        except _ArgError as e:
            print(f"artifact: {e}", file=sys.stderr)
            return EXIT_INVALID
        cfg_path = Path(args.config)
        out = Path(args.out_dir) if args.out_dir else cfg_path.parent / "out"
        if args.subcommand not in DISPATCH:
            raise ConfigError("subcommand", f"unknown subcommand {args.subcommand!r}")
        cfg = load_config(cfg_path)
        if not args.out_dir:
            out_cfg = _get(cfg, "output", "", "out")
            if isinstance(out_cfg, dict):
                out_cfg = _get(out_cfg, "directory", "output", "out", kind="str")
            out = cfg_path.parent / out_cfg
        out.mkdir(parents=True, exist_ok=True)
        grid = build_grid_cfg(cfg)
        V = build_potential_cfg(cfg, grid)
        stats = _get(cfg, "statistics", "", "fermi", kind="str")
        if stats not in ("fermi", "bose"):
            raise ConfigError("statistics", f"must be 'fermi' or 'bose', got {stats!r}")
        if args.subcommand != "bose-evolve" and stats != "fermi":
            raise ConfigError("statistics", f"{args.subcommand} requires statistics = 'fermi'")
        tol = tolerances(cfg)
        checks = CheckList()
        body = DISPATCH[args.subcommand](cfg, grid, V, out, args.seed, cfg_path.parent, tol, checks)
        summary = {"subcommand": args.subcommand,
                   "grid": {"n_per_dim": grid.n_per_dim, "dim": grid.dim,
                            "box_length": grid.box_length, "n": grid.n},
                   "potential": V.name,
                   "seed": args.seed,
                   "checks": checks.items}
        summary.update(body)
        write_json(out / "summary.json", summary)
        failed = checks.failed()
        if failed:
            first = failed[0]
            _write_error(out, EXIT_CHECK, "CheckFailed",
                         f"{len(failed)} check(s) exceeded tolerance",
                         check=first["name"], residual=first["residual"],
                         tolerance=first["tolerance"], failed=[c["name"] for c in failed])
            return EXIT_CHECK
        return EXIT_OK
    except InvalidConfiguration as e:
        _write_error(out, EXIT_INVALID, type(e).__name__, str(e), field=getattr(e, "field", None))
        return EXIT_INVALID
    except NoContraction as e:
        diffs = [_num(x) for x in getattr(e, "differences", [])]
        _write_error(out, EXIT_NUMERICAL, type(e).__name__, str(e), check="picard_contraction",
                     residual=diffs[-1] if diffs else None, differences=diffs)
        return EXIT_NUMERICAL
    except NumericalFailure as e:
        _write_error(out, EXIT_NUMERICAL, type(e).__name__, str(e))
        return EXIT_NUMERICAL
    except ArtifactError as e:
        _write_error(out, EXIT_NUMERICAL, type(e).__name__, str(e))
        return EXIT_NUMERICAL


def _write_error(out, code, etype, message, **extra):
    print(f"artifact: {etype}: {message}", file=sys.stderr)
    payload = {"exit_code": code, "error": etype, "message": message}
    payload.update({k: v for k, v in extra.items()})
    if out is None:
        out = Path(".")
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", payload)
    except OSError:
        pass


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
