"""Experiment driver: adaptive time-stepping loop, references, sweeps, CSV.

A run advances a scenario from t = 0 to t_final.  Per step: refresh the
cached spectral estimate when it expires, take one scheme step, accept or
reject on the embedded error, update the step-size controller, record a
StepRecord.  phi non-convergence halves dt, an error excess re-tries with
the traditional proposal; ten consecutive rejections abort the run.  Runs
are deterministic for a fixed config and seed.
"""

import csv
import ctypes
import hashlib
import time as _time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


def _tune_allocator():
    """Stop glibc from trimming/re-faulting the heap on every rhs evaluation.

    The solver churns through ~100 few-hundred-kB temporaries per right-hand
    side; with the default 128 kB trim/mmap thresholds glibc returns them to
    the kernel each time and the next evaluation pays the page faults again
    (measured 5x slowdown at 64^2).  Harmless no-op on non-glibc platforms.
    """
    try:
        libc = ctypes.CDLL("libc.so.6")
        libc.mallopt(-1, 512 * 1024 * 1024)   # M_TRIM_THRESHOLD
        libc.mallopt(-3, 64 * 1024 * 1024)    # M_MMAP_THRESHOLD
    except (OSError, AttributeError):
        pass


_tune_allocator()

from xmhd.controllers import (ControllerConstants, ControllerMode, accept,
                              combine, cost_next, traditional_next)
from xmhd.integrators import Scheme, error_norm, step
from xmhd.linearize import FrozenLinearization, RhsOperator, estimate_alpha
from xmhd.mhd import BX, BY, BZ, EN, MX, MY, MZ, RHO, discrete_div_b, mhd_rhs, \
    conserved_totals, read_checkpoint, write_checkpoint
from xmhd.scenarios import initialize

#: CSV column order of every report row
CSV_COLUMNS = ("scenario", "case", "scheme", "method", "controller", "tol",
               "nx", "ny", "t_final", "steps_accepted", "steps_rejected",
               "rhs_evals", "phi_iters", "wall_seconds", "global_error",
               "max_divb", "mass_drift", "status", "timestamp")

MAX_CONSECUTIVE_REJECTIONS = 10


@dataclass
class RunConfig:
    scenario: object
    scheme: Scheme = Scheme.EXPRB43
    method: str = "leja"
    controller: ControllerMode = ControllerMode.COMBINED
    tol: float = 1e-4
    spectrum_interval: int = 50
    output_dir: Path | None = None
    checkpoint_every: float = 0.0       # simulation-time interval; 0 disables
    divb_every: float = 0.0             # sampling interval for divb series
    rng_seed: int = 0
    max_steps: int = 1_000_000
    wall_budget: float = 3600.0


@dataclass
class StepRecord:
    t: float
    dt: float
    error: float
    rhs_calls: int
    phi_iterations: int
    phi_applications: int
    accepted: bool
    cost: float


@dataclass
class RunReport:
    steps: list = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    phi_iterations: int = 0
    spectrum_rhs_evals: int = 0
    wall_seconds: float = 0.0
    t_reached: float = 0.0
    status: str = "ok"
    final_state: object = None
    checksum: str = ""
    max_divb: float = 0.0
    mass_drift: float = 0.0
    divb_series: list = field(default_factory=list)
    initial_totals: dict = field(default_factory=dict)
    final_totals: dict = field(default_factory=dict)


def _initial_dt(state, params):
    """Advective CFL surrogate: a tenth of the cell crossing time."""
    rho = state.data[RHO]
    vx = np.abs(state.data[MX] / rho)
    vy = np.abs(state.data[MY] / rho)
    b2 = state.data[BX] ** 2 + state.data[BY] ** 2 + state.data[BZ] ** 2
    kin = 0.5 * (state.data[MX] ** 2 + state.data[MY] ** 2
                 + state.data[MZ] ** 2) / rho
    pres = (params.gamma - 1.0) * (state.data[EN] - kin - 0.5 * b2 / params.mu0)
    cfast = np.sqrt(np.maximum(params.gamma * pres + b2 / params.mu0, 0.0) / rho)
    speed = max(float(np.max(vx + cfast)), float(np.max(vy + cfast)), 1e-12)
    return 0.1 * min(state.dx, state.dy) / speed


def _checksum(flat):
    return hashlib.sha256(np.ascontiguousarray(flat, dtype="<f8").tobytes()).hexdigest()


def run(config):
    """Advance the configured scenario to t_final and return a RunReport."""
    spec = config.scenario
    params = spec.params
    state0 = initialize(spec)
    geometry = state0
    rhs_op = RhsOperator(lambda flat: mhd_rhs(geometry.with_flat(flat), params))
    rng = np.random.default_rng(config.rng_seed)
    consts = ControllerConstants()
    mode = config.controller
    p_ctrl = config.scheme.embedded_order or config.scheme.order

    u = state0.flat().copy()
    report = RunReport()
    report.initial_totals = conserved_totals(state0)
    report.max_divb = float(np.max(np.abs(discrete_div_b(state0, params))))
    if config.divb_every > 0:
        report.divb_series.append((0.0, report.max_divb))
        next_divb = config.divb_every
    next_checkpoint = config.checkpoint_every if config.checkpoint_every > 0 else np.inf

    t = 0.0
    t_final = spec.t_final
    dt = min(_initial_dt(state0, params), t_final) if t_final > 0 else 0.0
    est = None
    dt_prev = cost_prev = None
    consecutive_rejects = 0
    started = _time.perf_counter()

    while t < t_final - 1e-14 * max(1.0, t_final):
        if report.accepted + report.rejected >= config.max_steps:
            report.status = "failed: step budget exceeded"
            break
        if _time.perf_counter() - started > config.wall_budget:
            report.status = "failed: wall-clock budget exceeded"
            break
        dt = min(dt, t_final - t)

        step_calls_start = rhs_op.calls
        lin = FrozenLinearization(rhs_op, u)
        before_spec = rhs_op.calls
        est = estimate_alpha(lin, est, interval=config.spectrum_interval, rng=rng)
        report.spectrum_rhs_evals += rhs_op.calls - before_spec

        # attempt loop: phi non-convergence halves dt, error excess uses the
        # traditional proposal; bookkeeping only advances on acceptance
        while True:
            calls_before = rhs_op.calls
            res = step(config.scheme, rhs_op, u, dt, method=config.method,
                       alpha=est, tol=config.tol, lin=lin)
            spent = rhs_op.calls - calls_before
            if res.converged and accept(res.error_estimate, config.tol):
                break
            report.rejected += 1
            consecutive_rejects += 1
            report.steps.append(StepRecord(t=t, dt=dt, error=res.error_estimate,
                                           rhs_calls=spent,
                                           phi_iterations=res.phi_iterations,
                                           phi_applications=res.phi_applications,
                                           accepted=False, cost=spent / dt))
            if consecutive_rejects >= MAX_CONSECUTIVE_REJECTIONS:
                report.status = "failed: too many consecutive rejections"
                break
            if not res.converged:
                dt = 0.5 * dt
            else:
                dt = traditional_next(dt, res.error_estimate, config.tol,
                                      p_ctrl, consts)
        if report.status != "ok":
            break

        # accepted; the cost proxy counts every rhs evaluation the step needed
        # (base evaluation, spectral refresh, rejected attempts included)
        consecutive_rejects = 0
        t = t + dt
        u = res.new_state
        err = res.error_estimate
        i_n = rhs_op.calls - step_calls_start
        cost = i_n / dt
        report.accepted += 1
        report.phi_iterations += res.phi_iterations
        report.steps.append(StepRecord(t=t, dt=dt, error=err, rhs_calls=i_n,
                                       phi_iterations=res.phi_iterations,
                                       phi_applications=res.phi_applications,
                                       accepted=True, cost=cost))

        state = geometry.with_flat(u)
        divb = float(np.max(np.abs(discrete_div_b(state, params))))
        report.max_divb = max(report.max_divb, divb)
        if config.divb_every > 0:
            while next_divb <= t + 1e-12:
                report.divb_series.append((next_divb, divb))
                next_divb += config.divb_every
        if config.output_dir is not None and t + 1e-12 >= next_checkpoint:
            config.output_dir.mkdir(parents=True, exist_ok=True)
            write_checkpoint(Path(config.output_dir) / f"state_t{t:.6f}.chk",
                             state, t)
            next_checkpoint += config.checkpoint_every

        # controller proposals for the next step
        dt_trad = traditional_next(dt, err, config.tol, p_ctrl, consts)
        if mode is ControllerMode.TRADITIONAL or dt_prev is None:
            dt_next = dt_trad
        else:
            dt_cost = cost_next(dt, dt_prev, cost, cost_prev, consts)
            dt_next = dt_cost if mode is ControllerMode.COST \
                else combine(dt_cost, dt_trad)
        dt_prev, cost_prev = dt, cost
        dt = dt_next

        if not np.all(np.isfinite(u)):
            report.status = "failed: non-finite state"
            break

    report.wall_seconds = _time.perf_counter() - started
    report.t_reached = t
    report.rhs_evals = rhs_op.calls
    final_state = geometry.with_flat(u)
    report.final_state = final_state
    report.checksum = _checksum(u)
    report.final_totals = conserved_totals(final_state)
    m0 = report.initial_totals["rho"]
    report.mass_drift = abs(report.final_totals["rho"] - m0) / abs(m0) if m0 else 0.0
    if report.status != "ok" and config.output_dir is not None:
        config.output_dir.mkdir(parents=True, exist_ok=True)
        write_checkpoint(Path(config.output_dir) / "abort.chk", final_state, t)
    return report


REFERENCE_TOL = 1e-11


def make_reference(config, path):
    """Run at tol 1e-11 with EXPRB43/Leja/combined and store the final state."""
    ref_cfg = replace(config, tol=REFERENCE_TOL, scheme=Scheme.EXPRB43,
                      method="leja", controller=ControllerMode.COMBINED)
    report = run(ref_cfg)
    if report.status != "ok":
        raise RuntimeError(f"reference run failed: {report.status}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_checkpoint(path, report.final_state, report.t_reached)
    return report


def _row(config, report, global_error):
    spec = config.scenario
    return {
        "scenario": spec.problem,
        "case": spec.case_id,
        "scheme": config.scheme.value,
        "method": config.method,
        "controller": config.controller.value,
        "tol": repr(config.tol),
        "nx": spec.nx,
        "ny": spec.ny,
        "t_final": repr(spec.t_final),
        "steps_accepted": report.accepted,
        "steps_rejected": report.rejected,
        "rhs_evals": report.rhs_evals,
        "phi_iters": report.phi_iterations,
        "wall_seconds": f"{report.wall_seconds:.3f}",
        "global_error": repr(float(global_error)),
        "max_divb": repr(float(report.max_divb)),
        "mass_drift": repr(float(report.mass_drift)),
        "status": report.status if report.status == "ok" else "failed",
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def work_precision(base, tols, schemes, methods, reference, out_csv):
    """Run the (tol, scheme, method) grid and append one CSV row per cell.

    A cell that fails (non-convergence, budget) is recorded with
    status=failed and a NaN error; the sweep itself never aborts.
    """
    reference = Path(reference)
    if not reference.exists():
        raise FileNotFoundError(f"missing reference checkpoint: {reference}")
    ref_state, _ = read_checkpoint(reference)
    ref_flat = ref_state.flat()

    rows = []
    for scheme in schemes:
        for method in methods:
            for tol in tols:
                cfg = replace(base, scheme=scheme, method=method, tol=tol)
                try:
                    report = run(cfg)
                    if report.status == "ok":
                        err = error_norm(report.final_state.flat(), ref_flat)
                    else:
                        err = float("nan")
                except Exception:
                    report = RunReport(status="failed: exception")
                    err = float("nan")
                rows.append(_row(cfg, report, err))
    rows.sort(key=lambda r: (r["scheme"], r["method"], float(r["tol"])))
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows


def divb_series(config, sample_interval, out_csv=None):
    """(t, max |div B|) samples at fixed simulation-time intervals."""
    cfg = replace(config, divb_every=sample_interval)
    report = run(cfg)
    series = report.divb_series
    if out_csv is not None:
        out_csv = Path(out_csv)
        out_csv.parent.mkdir(parents=True, exist_ok=True)
        with open(out_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "max_divb"])
            writer.writerows([(repr(t), repr(v)) for t, v in series])
    return series, report
