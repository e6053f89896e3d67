"""Simulation driver: config to objects, step loop, recording, outputs.

``run_simulation`` advances one configured simulation to its end time,
emitting snapshots and a per-step series CSV, and returns a RunResult with
status 0 (ok), 3 (blow-up), or 4 (solver failure).  The per-run output
directory is keyed by the config hash so studies can resume: a finished
run leaves a ``result.json`` and its final snapshot, and is reused when
the same config is requested again.
"""

import csv
import json
import os
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import fluid, ibkernel, mesh, metrics, rbfgeom, snapshots, stepper
from .errors import BlowUpError, ConfigError, SolverError

_OPS_CACHE = {}


def shared_operators(n_d, n_s, epsilon):
    key = (n_d, n_s, float(epsilon))
    ops = _OPS_CACHE.get(key)
    if ops is None:
        ops = rbfgeom.build_operators(rbfgeom.RbfConfig(n_d, n_s, epsilon))
        _OPS_CACHE[key] = ops
    return ops


@dataclass
class RunResult:
    status: int
    steps: int
    time: float
    message: str = ""
    out_dir: Path = None
    counters: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    profile: object = None
    sim: object = None
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == 0


def build_sim(cfg):
    """Instantiate grid, solver, platelets, and initial fluid state."""
    grid = mesh.GridSpec(cfg.grid.nx, cfg.grid.ny, cfg.grid.Lx, cfg.grid.Ly)
    fx = 0.0
    if cfg.fluid.forcing == "poiseuille":
        fx = 8.0 * cfg.fluid.mu * cfg.fluid.u_max / cfg.grid.Ly**2
    params = mesh.FluidParams(rho=cfg.fluid.rho, mu=cfg.fluid.mu, body_force=(fx, 0.0))
    solver = fluid.PoissonSolver(method=cfg.solver.method, rel_tol=cfg.solver.rel_tol)

    state = mesh.FluidState.zeros(grid)
    if cfg.run.initial_flow == "poiseuille":
        state.u = fluid.poiseuille_u(grid, cfg.fluid.u_max)

    plats = []
    pl = cfg.platelets
    if pl.count:
        if cfg.run.method == "rbf-ib":
            ops = shared_operators(pl.n_d, pl.n_s, cfg.epsilon())
            for i, center in enumerate(pl.centers):
                plats.append(
                    stepper.make_rbf_platelet(
                        i, center, pl.a, pl.b, ops, pl.k_t, pl.k_b,
                        target=pl.target, circle_r=pl.circle_r,
                    )
                )
        else:
            for i, center in enumerate(pl.centers):
                plats.append(
                    stepper.make_pl_platelet(
                        i, center, pl.a, pl.b, pl.n_s, pl.k_t, pl.k_b,
                        target=pl.target, circle_r=pl.circle_r,
                    )
                )

    sim = stepper.SimState(fluid=state, platelets=plats, seed=cfg.run.seed)
    ctx = stepper.StepContext(
        grid=grid, params=params, solver=solver, forces_enabled=cfg.run.forces_enabled
    )
    policy = stepper.LinkPolicy(
        enabled=cfg.links.enabled,
        bind_radius=cfg.links.bind_radius,
        max_links_per_platelet=cfg.links.max_links,
        wall_band=tuple(cfg.links.wall_band),
        break_strain=cfg.links.break_strain,
        k_c=cfg.links.k_c,
    )
    return sim, ctx, policy


def _record_energy(sim, ctx, prev_state, dt, cfg):
    """Discrete per-step energy balance at the end of a step."""
    f_all = []
    v_all = []
    dq = 2.0 * np.pi / max(cfg.platelets.n_s, 1)
    samples = {}
    if cfg.run.method == "rbf-ib":
        for p in sim.platelets:
            samples[p.pid] = rbfgeom.evaluate(p.ops, p.x_data)
        from . import forces as forcesmod

        for p in sim.platelets:
            f = forcesmod.rbf_forces(p.x_data, p.ops, p.params)
            vel_d = ibkernel.interpolate(sim.fluid.u, sim.fluid.v, ctx.grid, p.x_data)
            vel_s = rbfgeom.evaluate(p.ops, vel_d)
            f_all.append(f)
            v_all.append(vel_s)
    else:
        from . import forces as forcesmod

        for p in sim.platelets:
            samples[p.pid] = p.x
        for p in sim.platelets:
            f = forcesmod.pl_forces(p.x, p.params)
            vel = ibkernel.interpolate(sim.fluid.u, sim.fluid.v, ctx.grid, p.x)
            f_all.append(f)
            v_all.append(vel)
    if sim.links:
        n_sample = {p.pid: p.n_sample for p in sim.platelets}
        coh = stepper._cohesion_forces(sim.links, samples, n_sample)
        for i, p in enumerate(sim.platelets):
            if p.pid in coh:
                f_all[i] = f_all[i] + coh[p.pid]
    if not f_all:
        return metrics.energy_change(prev_state, sim.fluid, None, None, dt, dq, cfg.fluid.rho, ctx.grid)
    return metrics.energy_change(
        prev_state,
        sim.fluid,
        np.concatenate(f_all),
        np.concatenate(v_all),
        dt,
        dq,
        cfg.fluid.rho,
        ctx.grid,
    )


def run_simulation(cfg, out_dir=None, reuse=True, capture_sim=False, progress=None):
    """Advance a configured run to completion; see module docstring."""
    problems = cfgmod.validate(cfg)
    if problems:
        raise ConfigError(problems)
    warnings = cfgmod.marker_spacing_warnings(cfg)

    if out_dir is not None:
        out_dir = Path(out_dir) / cfgmod.config_hash(cfg)
        done_marker = out_dir / "result.json"
        if reuse and done_marker.exists() and not capture_sim:
            payload = json.loads(done_marker.read_text())
            return RunResult(
                status=payload["status"],
                steps=payload["steps"],
                time=payload["time"],
                message=payload.get("message", ""),
                out_dir=out_dir,
                counters=payload.get("counters", {}),
                series=_load_series(out_dir / "series.csv"),
                profile=metrics.ProfileSummary(**payload["profile"]) if payload.get("profile") else None,
                warnings=warnings,
            )
        out_dir.mkdir(parents=True, exist_ok=True)
        cfgmod.save(cfg, out_dir / "config.ini")

    sim, ctx, policy = build_sim(cfg)
    dt = cfg.run.dt
    n_steps = int(round(cfg.run.t_end / dt))
    step_fn = stepper.step_fn(cfg.run.method)
    u_limit = 100.0 * cfg.fluid.u_max

    series = {"step": [], "time": [], "max_speed": [], "energy": [], "area": []}
    status, message = 0, ""
    wall_start = _time.perf_counter()
    try:
        for k in range(n_steps):
            prev_state = sim.fluid if cfg.run.energy_every else None
            step_fn(sim, dt, ctx)
            if policy.enabled:
                stepper.update_links(sim, policy)
            if cfg.run.exit_x is not None:
                stepper.remove_exited(sim, cfg.run.exit_x)
            fluid.check_blowup(sim.fluid, u_limit, step=sim.step, time=sim.time)

            want_energy = cfg.run.energy_every and sim.step % cfg.run.energy_every == 0
            want_area = cfg.run.area_every and sim.step % cfg.run.area_every == 0
            if want_energy or want_area:
                series["step"].append(sim.step)
                series["time"].append(sim.time)
                series["max_speed"].append(sim.fluid.max_speed())
                series["energy"].append(
                    _record_energy(sim, ctx, prev_state, dt, cfg) if want_energy else ""
                )
                series["area"].append(
                    sum(metrics.enclosed_area(p.markers()) for p in sim.platelets)
                    if want_area
                    else ""
                )
            if (
                out_dir is not None
                and cfg.run.snapshot_every
                and sim.step % cfg.run.snapshot_every == 0
            ):
                snapshots.write_snapshot(
                    out_dir / f"snap_{sim.step:08d}.snap", sim, ctx.grid, cfg.run.method
                )
            if progress and sim.step % 1000 == 0:
                progress(sim.step, n_steps)
    except BlowUpError as exc:
        status, message = 3, f"blow-up at step {exc.step} (t={exc.time:.6g}): {exc}"
    except SolverError as exc:
        status, message = 4, f"solver failure at step {sim.step + 1}: {exc}"

    wall = _time.perf_counter() - wall_start
    solver = ctx.solver
    profile = metrics.profile_counters(
        sim.counters, max(sim.step, 1), wall, solver.pressure_iterations, solver.pressure_solves
    ) if sim.step else metrics.ProfileSummary(0.0, 0.0, 0.0)

    result = RunResult(
        status=status,
        steps=sim.step,
        time=sim.time,
        message=message,
        out_dir=out_dir,
        counters=dict(sim.counters),
        series=series,
        profile=profile,
        sim=sim if capture_sim else None,
        warnings=warnings,
    )

    if out_dir is not None:
        snapshots.write_snapshot(out_dir / "final.snap", sim, ctx.grid, cfg.run.method)
        _write_series(out_dir / "series.csv", series)
        (out_dir / "result.json").write_text(
            json.dumps(
                {
                    "status": status,
                    "steps": sim.step,
                    "time": sim.time,
                    "message": message,
                    "counters": {k: v for k, v in sim.counters.items()},
                    "profile": {
                        "fluid_fraction": profile.fluid_fraction,
                        "mean_pressure_iterations": profile.mean_pressure_iterations,
                        "wall_per_step": profile.wall_per_step,
                    },
                    "warnings": warnings,
                },
                indent=2,
                sort_keys=True,
            )
        )
    return result


def _write_series(path, series):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        keys = list(series)
        writer.writerow(keys)
        for row in zip(*(series[k] for k in keys)):
            writer.writerow(row)


def _load_series(path):
    if not Path(path).exists():
        return {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        return {}
    keys = rows[0]
    out = {k: [] for k in keys}
    for row in rows[1:]:
        for k, val in zip(keys, row):
            out[k].append(float(val) if val not in ("", None) else "")
    return out


def output_root(explicit=None):
    """Output directory root: explicit flag, IBFLOW_OUT, or ./out."""
    if explicit:
        return Path(explicit)
    return Path(os.environ.get("IBFLOW_OUT", "out"))
