"""Experiment presets and study drivers.

Each study encodes one published measurement design at desk scale and
writes one CSV of results.  Member simulations are cached by config hash
under the output root, so an interrupted study resumes where it stopped
and shared runs (notably the fine-grid gold runs) are computed once.

Refinement ladders follow the published setups: fluid grids 32/64/128 with
a 256 gold grid, sample counts 50/100/200 with a 400-sample gold run, time
steps halving per rung, and membrane stiffnesses scaled like 1/h so the
platelets stay comparably rigid as the grid refines.
"""

import csv
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import metrics, rbfgeom, runner, snapshots

STUDIES = (
    "fluid-convergence",
    "fsi-convergence",
    "area",
    "energy",
    "stability",
    "timing",
)

# FSI stiffness at the 32x32 reference grid, scaled by nx/32 under refinement.
FSI_KT32 = 60000.0
FSI_KB_RATIO = 0.01

# Channel platelet stiffness at the h=1/64 reference (timing/aggregation runs).
CHANNEL_KT64 = 30000.0


def fsi_stiffness(nx):
    k_t = FSI_KT32 * (nx / 32.0)
    return k_t, FSI_KB_RATIO * k_t


def fsi_config(method, nx, n_s, dt, n_d=50, t_end=2.0, solver="fft", **run_extra):
    """Standard fluid-structure test: ellipse relaxing to a circle at rest."""
    k_t, k_b = fsi_stiffness(nx)
    run = dict(method=method, dt=dt, t_end=t_end, snapshot_every=0)
    run.update(run_extra)
    return cfgmod.RunConfig().with_(
        run=run,
        grid=dict(nx=nx, ny=nx, Lx=1.0, Ly=1.0),
        fluid=dict(rho=1.0, mu=8.0, u_max=5.0, forcing="none"),
        solver=dict(method=solver),
        platelets=dict(
            count=1,
            centers=((0.5, 0.5),),
            a=0.2,
            b=0.05,
            n_s=n_s,
            n_d=min(n_d, n_s),
            k_t=k_t,
            k_b=k_b,
            target="circle",
            circle_r=0.1,
        ),
    )


FSI_LADDER = ((32, 50, 2e-4), (64, 100, 1e-4), (128, 200, 5e-5))
FSI_GOLD = (256, 400, 2.5e-5)


def fluid_config(nx, dt, t_end=1.0, solver="fft"):
    """Fluid-only channel start-up: parabolic initial profile plus its forcing."""
    return cfgmod.RunConfig().with_(
        run=dict(method="pl-ib", dt=dt, t_end=t_end, snapshot_every=0,
                 initial_flow="poiseuille"),
        grid=dict(nx=nx, ny=nx, Lx=1.0, Ly=1.0),
        fluid=dict(rho=1.0, mu=8.0, u_max=5.0, forcing="poiseuille"),
        solver=dict(method=solver),
        platelets=dict(count=0, centers=()),
    )


FLUID_LADDER = ((32, 5e-3), (64, 2.5e-3), (128, 1.25e-3))
FLUID_GOLD = (256, 6.25e-4)


def lattice_centers(n_p):
    """Deterministic non-overlapping ellipse centers near the channel inlet."""
    cols = [0.15 + 0.22 * k for k in range(6)]
    rows = [0.08 + 0.084 * m for m in range(10)]
    centers = []
    for m, y in enumerate(rows):
        for x in cols:
            centers.append((x, y))
    return tuple(centers[:n_p])


def channel_config(method, n_p, nx=128, ny=64, dt=1e-4, t_end=1.0, n_s=100, n_d=50,
                   solver="fft", links=False, **run_extra):
    """Platelet channel scenario: Poiseuille forcing, exit removal at x=1.9."""
    k_t = CHANNEL_KT64 * (nx / (2.0 * 64))  # reference h = 1/64 on [0,2]
    run = dict(method=method, dt=dt, t_end=t_end, snapshot_every=0, exit_x=1.9,
               initial_flow="poiseuille")
    run.update(run_extra)
    cfg = cfgmod.RunConfig().with_(
        run=run,
        grid=dict(nx=nx, ny=ny, Lx=2.0, Ly=1.0),
        fluid=dict(rho=1.0, mu=8.0, u_max=5.0, forcing="poiseuille"),
        solver=dict(method=solver),
        platelets=dict(
            count=n_p,
            centers=lattice_centers(n_p),
            a=0.1,
            b=0.025,
            n_s=n_s,
            n_d=min(n_d, n_s),
            k_t=k_t,
            k_b=FSI_KB_RATIO * k_t,
            target="initial",
        ),
    )
    if links:
        cfg = cfg.with_(links=dict(enabled=True))
    return cfg


def platelet_stability_config(method, nx, dt, t_end=0.5):
    """Single platelet holding its elliptical shape in sheared channel flow."""
    k_t, k_b = fsi_stiffness(nx)
    return cfgmod.RunConfig().with_(
        run=dict(method=method, dt=dt, t_end=t_end, snapshot_every=0,
                 initial_flow="poiseuille"),
        grid=dict(nx=nx, ny=nx, Lx=1.0, Ly=1.0),
        fluid=dict(rho=1.0, mu=8.0, u_max=5.0, forcing="poiseuille"),
        solver=dict(method="fft"),
        platelets=dict(
            count=1,
            centers=((0.3, 0.25),),
            a=0.1,
            b=0.025,
            n_s=100,
            n_d=25,
            k_t=k_t,
            k_b=FSI_KB_RATIO * k_t,
            target="initial",
        ),
    )


def aggregation_config(dt=1e-4, t_end=2.4, method="rbf-ib", solver="fft"):
    """Eight-platelet wall aggregation scenario on the 128x64 channel."""
    centers = (
        (0.5, 0.02), (0.64, 0.02), (0.78, 0.02), (0.55, 0.07),
        (0.68, 0.07), (0.4, 0.045), (0.23, 0.045), (0.65, 0.14),
    )
    k_t = CHANNEL_KT64
    return cfgmod.RunConfig().with_(
        run=dict(method=method, dt=dt, t_end=t_end, snapshot_every=2000,
                 exit_x=1.9, initial_flow="poiseuille"),
        grid=dict(nx=128, ny=64, Lx=2.0, Ly=1.0),
        fluid=dict(rho=1.0, mu=8.0, u_max=5.0, forcing="poiseuille"),
        solver=dict(method=solver),
        platelets=dict(
            count=8,
            centers=centers,
            a=0.06,
            b=0.015,
            n_s=100,
            n_d=50,
            k_t=k_t,
            k_b=FSI_KB_RATIO * k_t,
            target="initial",
        ),
        links=dict(enabled=True, bind_radius=0.03, max_links=10,
                   wall_band=(0.4, 0.7), break_strain=1.0, k_c=40.0),
    )


# -- study drivers -----------------------------------------------------------


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _grid_of(cfg):
    from . import mesh

    return mesh.GridSpec(cfg.grid.nx, cfg.grid.ny, cfg.grid.Lx, cfg.grid.Ly)


def _final_state(result):
    header, fields, markers, _links = snapshots.read_snapshot(result.out_dir / "final.snap")
    from . import mesh

    st = mesh.FluidState(u=fields["u"], v=fields["v"], p=fields["p"])
    return st, markers


def study_fluid_convergence(out_dir, base=None, ladder=FLUID_LADDER, gold=FLUID_GOLD):
    runs_dir = Path(out_dir) / "runs"
    gold_cfg = fluid_config(*gold)
    gold_res = runner.run_simulation(gold_cfg, out_dir=runs_dir)
    gold_state, _ = _final_state(gold_res)
    gold_grid = _grid_of(gold_cfg)

    rows = []
    errors = []
    for nx, dt in ladder:
        cfg = fluid_config(nx, dt)
        res = runner.run_simulation(cfg, out_dir=runs_dir)
        if not res.ok:
            rows.append([f"{nx}x{nx}", dt, "", "", "", "", res.status, res.message])
            continue
        st, _ = _final_state(res)
        e2, einf = metrics.velocity_error(st, _grid_of(cfg), gold_state, gold_grid)
        rate2 = metrics.convergence_rate(errors[-1][0], e2) if errors else ""
        rateinf = metrics.convergence_rate(errors[-1][1], einf) if errors else ""
        errors.append((e2, einf))
        rows.append([f"{nx}x{nx}", dt, e2, rate2, einf, rateinf, res.status, ""])
    path = _write_csv(
        Path(out_dir) / "fluid_convergence.csv",
        ["grid", "dt", "e2", "rate2", "einf", "rateinf", "status", "message"],
        rows,
    )
    return {"csv": path, "rows": rows}


def study_fsi_convergence(out_dir, method="pl-ib", base=None, n_d=50):
    runs_dir = Path(out_dir) / "runs"
    gnx, gns, gdt = FSI_GOLD
    gold_cfg = fsi_config(method, gnx, gns, gdt, n_d=n_d)
    gold_res = runner.run_simulation(gold_cfg, out_dir=runs_dir)
    gold_state, gold_markers = _final_state(gold_res)
    gold_grid = _grid_of(gold_cfg)

    # gold structure statistics from the gold run's own sample sites
    gold_pts = _sample_sites_from_markers(gold_cfg, gold_markers[0])
    gold_stats = metrics.chord_stats(gold_pts, metrics.ideal_chord(0.1, len(gold_pts)))

    rows = []
    prev = None
    for nx, n_s, dt in FSI_LADDER:
        cfg = fsi_config(method, nx, n_s, dt, n_d=n_d)
        res = runner.run_simulation(cfg, out_dir=runs_dir)
        if not res.ok:
            rows.append([f"{nx}x{nx}", n_s, dt] + [""] * 6 + [res.status, res.message])
            prev = None
            continue
        st, markers = _final_state(res)
        e2, einf = metrics.velocity_error(st, _grid_of(cfg), gold_state, gold_grid)
        pts = _sample_sites_from_markers(cfg, markers[0])
        ex2, exinf = metrics.chord_metric(pts, 0.1, gold_stats)
        rate2 = metrics.convergence_rate(prev[0], e2) if prev else ""
        rateinf = metrics.convergence_rate(prev[1], einf) if prev else ""
        prev = (e2, einf)
        rows.append([f"{nx}x{nx}", n_s, dt, e2, rate2, einf, rateinf, ex2, exinf, res.status, ""])
    rows.append(
        ["gold", gns, gdt, "", "", "", "", gold_stats.s2, gold_stats.s_inf, gold_res.status, "s2/s_inf are gold chord stats"]
    )
    path = _write_csv(
        Path(out_dir) / f"fsi_convergence_{method.replace('-', '_')}.csv",
        ["grid", "n_s", "dt", "e2", "rate2", "einf", "rateinf", "chord_e2", "chord_einf", "status", "message"],
        rows,
    )
    return {"csv": path, "rows": rows, "gold_stats": gold_stats}


def _sample_sites_from_markers(cfg, markers):
    """Sample-site positions of a run's final state from its stored markers."""
    if cfg.run.method == "rbf-ib":
        ops = runner.shared_operators(cfg.platelets.n_d, cfg.platelets.n_s, cfg.epsilon())
        return rbfgeom.evaluate(ops, markers)
    return markers


def study_area(out_dir, method="rbf-ib", n_d_values=(25, 50), base=None):
    runs_dir = Path(out_dir) / "runs"
    rows = []
    for n_d in n_d_values:
        for nx, n_s, dt in FSI_LADDER:
            cfg = fsi_config(method, nx, n_s, dt, n_d=n_d)
            res = runner.run_simulation(cfg, out_dir=runs_dir)
            if not res.ok:
                rows.append([f"{nx}x{nx}", n_s, n_d, dt, "", "", "", res.status, res.message])
                continue
            _, markers = _final_state(res)
            area0 = np.pi / 100.0
            area_end = metrics.enclosed_area(markers[0])
            loss_pct = 100.0 * (area0 - area_end) / area0
            rows.append([f"{nx}x{nx}", n_s, n_d, dt, area0, area_end, loss_pct, res.status, ""])
    path = _write_csv(
        Path(out_dir) / "area.csv",
        ["grid", "n_s", "n_d", "dt", "area_initial", "area_final", "loss_pct", "status", "message"],
        rows,
    )
    return {"csv": path, "rows": rows}


def study_energy(out_dir, base=None):
    runs_dir = Path(out_dir) / "runs"
    rows = []
    series_paths = []
    for nx, n_s, dt in FSI_LADDER[:2]:
        cfg = fsi_config("rbf-ib", nx, n_s, dt, n_d=50, energy_every=1)
        res = runner.run_simulation(cfg, out_dir=runs_dir)
        series_paths.append(res.out_dir / "series.csv")
        t = np.array(res.series["time"], dtype=float)
        e = np.array(res.series["energy"], dtype=float)
        spike = float(np.abs(e[t <= 0.5]).max()) if len(e) else 0.0
        tail = float(e[t > 1.0].max()) if (t > 1.0).any() else 0.0
        rows.append([f"{nx}x{nx}", n_s, dt, spike, tail, res.status, res.message])
    path = _write_csv(
        Path(out_dir) / "energy.csv",
        ["grid", "n_s", "dt", "spike_scale", "max_change_after_t1", "status", "message"],
        rows,
    )
    return {"csv": path, "rows": rows, "series": series_paths}


def _stable_probe(make_cfg, runs_dir):
    def probe(dt):
        res = runner.run_simulation(make_cfg(dt), out_dir=runs_dir)
        return res.ok

    return probe


def study_stability(out_dir, base=None, probe_t=0.5, increment=1e-4, max_dt=5e-3):
    """Maximum stable time step search for both methods on three scenarios."""
    runs_dir = Path(out_dir) / "runs"
    scenarios = {
        "fsi-32": lambda method: (
            lambda dt: fsi_config(method, 32, 50, dt, n_d=25, t_end=probe_t)
        ),
        "fsi-64": lambda method: (
            lambda dt: fsi_config(method, 64, 100, dt, n_d=25, t_end=probe_t)
        ),
        "platelet-64": lambda method: (
            lambda dt: platelet_stability_config(method, 64, dt, t_end=probe_t)
        ),
    }
    starts = {"fsi-32": 1e-4, "fsi-64": 5e-5, "platelet-64": 5e-5}
    rows = []
    found = {}
    for name, make in scenarios.items():
        for method in ("pl-ib", "rbf-ib"):
            start = starts[name]
            if method == "rbf-ib" and found.get((name, "pl-ib"), 0) > 0:
                start = found[(name, "pl-ib")]
            max_stable = metrics.stability_search(
                _stable_probe(make(method), runs_dir), start, increment, max_dt
            )
            found[(name, method)] = max_stable
            rows.append([name, method, max_stable])
        pl = found[(name, "pl-ib")]
        rbf = found[(name, "rbf-ib")]
        rows.append([name, "ratio", rbf / pl if pl else ""])
    path = _write_csv(
        Path(out_dir) / "stability.csv", ["scenario", "method", "max_dt"], rows
    )
    return {"csv": path, "rows": rows, "found": found}


def study_timing(out_dir, base=None, n_p_values=(15, 30, 60), t_end=1.0, solver="fft"):
    runs_dir = Path(out_dir) / "runs"
    rows = []
    curves = {}
    for method in ("pl-ib", "rbf-ib"):
        for n_p in n_p_values:
            cfg = channel_config(method, n_p, t_end=t_end, solver=solver)
            res = runner.run_simulation(cfg, out_dir=runs_dir)
            prof = res.profile
            rows.append(
                [method, n_p, prof.wall_per_step, prof.fluid_fraction,
                 prof.mean_pressure_iterations, res.status, res.message]
            )
            curves[(method, n_p)] = prof.wall_per_step
    path = _write_csv(
        Path(out_dir) / "timing.csv",
        ["method", "n_p", "wall_per_step", "fluid_fraction", "mean_pressure_iters", "status", "message"],
        rows,
    )
    return {"csv": path, "rows": rows, "curves": curves}


def run_study(name, out_dir, base=None):
    drivers = {
        "fluid-convergence": study_fluid_convergence,
        "fsi-convergence": study_fsi_convergence,
        "area": study_area,
        "energy": study_energy,
        "stability": study_stability,
        "timing": study_timing,
    }
    if name not in drivers:
        raise ValueError(f"unknown study {name!r}; choose from {STUDIES}")
    return drivers[name](out_dir, base=base)
