"""RK2 immersed-boundary time stepping, platelet lifecycle, and link management.

Both schemes share the same skeleton per step: half-advance the tracked
Lagrangian points with the current velocity, compute forces on the mid-step
geometry, spread them once, take the backward-Euler fluid half step, advance
the tracked points over the full dt using the mid-step velocity at the
mid-step positions, then take the Crank-Nicolson fluid full step.

The piecewise-linear method tracks the sample sites (IB points) directly.
The RBF method tracks only the data sites; sample sites are generated once
per step from the mid-step data sites via the evaluation matrix, and forces
are computed and spread from those samples.  Data sites therefore move
twice per step while samples are generated exactly once; the counters in
``SimState.counters`` record this structure so tests can assert it.

Link management is purely geometric: a platelet activates when any sample
site comes within the bind radius of the adhesive wall band or of an
activated platelet's sample site; activated platelets form links (newest
rest length = formation distance) in deterministic id/index order subject
to a per-platelet cap, and links break when stretched beyond
(1 + break_strain) times their rest length.
"""

import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import fluid, forces, ibkernel, rbfgeom
from .errors import ConfigError


@dataclass
class PlateletPl:
    """Piecewise-linear platelet: directly tracked IB points."""

    pid: int
    x: np.ndarray
    params: forces.ElasticParams
    activated: bool = False

    @property
    def n_sample(self):
        return len(self.x)

    def markers(self):
        return self.x

    def sample_positions(self):
        return self.x

    def centroid(self):
        return self.x.mean(axis=0)


@dataclass
class PlateletRbf:
    """RBF platelet: tracked data sites plus shared precomputed operators."""

    pid: int
    x_data: np.ndarray
    ops: rbfgeom.RbfOperators
    params: forces.ElasticParams
    activated: bool = False

    @property
    def n_sample(self):
        return self.ops.config.n_sample

    def markers(self):
        return self.x_data

    def sample_positions(self):
        return rbfgeom.evaluate(self.ops, self.x_data)

    def centroid(self):
        return self.x_data.mean(axis=0)


@dataclass
class LinkPolicy:
    """Rules for activation, link formation, and link breaking."""

    enabled: bool = False
    bind_radius: float = 0.02
    max_links_per_platelet: int = 10
    wall_band: tuple = (0.4, 0.7)
    break_strain: float = 1.0
    allow_crossing: bool = True
    k_c: float = 1.0

    def __post_init__(self):
        problems = []
        if self.bind_radius <= 0:
            problems.append(f"bind_radius must be positive, got {self.bind_radius}")
        if self.max_links_per_platelet < 0:
            problems.append("max_links_per_platelet must be >= 0")
        if self.break_strain < 0:
            problems.append("break_strain must be >= 0")
        if self.k_c < 0:
            problems.append("k_c must be >= 0")
        if problems:
            raise ConfigError(problems)


@dataclass
class StepContext:
    """Static per-run objects threaded through the step functions."""

    grid: object
    params: object
    solver: object
    forces_enabled: bool = True


@dataclass
class SimState:
    fluid: object
    platelets: list
    links: list = field(default_factory=list)
    time: float = 0.0
    step: int = 0
    seed: int = 0
    counters: dict = field(default_factory=dict)

    def bump(self, key, amount):
        self.counters[key] = self.counters.get(key, 0) + amount

    def platelet_by_id(self):
        return {p.pid: p for p in self.platelets}


def _body_force_fields(ctx):
    grid = ctx.grid
    fx, fy = ctx.params.body_force
    fu = np.full((grid.nx, grid.ny), float(fx))
    fv = np.full((grid.nx, grid.ny + 1), float(fy))
    return fu, fv


def _group_pl(platelets):
    """Group PL platelets by sample count for stacked force evaluation."""
    groups = {}
    for p in platelets:
        groups.setdefault(p.n_sample, []).append(p)
    return groups.values()


def _group_rbf(platelets):
    """Group RBF platelets sharing one operator set."""
    groups = {}
    for p in platelets:
        groups.setdefault(id(p.ops), []).append(p)
    return groups.values()


def _cohesion_forces(links, samples, n_sample):
    """Per-platelet cohesion force arrays from the live link list."""
    out = {}
    for link in links:
        xa = samples[link.a_pid][link.a_idx]
        xb = link.anchor if link.is_wall else samples[link.b_pid][link.b_idx]
        fa, fb = forces.cohesion_force(link.k_c, link.l0_c, xa, xb)
        if link.a_pid not in out:
            out[link.a_pid] = np.zeros((n_sample[link.a_pid], 2))
        out[link.a_pid][link.a_idx] += fa
        if not link.is_wall:
            if link.b_pid not in out:
                out[link.b_pid] = np.zeros((n_sample[link.b_pid], 2))
            out[link.b_pid][link.b_idx] += fb
    return out


def pl_ib_step(sim, dt, ctx):
    """One RK2 step of the piecewise-linear IB method."""
    grid, solver = ctx.grid, ctx.solver
    plats = sim.platelets
    fu, fv = _body_force_fields(ctx)

    mid = {}
    start = {}
    if plats:
        pts = np.concatenate([p.x for p in plats])
        vel = ibkernel.interpolate(sim.fluid.u, sim.fluid.v, grid, pts)
        sim.bump("interp_points", len(pts))
        half_pts = pts + 0.5 * dt * vel
        i = 0
        for p in plats:
            start[p.pid] = pts[i : i + p.n_sample]
            mid[p.pid] = half_pts[i : i + p.n_sample]
            i += p.n_sample

    if ctx.forces_enabled and plats:
        n_sample = {p.pid: p.n_sample for p in plats}
        coh = _cohesion_forces(sim.links, mid, n_sample)
        for group in _group_pl(plats):
            x_stack = np.stack([mid[p.pid] for p in group])
            kt = np.array([p.params.k_t for p in group])[:, None]
            kb = np.array([p.params.k_b for p in group])[:, None, None]
            l0 = np.stack([p.params.l0 for p in group])
            ref = np.stack([p.params.ref_bend for p in group])
            f_stack = forces.pl_forces_batch(x_stack, kt, kb, l0, ref)
            for k, p in enumerate(group):
                if p.pid in coh:
                    f_stack[k] += coh[p.pid]
            dq = 2.0 * np.pi / group[0].n_sample
            pts_g = x_stack.reshape(-1, 2)
            ibkernel.spread_into(fu, fv, pts_g, f_stack.reshape(-1, 2), dq, grid)
            sim.bump("spread_points", len(pts_g))

    t0 = _time.perf_counter()
    half_state = fluid.half_step(sim.fluid, fu, fv, dt, ctx.params, grid, solver)
    sim.bump("fluid_seconds", _time.perf_counter() - t0)

    if plats:
        mid_pts = np.concatenate([mid[p.pid] for p in plats])
        vel_half = ibkernel.interpolate(half_state.u, half_state.v, grid, mid_pts)
        sim.bump("interp_points", len(mid_pts))
        new_pts = np.concatenate([start[p.pid] for p in plats]) + dt * vel_half
        i = 0
        for p in plats:
            p.x = new_pts[i : i + p.n_sample].copy()
            i += p.n_sample

    t0 = _time.perf_counter()
    sim.fluid = fluid.full_step(
        sim.fluid, half_state, fu, fv, dt, ctx.params, grid, solver
    )
    sim.bump("fluid_seconds", _time.perf_counter() - t0)
    sim.step += 1
    sim.time = sim.step * dt
    return sim


def rbf_ib_step(sim, dt, ctx):
    """One RK2 step of the RBF IB method (data sites tracked, samples generated)."""
    grid, solver = ctx.grid, ctx.solver
    plats = sim.platelets
    fu, fv = _body_force_fields(ctx)

    mid = {}
    start = {}
    if plats:
        pts = np.concatenate([p.x_data for p in plats])
        vel = ibkernel.interpolate(sim.fluid.u, sim.fluid.v, grid, pts)
        sim.bump("interp_points", len(pts))
        half_pts = pts + 0.5 * dt * vel
        i = 0
        for p in plats:
            start[p.pid] = pts[i : i + len(p.x_data)]
            mid[p.pid] = half_pts[i : i + len(p.x_data)]
            i += len(p.x_data)

    if ctx.forces_enabled and plats:
        samples = {}
        f_by_pid = {}
        for group in _group_rbf(plats):
            ops = group[0].ops
            x_stack = np.stack([mid[p.pid] for p in group])
            s_stack = ops.eval_mat @ x_stack
            sim.bump("evaluate_calls", len(group))
            kt = np.array([p.params.k_t for p in group])[:, None]
            kb = np.array([p.params.k_b for p in group])[:, None, None]
            l0 = np.stack([p.params.l0 for p in group])
            ref = np.stack([p.params.ref_bend for p in group])
            f_stack = forces.rbf_forces_batch(x_stack, ops, kt, kb, l0, ref)
            for k, p in enumerate(group):
                samples[p.pid] = s_stack[k]
                f_by_pid[p.pid] = f_stack[k]
        n_sample = {p.pid: p.n_sample for p in plats}
        coh = _cohesion_forces(sim.links, samples, n_sample)
        for pid, f_c in coh.items():
            f_by_pid[pid] = f_by_pid[pid] + f_c
        for group in _group_rbf(plats):
            dq = 2.0 * np.pi / group[0].n_sample
            pts_g = np.concatenate([samples[p.pid] for p in group])
            f_g = np.concatenate([f_by_pid[p.pid] for p in group])
            ibkernel.spread_into(fu, fv, pts_g, f_g, dq, grid)
            sim.bump("spread_points", len(pts_g))

    t0 = _time.perf_counter()
    half_state = fluid.half_step(sim.fluid, fu, fv, dt, ctx.params, grid, solver)
    sim.bump("fluid_seconds", _time.perf_counter() - t0)

    if plats:
        mid_pts = np.concatenate([mid[p.pid] for p in plats])
        vel_half = ibkernel.interpolate(half_state.u, half_state.v, grid, mid_pts)
        sim.bump("interp_points", len(mid_pts))
        new_pts = np.concatenate([start[p.pid] for p in plats]) + dt * vel_half
        i = 0
        for p in plats:
            p.x_data = new_pts[i : i + len(p.x_data)].copy()
            i += len(p.x_data)

    t0 = _time.perf_counter()
    sim.fluid = fluid.full_step(
        sim.fluid, half_state, fu, fv, dt, ctx.params, grid, solver
    )
    sim.bump("fluid_seconds", _time.perf_counter() - t0)
    sim.step += 1
    sim.time = sim.step * dt
    return sim


def step_fn(method):
    if method == "pl-ib":
        return pl_ib_step
    if method == "rbf-ib":
        return rbf_ib_step
    raise ConfigError(f"unknown method {method!r}")


# -- link management ---------------------------------------------------------


def _wall_band_distance(points, band):
    """Distance from points to the adhesive segment {(x, 0): lo <= x <= hi}."""
    lo, hi = band
    dx = np.maximum(0.0, np.maximum(lo - points[:, 0], points[:, 0] - hi))
    return np.hypot(dx, points[:, 1])


class _SpatialHash:
    """Uniform hash of sample sites bucketed at the bind radius."""

    def __init__(self, cell):
        self.cell = cell
        self.buckets = {}

    def insert(self, pid, idx, xy):
        key = (int(np.floor(xy[0] / self.cell)), int(np.floor(xy[1] / self.cell)))
        self.buckets.setdefault(key, []).append((pid, idx, xy))

    def neighbors(self, xy):
        kx = int(np.floor(xy[0] / self.cell))
        ky = int(np.floor(xy[1] / self.cell))
        for bx in (kx - 1, kx, kx + 1):
            for by in (ky - 1, ky, ky + 1):
                yield from self.buckets.get((bx, by), ())


def update_links(sim, policy, rng=None):
    """Activation, formation, and breaking passes over the current geometry.

    Formation order is deterministic: platelets by ascending id, sample
    sites by ascending index, candidate partners sorted the same way.
    """
    if not policy.enabled or not sim.platelets:
        return sim
    plats = sorted(sim.platelets, key=lambda p: p.pid)
    samples = {p.pid: np.asarray(p.sample_positions()) for p in plats}

    # Activation by proximity to the wall band or to activated platelets.
    for p in plats:
        if p.activated:
            continue
        if np.any(_wall_band_distance(samples[p.pid], policy.wall_band) <= policy.bind_radius):
            p.activated = True
            continue
        others = [q for q in plats if q.activated and q.pid != p.pid]
        if others:
            act = np.concatenate([samples[q.pid] for q in others])
            d2 = (
                (samples[p.pid][:, None, 0] - act[None, :, 0]) ** 2
                + (samples[p.pid][:, None, 1] - act[None, :, 1]) ** 2
            )
            if d2.min() <= policy.bind_radius**2:
                p.activated = True

    # Formation.
    link_count = {p.pid: 0 for p in plats}
    existing = set()
    for link in sim.links:
        link_count[link.a_pid] = link_count.get(link.a_pid, 0) + 1
        if link.is_wall:
            existing.add((link.a_pid, link.a_idx, None, None))
        else:
            link_count[link.b_pid] = link_count.get(link.b_pid, 0) + 1
            existing.add((link.a_pid, link.a_idx, link.b_pid, link.b_idx))

    cap = policy.max_links_per_platelet
    hash_ = _SpatialHash(policy.bind_radius)
    for p in plats:
        if p.activated:
            for idx, xy in enumerate(samples[p.pid]):
                hash_.insert(p.pid, idx, xy)

    for p in plats:
        if not p.activated:
            continue
        pts = samples[p.pid]
        wall_d = _wall_band_distance(pts, policy.wall_band)
        lo, hi = policy.wall_band
        for idx in range(len(pts)):
            if link_count[p.pid] >= cap:
                break
            # wall link first, then platelet partners in sorted order
            if wall_d[idx] <= policy.bind_radius and (p.pid, idx, None, None) not in existing:
                anchor = (float(np.clip(pts[idx, 0], lo, hi)), 0.0)
                sim.links.append(
                    forces.Link(
                        a_pid=p.pid,
                        a_idx=idx,
                        k_c=policy.k_c,
                        l0_c=float(wall_d[idx]),
                        anchor=anchor,
                    )
                )
                existing.add((p.pid, idx, None, None))
                link_count[p.pid] += 1
                if link_count[p.pid] >= cap:
                    break
            cands = sorted(
                [
                    (qpid, qidx, qxy)
                    for qpid, qidx, qxy in hash_.neighbors(pts[idx])
                    if qpid > p.pid
                ],
                key=lambda t: (t[0], t[1]),
            )
            for qpid, qidx, qxy in cands:
                if link_count[p.pid] >= cap or link_count[qpid] >= cap:
                    continue
                key = (p.pid, idx, qpid, qidx)
                if key in existing:
                    continue
                dist = float(np.hypot(qxy[0] - pts[idx, 0], qxy[1] - pts[idx, 1]))
                if dist <= policy.bind_radius:
                    sim.links.append(
                        forces.Link(
                            a_pid=p.pid,
                            a_idx=idx,
                            b_pid=qpid,
                            b_idx=qidx,
                            k_c=policy.k_c,
                            l0_c=dist,
                        )
                    )
                    existing.add(key)
                    link_count[p.pid] += 1
                    link_count[qpid] += 1

    # Breaking: overstretched links are removed.
    kept = []
    for link in sim.links:
        xa = samples[link.a_pid][link.a_idx]
        xb = np.asarray(link.anchor) if link.is_wall else samples[link.b_pid][link.b_idx]
        dist = float(np.hypot(xb[0] - xa[0], xb[1] - xa[1]))
        if dist <= (1.0 + policy.break_strain) * link.l0_c:
            kept.append(link)
    sim.links = kept
    return sim


def remove_exited(sim, exit_x):
    """Drop platelets whose marker centroid passed exit_x, with their links."""
    gone = {p.pid for p in sim.platelets if p.centroid()[0] > exit_x}
    if not gone:
        return sim
    sim.platelets = [p for p in sim.platelets if p.pid not in gone]
    sim.links = [
        l
        for l in sim.links
        if l.a_pid not in gone and (l.is_wall or l.b_pid not in gone)
    ]
    sim.bump("platelets_removed", len(gone))
    return sim


# -- initialization helpers ---------------------------------------------------


def ellipse_points(center, a, b, lam):
    """Points of an axis-aligned ellipse at the given parameter values."""
    return np.column_stack(
        [center[0] + a * np.cos(lam), center[1] + b * np.sin(lam)]
    )


def make_pl_platelet(pid, center, a, b, n_s, k_t, k_b, target="initial", circle_r=None):
    """PL platelet with rest state from its initial shape or a matched circle."""
    lam = rbfgeom.uniform_nodes(n_s)
    x = ellipse_points(center, a, b, lam)
    if target == "circle":
        ref = ellipse_points(center, circle_r, circle_r, lam)
    else:
        ref = x
    params = forces.init_pl_rest(ref, k_t, k_b)
    return PlateletPl(pid=pid, x=x, params=params)


def make_rbf_platelet(
    pid, center, a, b, ops, k_t, k_b, target="initial", circle_r=None
):
    """RBF platelet with rest state from its initial shape or a matched circle."""
    lam = ops.lam_data
    x = ellipse_points(center, a, b, lam)
    if target == "circle":
        ref = ellipse_points(center, circle_r, circle_r, lam)
    else:
        ref = x
    params = forces.init_rbf_rest(ref, ops, k_t, k_b)
    return PlateletRbf(pid=pid, x_data=x, ops=ops, params=params)


def max_marker_spacing(platelet):
    """Largest gap between adjacent sample sites (leakage diagnostic)."""
    pts = platelet.sample_positions()
    d = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
    return float(d.max())
