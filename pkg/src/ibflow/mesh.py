"""Staggered (MAC) grid, field containers, and centered finite-difference operators.

Grid layout for an nx-by-ny cell grid with square cells of width h:

* ``u``: x-velocity on vertical faces, shape ``(nx, ny)``, sample ``u[i, j]``
  at ``(i*h, (j+0.5)*h)``.  The face at x=0 is the periodic wrap of x=Lx.
* ``v``: y-velocity on horizontal faces, shape ``(nx, ny+1)``, sample
  ``v[i, j]`` at ``((i+0.5)*h, j*h)``.  Rows j=0 and j=ny sit on the walls
  and are pinned to zero.
* ``p``: pressure at cell centers, shape ``(nx, ny)``.

Boundary conditions: periodic in x everywhere; no-slip walls at y=0 and
y=Ly.  The wall condition for u is realized with reflected ghost rows
(``u_ghost = -u_interior``) so the velocity averaged onto the wall is
exactly zero; pressure uses mirrored ghost rows (zero normal derivative).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Cell counts and physical extents of the rectangular domain."""

    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        problems = []
        if self.nx < 8 or not _is_pow2(self.nx):
            problems.append(f"nx must be a power of two >= 8, got {self.nx}")
        if self.ny < 8 or not _is_pow2(self.ny):
            problems.append(f"ny must be a power of two >= 8, got {self.ny}")
        if self.Lx <= 0 or self.Ly <= 0:
            problems.append("domain lengths must be positive")
        elif abs(self.Lx / self.nx - self.Ly / self.ny) > 1e-12 * self.Lx:
            problems.append(
                f"cells must be square: Lx/nx={self.Lx / self.nx} != Ly/ny={self.Ly / self.ny}"
            )
        if problems:
            raise ConfigError(problems)

    @property
    def h(self):
        return self.Lx / self.nx

    # Face and center coordinates, used by tests and the delta kernel.
    def x_u(self):
        return np.arange(self.nx) * self.h

    def y_u(self):
        return (np.arange(self.ny) + 0.5) * self.h

    def x_v(self):
        return (np.arange(self.nx) + 0.5) * self.h

    def y_v(self):
        return np.arange(self.ny + 1) * self.h


@dataclass(frozen=True)
class FluidParams:
    """Constant fluid density/viscosity and background body force density."""

    rho: float = 1.0
    mu: float = 8.0
    body_force: tuple = (0.0, 0.0)

    def __post_init__(self):
        problems = []
        if self.rho <= 0:
            problems.append(f"rho must be positive, got {self.rho}")
        if self.mu <= 0:
            problems.append(f"mu must be positive, got {self.mu}")
        if problems:
            raise ConfigError(problems)


@dataclass
class FluidState:
    """Velocity, pressure, and the most recent Eulerian force density."""

    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    fu: np.ndarray = None
    fv: np.ndarray = None

    @classmethod
    def zeros(cls, grid):
        return cls(
            u=np.zeros((grid.nx, grid.ny)),
            v=np.zeros((grid.nx, grid.ny + 1)),
            p=np.zeros((grid.nx, grid.ny)),
            fu=np.zeros((grid.nx, grid.ny)),
            fv=np.zeros((grid.nx, grid.ny + 1)),
        )

    def copy(self):
        return FluidState(
            u=self.u.copy(),
            v=self.v.copy(),
            p=self.p.copy(),
            fu=None if self.fu is None else self.fu.copy(),
            fv=None if self.fv is None else self.fv.copy(),
        )

    def max_speed(self):
        m = 0.0
        for a in (self.u, self.v):
            m = max(m, float(np.max(np.abs(a))) if a.size else 0.0)
        return m


def divergence(u, v, h):
    """Per-cell MAC divergence (u_{i+1,j} - u_{i,j} + v_{i,j+1} - v_{i,j}) / h."""
    if u.shape[0] != v.shape[0] or v.shape[1] != u.shape[1] + 1:
        raise ValueError(f"mismatched field shapes {u.shape} vs {v.shape}")
    dudx = (np.roll(u, -1, axis=0) - u) / h
    dvdy = (v[:, 1:] - v[:, :-1]) / h
    return dudx + dvdy


def _shift_y_u(u, direction):
    """u-field neighbor one row toward +y or -y, with reflected wall ghosts."""
    out = np.empty_like(u)
    if direction > 0:
        out[:, :-1] = u[:, 1:]
        out[:, -1] = -u[:, -1]
    else:
        out[:, 1:] = u[:, :-1]
        out[:, 0] = -u[:, 0]
    return out


def laplacian_u(u, h):
    """5-point Laplacian on the u layout (periodic x, reflected ghosts in y)."""
    return (
        np.roll(u, -1, axis=0)
        + np.roll(u, 1, axis=0)
        + _shift_y_u(u, +1)
        + _shift_y_u(u, -1)
        - 4.0 * u
    ) / h**2


def laplacian_v(v, h):
    """5-point Laplacian on interior v rows; wall rows of the result are zero.

    The wall faces j=0 and j=ny carry Dirichlet data (v=0) and are read as
    neighbors, never updated.
    """
    out = np.zeros_like(v)
    vi = v[:, 1:-1]
    out[:, 1:-1] = (
        np.roll(vi, -1, axis=0)
        + np.roll(vi, 1, axis=0)
        + v[:, 2:]
        + v[:, :-2]
        - 4.0 * vi
    ) / h**2
    return out


def laplacian_p(p, h):
    """5-point Laplacian on cell centers (periodic x, mirrored ghosts in y)."""
    pn = np.empty_like(p)
    pn[:, :-1] = p[:, 1:]
    pn[:, -1] = p[:, -1]
    ps = np.empty_like(p)
    ps[:, 1:] = p[:, :-1]
    ps[:, 0] = p[:, 0]
    return (np.roll(p, -1, axis=0) + np.roll(p, 1, axis=0) + pn + ps - 4.0 * p) / h**2


def laplacian(field, grid, layout):
    """Dispatch on field layout: "u", "v", or "p"."""
    if layout == "u":
        return laplacian_u(field, grid.h)
    if layout == "v":
        return laplacian_v(field, grid.h)
    if layout == "p":
        return laplacian_p(field, grid.h)
    raise ValueError(f"unknown layout {layout!r}")


def _v_at_u(v):
    """Average the four v faces surrounding each u sample point."""
    vc = 0.5 * (v[:, :-1] + v[:, 1:])
    return 0.5 * (vc + np.roll(vc, 1, axis=0))


def _u_at_v(u):
    """Average the four u faces surrounding each interior v sample point."""
    ux = 0.5 * (u + np.roll(u, -1, axis=0))
    out = np.zeros((u.shape[0], u.shape[1] + 1))
    out[:, 1:-1] = 0.5 * (ux[:, :-1] + ux[:, 1:])
    return out


def advect(u, v, h):
    """Centered-difference (u . grad)u with face averaging of the transport velocity.

    Returns the advection terms on the u and v layouts; wall rows of the
    v component are zero (those faces are pinned).
    """
    dudx = (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * h)
    dudy = (_shift_y_u(u, +1) - _shift_y_u(u, -1)) / (2.0 * h)
    adv_u = u * dudx + _v_at_u(v) * dudy

    adv_v = np.zeros_like(v)
    vi = v[:, 1:-1]
    dvdx = (np.roll(vi, -1, axis=0) - np.roll(vi, 1, axis=0)) / (2.0 * h)
    dvdy = (v[:, 2:] - v[:, :-2]) / (2.0 * h)
    adv_v[:, 1:-1] = _u_at_v(u)[:, 1:-1] * dvdx + vi * dvdy
    return adv_u, adv_v


def gradient_p(p, h):
    """Pressure gradient at u faces and v faces (zero on wall faces)."""
    gx = (p - np.roll(p, 1, axis=0)) / h
    gy = np.zeros((p.shape[0], p.shape[1] + 1))
    gy[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / h
    return gx, gy
