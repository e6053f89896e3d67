"""Lagrangian constitutive forces: tension, bending, and cohesion springs.

Two realizations of the same tension/bending law are provided.  The RBF
backend applies precomputed differentiation matrices to the data sites and
yields forces at the sample sites; the piecewise-linear backend replaces
every parametric derivative by a second-order centered difference on the
uniform parameter grid of the IB points themselves.

Tension follows the fiber model: T = k_t * (|tangent| - rest length), and
the force density is the parametric derivative of T times the unit tangent.
Bending penalizes the deviation of the fourth parametric derivative from
its value in the reference configuration.
"""

from dataclasses import dataclass

import numpy as np

from . import rbfgeom
from .errors import ConfigError, DegenerateGeometryError

_TANGENT_FLOOR = 1e-12


@dataclass
class ElasticParams:
    """Stiffnesses plus per-platelet rest-state data.

    l0 holds the rest tangent norms (one per data site for the RBF backend,
    one per IB point for the PL backend); ref_bend holds the reference
    fourth derivative at the force sites.
    """

    k_t: float
    k_b: float
    l0: np.ndarray
    ref_bend: np.ndarray

    def __post_init__(self):
        problems = []
        if self.k_t <= 0:
            problems.append(f"k_t must be positive, got {self.k_t}")
        if self.k_b <= 0:
            problems.append(f"k_b must be positive, got {self.k_b}")
        if np.any(np.asarray(self.l0) <= 0):
            problems.append("rest lengths must all be positive")
        if problems:
            raise ConfigError(problems)


@dataclass
class Link:
    """Cohesion spring between two sample sites, or a sample site and a wall anchor.

    Endpoints are (platelet id, sample index); a wall link stores the fixed
    anchor position instead of a second platelet endpoint.
    """

    a_pid: int
    a_idx: int
    k_c: float
    l0_c: float
    b_pid: int = None
    b_idx: int = None
    anchor: tuple = None

    def __post_init__(self):
        if (self.b_pid is None) == (self.anchor is None):
            raise ConfigError("link needs exactly one of (b endpoint, wall anchor)")
        if self.b_pid is not None and (self.a_pid, self.a_idx) == (self.b_pid, self.b_idx):
            raise ConfigError("link endpoints must be distinct")
        if self.k_c < 0 or self.l0_c < 0:
            raise ConfigError("link stiffness and rest length must be nonnegative")

    @property
    def is_wall(self):
        return self.anchor is not None


def _row_norms(a):
    return np.hypot(a[:, 0], a[:, 1])


# -- RBF backend ----------------------------------------------------------


def init_rbf_rest(x_ref, ops, k_t, k_b):
    """Rest quantities from a reference configuration of the data sites."""
    tau0 = rbfgeom.differentiate(ops, x_ref, 1, at="data")
    l0 = _row_norms(tau0)
    ref_bend = rbfgeom.differentiate(ops, x_ref, 4, at="sample")
    return ElasticParams(k_t=k_t, k_b=k_b, l0=l0, ref_bend=ref_bend)


def rbf_forces(x_data, ops, params):
    """Tension plus bending force density at the sample sites.

    Sequence: tangents at data sites, fiber tension there, derivative of the
    tension field evaluated at sample sites, then the bending difference.
    Cohesion is added separately by the stepper.
    """
    tau = rbfgeom.differentiate(ops, x_data, 1, at="data")
    norms = _row_norms(tau)
    if norms.min() < _TANGENT_FLOOR:
        raise DegenerateGeometryError(
            f"tangent norm {norms.min():.3e} below {_TANGENT_FLOOR}"
        )
    tension = params.k_t * (norms - params.l0)
    z = (tension / norms)[:, None] * tau
    f_tension = rbfgeom.differentiate(ops, z, 1, at="sample")
    d4 = rbfgeom.differentiate(ops, x_data, 4, at="sample")
    f_bend = -params.k_b * (d4 - params.ref_bend)
    return f_tension + f_bend


def rbf_forces_batch(x_stack, ops, k_t, k_b, l0_stack, ref_stack):
    """Vectorized rbf_forces over a stack of platelets sharing one operator set.

    x_stack: (P, N_d, 2); l0_stack: (P, N_d); ref_stack: (P, N_s, 2).
    """
    tau = ops.d_data[1] @ x_stack
    norms = np.hypot(tau[:, :, 0], tau[:, :, 1])
    if norms.min() < _TANGENT_FLOOR:
        raise DegenerateGeometryError(
            f"tangent norm {norms.min():.3e} below {_TANGENT_FLOOR}"
        )
    z = (k_t * (norms - l0_stack) / norms)[:, :, None] * tau
    f_tension = ops.d_sample[1] @ z
    d4 = ops.d_sample[4] @ x_stack
    return f_tension - k_b * (d4 - ref_stack)


# -- piecewise-linear backend ----------------------------------------------
#
# The tension derivative is discretized on the staggered triad: tangents and
# fiber tension live on segment midpoints q+1/2, and the force at point q is
# the centered difference of T*tau_hat between its two midpoints.  This is
# the adjacent-pair Hookean spring form, second order on a near-uniform
# parameter grid.  Row q of the midpoint arrays refers to segment (q, q+1).


def _pl_half_tangent(x, dq):
    return (np.roll(x, -1, axis=-2) - x) / dq


def _pl_d2(x, dq):
    return (np.roll(x, -1, axis=-2) - 2.0 * x + np.roll(x, 1, axis=-2)) / dq**2


def _pl_d4(x, dq):
    return _pl_d2(_pl_d2(x, dq), dq)


def init_pl_rest(x_ref, k_t, k_b):
    """Rest quantities for the PL backend from reference IB point positions.

    l0 holds the rest tangent norms on segment midpoints.
    """
    dq = 2.0 * np.pi / len(x_ref)
    tau0 = _pl_half_tangent(x_ref, dq)
    l0 = _row_norms(tau0)
    ref_bend = _pl_d4(x_ref, dq)
    return ElasticParams(k_t=k_t, k_b=k_b, l0=l0, ref_bend=ref_bend)


def pl_forces(x, params):
    """Adjacent-spring tension plus fourth-difference bending at the IB points."""
    dq = 2.0 * np.pi / len(x)
    tau = _pl_half_tangent(x, dq)
    norms = _row_norms(tau)
    if norms.min() < _TANGENT_FLOOR:
        raise DegenerateGeometryError(
            f"tangent norm {norms.min():.3e} below {_TANGENT_FLOOR}"
        )
    z = (params.k_t * (norms - params.l0) / norms)[:, None] * tau
    f_tension = (z - np.roll(z, 1, axis=-2)) / dq
    f_bend = -params.k_b * (_pl_d4(x, dq) - params.ref_bend)
    return f_tension + f_bend


def pl_forces_batch(x_stack, k_t, k_b, l0_stack, ref_stack):
    """Vectorized pl_forces over a (P, N_s, 2) stack with shared stiffnesses."""
    dq = 2.0 * np.pi / x_stack.shape[1]
    tau = _pl_half_tangent(x_stack, dq)
    norms = np.hypot(tau[:, :, 0], tau[:, :, 1])
    if norms.min() < _TANGENT_FLOOR:
        raise DegenerateGeometryError(
            f"tangent norm {norms.min():.3e} below {_TANGENT_FLOOR}"
        )
    z = (k_t * (norms - l0_stack) / norms)[:, :, None] * tau
    f_tension = (z - np.roll(z, 1, axis=-2)) / dq
    return f_tension - k_b * (_pl_d4(x_stack, dq) - ref_stack)


# -- cohesion ---------------------------------------------------------------


def cohesion_force(k_c, l0_c, x_a, x_b):
    """Spring force pair (on A, on B) for a link between positions x_a, x_b."""
    sep = np.asarray(x_b, dtype=float) - np.asarray(x_a, dtype=float)
    dist = float(np.hypot(sep[0], sep[1]))
    if dist <= 1e-14:
        raise DegenerateGeometryError("cohesion endpoints coincide")
    f_a = k_c * (dist - l0_c) / dist * sep
    return f_a, -f_a
