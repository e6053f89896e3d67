"""2D immersed-boundary fluid-structure simulation.

Elastic membranes ("platelets") immersed in incompressible channel flow,
with two interchangeable structure representations: directly tracked IB
points with centered-difference forces, and an RBF parameterization on the
circle whose tracked data sites generate sample sites through precomputed
evaluation and differentiation matrices.
"""

__version__ = "0.1.0"
