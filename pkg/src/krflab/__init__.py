"""Kahler-Ricci flow laboratory.

Subpackages:

- ``cohomology``: exact class evolution, cone membership, maximal existence
  time, volumes, null loci on catalogued manifold models;
- ``maflow``: pseudo-spectral solver for the parabolic complex
  Monge-Ampere potential equation on flat torus backgrounds, with an
  a-priori-estimate diagnostics harness;
- ``ansatz``: closed-form/ODE reductions of the flow on homogeneous and
  product geometries;
- ``ghmetric``: finite-metric-space Gromov-Hausdorff machinery and a
  warped-torus collapsing demonstration;
- ``cli``: the ``krflab`` command-line tool;
- ``verify``: the acceptance-criteria suite behind ``krflab verify``.
"""

__version__ = "0.1.0"
