"""parashear: a numerical laboratory for quantified orbit shearing in
parabolic flows.

Subpackages cover small-matrix Lie algebra (chain bases, GR invariant,
exponentials), one-parameter flows with a time-change cocycle, centralizer
shear windows, horocycle shear witnesses, a synthetic scaling model of the
variable-curvature shear, and skew-shift special flows with long-orbit
Birkhoff machinery.
"""

__version__ = "0.1.0"
