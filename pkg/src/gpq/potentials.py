"""Multi-well power-law trapping potentials and their flatness data.

V(x) = h(x) * prod_i |x - x_i|^{p_i} with a bounded modulation h.  The
flatness data ranks the wells: p is the largest local exponent, lambda_i the
limit of V / |x - x_i|^p at each well (infinite for wells with p_i < p), and
the flattest wells are those attaining the minimal lambda.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .field2d import Field2D


@dataclass(frozen=True)
class Well:
    center: tuple
    exponent: float

    def __post_init__(self):
        if len(self.center) != 2 or not all(np.isfinite(c) for c in self.center):
            raise ParameterError(f"well center must be a finite 2D point, got {self.center}")
        if not (np.isfinite(self.exponent) and self.exponent > 0):
            raise ParameterError(f"well exponent must be positive, got {self.exponent}")


_MODULATION_RE = re.compile(
    r"""^1\s*(?:(?P<sign>[+-])\s*(?P<c>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*\*\s*
        exp\(\s*-\s*\|x(?:\s*-\s*\(\s*(?P<x0>[^,\s]+)\s*,\s*(?P<y0>[^)\s]+)\s*\))?\|
        \^2\s*(?:/\s*(?P<w>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*\^2\s*)?\))?$""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class Modulation:
    """Bounded factor 1 + c * exp(-|x - x0|^2 / w^2) with |c| < 1."""

    c: float
    center: tuple = (0.0, 0.0)
    width: float = 1.0
    text: str = ""

    def __post_init__(self):
        if not abs(self.c) < 1.0:
            raise ParameterError(f"modulation coefficient must satisfy |c| < 1, got {self.c}")
        if not (np.isfinite(self.width) and self.width > 0):
            raise ParameterError(f"modulation width must be positive, got {self.width}")

    def __call__(self, X, Y):
        r2 = (np.asarray(X) - self.center[0]) ** 2 + (np.asarray(Y) - self.center[1]) ** 2
        return 1.0 + self.c * np.exp(-r2 / self.width**2)


def parse_modulation(text):
    """Parse the whitelisted grammar ``1 [+|-] C*exp(-|x[-(x0,y0)]|^2[/W^2])``.

    Returns None for the identity "1".  Anything outside the grammar is
    rejected: modulations must be closed forms with certified bounds.
    """
    m = _MODULATION_RE.match(text.strip())
    if not m:
        raise ParameterError(f"modulation {text!r} is not in the supported grammar")
    if m.group("c") is None:
        return None
    c = float(m.group("c"))
    if m.group("sign") == "-":
        c = -c
    center = (0.0, 0.0)
    if m.group("x0") is not None:
        try:
            center = (float(m.group("x0")), float(m.group("y0")))
        except ValueError as exc:
            raise ParameterError(f"modulation {text!r}: bad center") from exc
    width = float(m.group("w")) if m.group("w") is not None else 1.0
    return Modulation(c=c, center=center, width=width, text=text.strip())


@dataclass(frozen=True)
class PotentialSpec:
    wells: tuple
    modulation: Modulation | None = None

    def __post_init__(self):
        if not self.wells:
            raise ParameterError("potential needs at least one well")
        centers = [w.center for w in self.wells]
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                if math.dist(centers[i], centers[j]) == 0.0:
                    raise ParameterError(f"well centers must be pairwise distinct: {centers[i]}")


def single_well(exponent=2.0, center=(0.0, 0.0)):
    return PotentialSpec(wells=(Well(tuple(center), exponent),))


def evaluate(spec, X, Y):
    """V on arbitrary point arrays: modulated product of powered distances."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    out = np.ones_like(X, dtype=float)
    for well in spec.wells:
        d = np.hypot(X - well.center[0], Y - well.center[1])
        out = out * d**well.exponent
    if spec.modulation is not None:
        out = out * spec.modulation(X, Y)
    return out


def evaluate_at(spec, point):
    return float(evaluate(spec, np.array(point[0]), np.array(point[1])))


def potential_field(spec, grid):
    X, Y = grid.mesh()
    return Field2D(grid, evaluate(spec, X, Y))


@dataclass(frozen=True)
class FlatnessReport:
    p: float            # max well exponent
    lambdas: tuple      # per-well limits, inf where the well is steeper-blind
    lam: float          # min of the finite lambdas
    flattest: tuple     # indices attaining lam (the set of flattest wells)

    def flattest_centers(self, spec):
        return tuple(spec.wells[i].center for i in self.flattest)


def flatness_classify(spec):
    """p = max p_i; lambda_i = h(x_i) prod_{j!=i} |x_i-x_j|^{p_j} when p_i = p.

    The lambda_i for p_i = p come from the analytic product form; wells with
    p_i < p get lambda_i = +inf (their local limit against |x-x_i|^p diverges).
    """
    p = max(w.exponent for w in spec.wells)
    lambdas = []
    for i, wi in enumerate(spec.wells):
        if wi.exponent < p:
            lambdas.append(math.inf)
            continue
        lam = 1.0
        for j, wj in enumerate(spec.wells):
            if j == i:
                continue
            lam *= math.dist(wi.center, wj.center) ** wj.exponent
        if spec.modulation is not None:
            lam *= float(spec.modulation(wi.center[0], wi.center[1]))
        lambdas.append(lam)
    lam_min = min(lambdas)
    flattest = tuple(i for i, l in enumerate(lambdas) if l == lam_min)
    return FlatnessReport(p=p, lambdas=tuple(lambdas), lam=lam_min, flattest=flattest)
