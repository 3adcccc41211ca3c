"""Closed forms for the potential-free constrained minimization.

With unit L2 mass and coupling a, the free energy infimum and its minimizer
are explicit once the radial ground state at the same exponent is known:
everything reduces to the scalar function g(s) = s - (a/aq*) s^{q/2} and the
scales tau (dilation of the minimizer) and eps (concentration length).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .radial import RadialGrid, RadialProfile, profile_mass, radial_integral


@dataclass(frozen=True)
class FreeProblemParams:
    a: float         # coupling > 0
    q: float         # exponent in (0, 2)
    aq_star: float   # mass^{q/2} of the radial ground state at this q

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ParameterError(f"coupling a must be positive, got {self.a}")
        if not (np.isfinite(self.q) and 0.0 < self.q < 2.0):
            raise ParameterError(f"exponent q must lie in (0, 2), got {self.q}")
        if not (np.isfinite(self.aq_star) and self.aq_star > 0):
            raise ParameterError(f"aq_star must be positive, got {self.aq_star}")

    @property
    def ratio(self):
        return self.a / self.aq_star


@dataclass(frozen=True)
class ScalingRecord:
    tau_q: float
    eps_q: float
    tilde_d: float


def tau_q(p):
    """Dilation scale (q a / (2 aq*))^{1/(2-q)}, evaluated in log space."""
    return math.exp(math.log(p.q * p.a / (2.0 * p.aq_star)) / (2.0 - p.q))


def eps_q(p):
    """Concentration length (a/aq*)^{-1/(2-q)}, evaluated in log space."""
    return math.exp(-math.log(p.ratio) / (2.0 - p.q))


def tilde_d_closed(p):
    """Free minimum energy -((2-q)/2) (q/2)^{q/(2-q)} (a/aq*)^{2/(2-q)}."""
    q = p.q
    expo = (q * math.log(q / 2.0) + 2.0 * math.log(p.ratio)) / (2.0 - q)
    return -0.5 * (2.0 - q) * math.exp(expo)


def scaling_record(p):
    return ScalingRecord(tau_q=tau_q(p), eps_q=eps_q(p), tilde_d=tilde_d_closed(p))


def g_eval(s, p):
    """g(s) = s - (a/aq*) s^{q/2}; the free energy lower envelope in s = kinetic."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ParameterError("g is defined on s >= 0")
    return s - p.ratio * s ** (p.q / 2.0)


def g_argmin(p):
    """Minimizing kinetic value: (q a / (2 aq*))^{2/(2-q)} = tau_q^2."""
    return math.exp(2.0 * math.log(p.q * p.a / (2.0 * p.aq_star)) / (2.0 - p.q))


def tilde_minimizer_profile(rec, p):
    """Unit-mass dilated ground state (tau/||phi||) phi(tau r).

    Returned on the tau-adapted grid (r_max / tau, same node count), where the
    dilation maps nodes onto nodes: the samples are exact rescalings of the
    source samples, so the discrete unit mass is inherited from the source
    record rather than degraded by resampling.
    """
    if rec.q != p.q:
        raise ParameterError(f"record is for q={rec.q}, params ask q={p.q}")
    tau = tau_q(p)
    root_mass = math.sqrt(rec.mass)
    grid = RadialGrid(rec.profile.grid.r_max / tau, rec.profile.grid.n)
    values = (tau / root_mass) * rec.profile.values
    deriv = (tau * tau / root_mass) * rec.profile.slope()
    return RadialProfile(grid, values, p.q, float(values[0]), derivative=deriv)


def tilde_energy_quadrature(profile, p):
    """Free energy of a unit-mass radial profile by quadrature.

    kinetic - (2a/(q+2)) * int |u|^{q+2}, both as 2*pi int (.) r dr.
    """
    m = profile_mass(profile)
    if abs(m - 1.0) > 1e-4:
        raise ParameterError(f"profile must have unit mass, got {m}")
    kinetic = radial_integral(profile.grid, profile.slope() ** 2)
    inter = radial_integral(profile.grid, np.abs(profile.values) ** (p.q + 2.0))
    return kinetic - 2.0 * p.a / (p.q + 2.0) * inter
