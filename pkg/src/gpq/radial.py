"""Radially symmetric ground states by shooting.

The profile u(r) solves u'' + u'/r = (2/q) (u - u^{q+1}) with u(0) = s,
u'(0) = 0, and the ground state is the unique s > 1 whose trajectory decays
to zero.  Below that amplitude trajectories turn back up toward the u = 1
equilibrium; above it they cross zero at finite radius.  q = 2 gives the
classical cubic scalar-field profile whose squared L2 norm is the critical
coupling.
"""

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator

from .errors import BracketError, ConsistencyError, GpqError, ParameterError

TAIL_TOL = 1e-6            # accepted tail level relative to u(0)
POHOZAEV_FLAG_TOL = 1e-6   # residual level that flags a record for refinement

# trajectory classifications inside the compiled kernel
_DECAYED = 0
_CROSSED = 1
_TURNED = 2
_NONFINITE = 3
_NO_DECAY = 4


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial nodes 0 = r_0 < ... < r_{n-1} = r_max."""

    r_max: float = 20.0
    n: int = 8001

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 2):
            raise ParameterError(f"radial grid needs n >= 2 nodes, got {self.n}")
        if not (np.isfinite(self.r_max) and self.r_max > 0):
            raise ParameterError(f"radial grid needs r_max > 0, got {self.r_max}")

    @property
    def h(self):
        return self.r_max / (self.n - 1)

    @property
    def nodes(self):
        return np.linspace(0.0, self.r_max, self.n)


DEFAULT_GRID = RadialGrid()


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled u(r) >= 0 on a radial grid, plus the amplitude that shot it."""

    grid: RadialGrid
    values: np.ndarray
    q: float
    shoot_param: float
    derivative: np.ndarray | None = None

    def __post_init__(self):
        if len(self.values) != self.grid.n:
            raise ParameterError("profile length does not match its grid")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("profile contains non-finite samples")

    def slope(self):
        """u'(r) samples; falls back to central differences if not stored."""
        if self.derivative is not None:
            return self.derivative
        return np.gradient(self.values, self.grid.h)


@dataclass(frozen=True, eq=False)
class GroundStateRecord:
    """A converged ground state with its integrals and derived constants."""

    profile: RadialProfile
    mass: float          # 2*pi * int u^2 r dr
    kinetic: float       # 2*pi * int (u')^2 r dr
    interaction: float   # 2*pi * int u^{q+2} r dr
    aq_star: float       # mass^{q/2}
    gn_constant: float   # (q+2) / (2 aq_star)
    decay_rate: float    # fitted tail exponent, nan if the window was too short
    flags: tuple = ()

    @property
    def q(self):
        return self.profile.q

    @property
    def shoot_param(self):
        return self.profile.shoot_param


@dataclass(frozen=True, eq=False)
class ShotOutcome:
    """Classification of one shooting trajectory."""

    kind: str                          # "decayed" | "crossed_zero" | "non_decaying"
    crossing_radius: float | None = None
    profile: RadialProfile | None = None
    diagnostic: str | None = None      # "turned_up" | "no_decay_at_rmax" | "non_finite"

    @property
    def decayed(self):
        return self.kind == "decayed"

    @property
    def crossed(self):
        return self.kind == "crossed_zero"


@njit(cache=True)
def _shoot_kernel(q, s, h, n, tail_abs, deep):
    """Fixed-step RK4 sweep of the radial ODE.

    Returns (status, stop, event_r, u, v) where stop is the last trusted node
    and u, v are zeroed beyond it.  With deep=True the sweep keeps going below
    the tail threshold until the trajectory misbehaves, which maximises the
    usable tail before shooting instability takes over.
    """
    u = np.zeros(n)
    v = np.zeros(n)
    c = 2.0 / q
    # a genuine exponential tail has |u'| ~ sqrt(c) u; a trajectory merely
    # passing through the tail window on its way to a zero crossing is far
    # steeper, so the slope cap below separates the two
    slope_cap = 4.0 * math.sqrt(c)
    u[0] = s
    # series start across the removable u'/r singularity:
    # u = s + c2 r^2 + c4 r^4 with 4 c2 = F(s), 16 c4 = F'(s) c2
    f0 = c * (s - abs(s) ** q * s)
    c2 = 0.25 * f0
    c4 = c2 * c * (1.0 - (q + 1.0) * abs(s) ** q) / 16.0
    u[1] = s + c2 * h * h + c4 * h ** 4
    v[1] = 2.0 * c2 * h + 4.0 * c4 * h ** 3

    reached_tail = False
    # deep mode accepts the tail threshold anywhere past a few decay lengths;
    # the slope test is for classification shots, where it stops plunging
    # trajectories from being mistaken for decaying ones
    r_tail_min = 4.0 / math.sqrt(c)
    if v[1] > 0.0 and u[1] < 1.0:
        # rising below the equilibrium right away (s < 1): can never decay
        return _TURNED, 1, 0.0, u, v

    hit = -1
    stop = n - 1
    event_r = 0.0
    for i in range(1, n - 1):
        r = i * h
        ui = u[i]
        vi = v[i]
        k1u = vi
        k1v = c * (ui - abs(ui) ** q * ui) - vi / r
        rm = r + 0.5 * h
        u2 = ui + 0.5 * h * k1u
        v2 = vi + 0.5 * h * k1v
        k2u = v2
        k2v = c * (u2 - abs(u2) ** q * u2) - v2 / rm
        u3 = ui + 0.5 * h * k2u
        v3 = vi + 0.5 * h * k2v
        k3u = v3
        k3v = c * (u3 - abs(u3) ** q * u3) - v3 / rm
        rp = r + h
        u4 = ui + h * k3u
        v4 = vi + h * k3v
        k4u = v4
        k4v = c * (u4 - abs(u4) ** q * u4) - v4 / rp
        un = ui + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        vn = vi + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

        if not (np.isfinite(un) and np.isfinite(vn)):
            hit = _NONFINITE
            stop = i
            break
        if un <= 0.0:
            # cut before the crossing; estimate the crossing radius linearly
            hit = _CROSSED
            stop = i
            event_r = r + h * ui / (ui - un)
            break
        u[i + 1] = un
        v[i + 1] = vn
        if vn < 0.0 and un < tail_abs:
            if deep:
                if rp >= r_tail_min:
                    reached_tail = True
            elif -vn < slope_cap * un:
                return _DECAYED, i + 1, 0.0, u, v
        if vn > 0.0 and un < 1.0:
            hit = _TURNED
            stop = i
            break

    if deep and reached_tail:
        # tail reached the threshold before the trajectory misbehaved
        for j in range(stop + 1, n):
            u[j] = 0.0
            v[j] = 0.0
        return _DECAYED, stop, 0.0, u, v
    if hit == _CROSSED:
        return _CROSSED, stop, event_r, u, v
    if hit == _TURNED:
        return _TURNED, stop, 0.0, u, v
    if hit == _NONFINITE:
        for j in range(stop, n):
            u[j] = 0.0
            v[j] = 0.0
        return _NONFINITE, stop, 0.0, u, v
    return _NO_DECAY, n - 1, 0.0, u, v


def _check_q(q, include_two):
    hi_ok = q <= 2.0 if include_two else q < 2.0
    if not (np.isfinite(q) and 0.0 < q and hi_ok):
        rng = "(0, 2]" if include_two else "(0, 2)"
        raise ParameterError(f"exponent q must lie in {rng}, got {q}")


def shoot(q, s, grid=DEFAULT_GRID, deep=False):
    """Integrate one trajectory and classify it.

    deep=True keeps integrating below the tail threshold to harvest as much
    clean tail as possible (used for the final profile after bisection).
    """
    _check_q(q, include_two=True)
    if not (np.isfinite(s) and s > 0):
        raise ParameterError(f"initial amplitude must be positive, got {s}")
    status, stop, event_r, u, v = _shoot_kernel(
        float(q), float(s), grid.h, grid.n, TAIL_TOL * s, deep
    )
    if status == _DECAYED:
        profile = RadialProfile(grid, u, float(q), float(s), derivative=v)
        return ShotOutcome("decayed", profile=profile)
    if status == _CROSSED:
        return ShotOutcome("crossed_zero", crossing_radius=event_r)
    diag = {_TURNED: "turned_up", _NONFINITE: "non_finite", _NO_DECAY: "no_decay_at_rmax"}
    return ShotOutcome("non_decaying", diagnostic=diag[status])


def radial_integral(grid, samples):
    """2*pi * int samples(r) r dr by composite Simpson."""
    r = grid.nodes
    return 2.0 * math.pi * simpson(samples * r, x=r)


def profile_mass(profile):
    return radial_integral(profile.grid, profile.values**2)


def profile_kinetic(profile):
    return radial_integral(profile.grid, profile.slope() ** 2)


def profile_power_integral(profile, p):
    return radial_integral(profile.grid, np.abs(profile.values) ** p)


def record_from_profile(profile):
    """Populate integrals and derived constants for a decayed profile."""
    q = profile.q
    mass = profile_mass(profile)
    kinetic = profile_kinetic(profile)
    interaction = profile_power_integral(profile, q + 2.0)
    if min(mass, kinetic, interaction) <= 0:
        raise ConsistencyError("ground-state integrals must be positive")
    aq_star = mass ** (q / 2.0)
    gn_constant = (q + 2.0) / (2.0 * aq_star)
    flags = []
    try:
        delta_hat = decay_rate_fit(profile)
    except ParameterError:
        delta_hat = math.nan
        flags.append("decay_window_too_short")
    rec = GroundStateRecord(
        profile=profile,
        mass=mass,
        kinetic=kinetic,
        interaction=interaction,
        aq_star=aq_star,
        gn_constant=gn_constant,
        decay_rate=delta_hat,
        flags=tuple(flags),
    )
    r1, r2 = pohozaev_residuals(rec)
    if max(r1, r2) > POHOZAEV_FLAG_TOL:
        rec = replace(rec, flags=rec.flags + ("pohozaev_residual_above_threshold",))
    return rec


def find_ground_state(q, tol_s=0.0, grid=DEFAULT_GRID):
    """Bisect the shooting amplitude and build the converged record.

    The bracket starts at [1.01, 10]: u = 1 is an exact non-decaying solution,
    so the ground-state amplitude lies above 1; the upper end is expanded
    geometrically (up to 1e3) until the trajectory crosses zero.  tol_s = 0
    bisects down to machine precision, which the tail needs: the amplitude
    error is amplified like e^r along the trajectory, and a loose tolerance
    contaminates the tail before it reaches the decay threshold.
    """
    _check_q(q, include_two=True)
    if tol_s < 0:
        raise ParameterError("tol_s must be non-negative")

    lo, hi = 1.01, 10.0
    out_lo = shoot(q, lo, grid)
    for _ in range(8):
        if not out_lo.crossed:
            break
        lo = 1.0 + (lo - 1.0) / 4.0
        out_lo = shoot(q, lo, grid)
    if out_lo.crossed:
        raise BracketError(f"q={q}: no non-crossing amplitude found above 1")
    while not shoot(q, hi, grid).crossed:
        hi *= 2.0
        if hi > 1.0e3:
            raise BracketError(f"q={q}: no zero-crossing amplitude found below 1e3")

    while hi - lo > tol_s:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if shoot(q, mid, grid).crossed:
            hi = mid
        else:
            lo = mid

    s_star = 0.5 * (lo + hi)
    final = shoot(q, s_star, grid, deep=True)
    if not final.decayed:
        raise GpqError(
            f"q={q}: trajectory at the bisected amplitude did not decay below "
            f"{TAIL_TOL:g}*u(0); enlarge r_max or tighten tol_s"
        )
    return record_from_profile(final.profile)


def pohozaev_residuals(rec):
    """Relative defects of the two ground-state integral identities.

    For the exact profile, kinetic = mass and mass = (2/(q+2)) * interaction.
    """
    r1 = abs(rec.kinetic - rec.mass) / rec.mass
    r2 = abs(rec.mass - 2.0 / (rec.q + 2.0) * rec.interaction) / rec.mass
    return r1, r2


def gn_equality_check(rec):
    """Relative defect of the interpolation inequality at the ground state.

    Equality int u^{q+2} = C_q (int |grad u|^2)^{q/2} int u^2 holds exactly at
    the profile with C_q = (q+2)/(2 aq_star).
    """
    predicted = rec.gn_constant * rec.kinetic ** (rec.q / 2.0) * rec.mass
    return abs(rec.interaction - predicted) / rec.interaction


def decay_rate_fit(profile, window=(1e-12, 1e-2)):
    """Fit the tail exponent: slope of log u + (1/2) log r against r, negated.

    The 1/2 log r term removes the algebraic prefactor of the modified-Bessel
    asymptotics, leaving a straight line with slope -delta.  Nodes whose
    pointwise rate -(u'/u + 1/(2r)) strays far from the window median are
    dropped first: shooting instability makes the last decade of the tail
    nose-dive, which would otherwise bias the fit.
    """
    r = profile.grid.nodes
    u = profile.values
    lo, hi = window
    sel = (u > lo) & (u < hi) & (r > 0)
    if np.count_nonzero(sel) < 20:
        raise ParameterError("tail window has fewer than 20 usable nodes")
    rate = -(profile.slope()[sel] / u[sel] + 0.5 / r[sel])
    med = np.median(rate)
    clean = np.abs(rate - med) < 0.3 * abs(med)
    if np.count_nonzero(clean) < 20:
        raise ParameterError("tail window has fewer than 20 slope-consistent nodes")
    rs = r[sel][clean]
    y = np.log(u[sel][clean]) + 0.5 * np.log(rs)
    slope = np.polyfit(rs, y, 1)[0]
    return -slope


def h1_distance(p1, p2):
    """H1 norm of the difference of two profiles on a shared grid."""
    if p1.grid != p2.grid:
        raise ParameterError("profiles must share a grid")
    du = p1.values - p2.values
    dv = p1.slope() - p2.slope()
    return math.sqrt(radial_integral(p1.grid, du**2) + radial_integral(p1.grid, dv**2))


def phi_to_q_convergence(q_schedule, grid=DEFAULT_GRID, tol_s=0.0, records=None):
    """Table of (q, H1 distance to the critical profile, |aq_star - a_star|).

    All ground states are solved on the common grid.  records may carry
    precomputed entries keyed by q (the q = 2 reference included) to avoid
    re-solving.
    """
    records = dict(records or {})

    def get(qv):
        if qv not in records:
            records[qv] = find_ground_state(qv, tol_s=tol_s, grid=grid)
        return records[qv]

    ref = get(2.0)
    rows = []
    for qv in q_schedule:
        rec = get(qv)
        rows.append((qv, h1_distance(rec.profile, ref.profile), abs(rec.aq_star - ref.aq_star)))
    return rows


def profile_evaluator(profile):
    """Monotone-cubic interpolant of the profile, zero beyond the grid.

    Shape preservation keeps the interpolated tail non-negative, which matters
    because fractional powers of the samples are taken downstream.
    """
    interp = PchipInterpolator(profile.grid.nodes, profile.values, extrapolate=False)

    def evaluate(radii):
        radii = np.asarray(radii, dtype=float)
        out = interp(np.clip(radii, 0.0, profile.grid.r_max))
        out = np.where(radii > profile.grid.r_max, 0.0, out)
        return np.maximum(out, 0.0)

    return evaluate


def record_to_dict(rec):
    return {
        "q": rec.q,
        "shoot_param": rec.shoot_param,
        "mass": rec.mass,
        "kinetic": rec.kinetic,
        "interaction": rec.interaction,
        "aq_star": rec.aq_star,
        "gn_constant": rec.gn_constant,
        "decay_rate": rec.decay_rate,
        "grid": {"r_max": rec.profile.grid.r_max, "n": rec.profile.grid.n},
    }


def save_record(rec, directory, stem):
    """Write the record JSON plus a two-column (r, u) CSV for the profile."""
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / f"{stem}.json"
    csv_path = directory / f"{stem}.csv"
    with open(json_path, "w") as fh:
        json.dump(record_to_dict(rec), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "u"])
        for r, u in zip(rec.profile.grid.nodes, rec.profile.values):
            writer.writerow([f"{r:.17g}", f"{u:.17g}"])
    return [json_path, csv_path]
