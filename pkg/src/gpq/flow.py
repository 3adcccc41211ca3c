"""Constrained minimization by normalized gradient flow.

Each step is u <- normalize(clip(u - dt * (-lap u + V u - a u^{q+1}))), with
dt halved whenever the energy would increase and grown gently after a run of
accepted steps.  Convergence is declared on the PDE residual of the
Euler-Lagrange equation, not on an energy stall, so a converged result
certifies stationarity directly.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConsistencyError, DomainTooSmallError, FlowDivergenceError,
                     ParameterError)
from .field2d import (EnergyBreakdown, Field2D, embed_radial, gaussian_field,
                      laplacian, normalize)
from .free_energy import FreeProblemParams, tilde_minimizer_profile
from .potentials import PotentialSpec, potential_field


@dataclass(frozen=True)
class SeedSpec:
    """Initial-field recipe: a Gaussian bump or the embedded free minimizer."""

    kind: str = "gaussian"        # "gaussian" | "free_profile"
    center: tuple = (0.0, 0.0)
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "free_profile"):
            raise ParameterError(f"unknown seed kind {self.kind!r}")
        if self.width <= 0:
            raise ParameterError("seed width must be positive")


@dataclass(frozen=True)
class FlowConfig:
    dt: float | None = None        # None -> 0.1 h^2
    tol_residual: float = 1e-6
    max_iter: int = 80000
    stepper: str = "explicit"      # "explicit" | "dst" (kinetic solved implicitly)
    seed: SeedSpec | None = None   # recipe used by CLI runs; the flow takes a field

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ParameterError("dt must be positive")
        if self.tol_residual <= 0:
            raise ParameterError("tol_residual must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if self.stepper not in ("explicit", "dst"):
            raise ParameterError(f"unknown stepper {self.stepper!r}")


@dataclass(frozen=True, eq=False)
class MinimizationResult:
    field: Field2D
    energy: float
    mu: float
    residual: float
    iterations: int
    converged: bool
    max_point: tuple
    max_value: float
    breakdown: EnergyBreakdown
    energy_trace: np.ndarray = field(repr=False, default=None)


def make_seed(spec, grid, record=None, params=None):
    """Realize a seed recipe as a normalized non-negative field."""
    if spec.kind == "gaussian":
        return gaussian_field(grid, center=spec.center, width=spec.width)
    rescaled = tilde_minimizer_profile(record, params)
    return normalize(embed_radial(rescaled, grid, center=spec.center))


def _as_potential_field(V, grid):
    if isinstance(V, PotentialSpec):
        return potential_field(V, grid)
    if isinstance(V, Field2D):
        if V.grid != grid:
            raise ParameterError("potential grid does not match the seed grid")
        return V
    raise ParameterError("V must be a PotentialSpec or a Field2D")


def normalized_gradient_flow(seed, V, a, q, cfg=FlowConfig(), verbose=False):
    """Run the flow from a seed field to a stationary point of the energy.

    Two steppers share the adaptive-dt / monotone-energy logic:

    - "explicit": u <- normalize(clip(u - dt grad)).  The potential entering
      the step is capped at 4/h^2: steep multi-well products reach enormous
      values near the box corners, which would collapse the explicit stable
      step, while any region with V beyond the stencil scale is classically
      forbidden anyway (the state there is zero to machine precision).
      Reported energies and the final residual always use the true V.
    - "dst": the stencil Laplacian is inverted exactly per step through its
      sine-transform diagonalization, with the remaining terms explicit and
      shifted by the running Rayleigh multiplier.  The shift makes the fixed
      point solve the same discrete Euler-Lagrange equation with no dt bias,
      and dt is then limited by the reaction terms instead of h^2, which is
      what makes zoomed (fine-h) grids affordable.
    """
    if not (np.isfinite(a) and a >= 0):
        raise ParameterError(f"coupling a must be non-negative, got {a}")
    if not (np.isfinite(q) and 0.0 < q < 2.0):
        raise ParameterError(f"exponent q must lie in (0, 2), got {q}")

    grid = seed.grid
    h = grid.h
    Vfull = _as_potential_field(V, grid).values
    use_dst = cfg.stepper == "dst"
    Vcap = Vfull if use_dst else np.minimum(Vfull, 4.0 / h**2)
    dt = cfg.dt if cfg.dt is not None else 0.1 * h**2
    if use_dst:
        from scipy.fft import dstn, idstn

        k = np.arange(1, grid.n + 1)
        lam1 = (4.0 / h**2) * np.sin(k * math.pi / (2.0 * (grid.n + 1))) ** 2
        stencil_eigs = lam1[:, None] + lam1[None, :]

    # trapezoid weights as a single dot-product mask
    w1 = np.ones(grid.n)
    w1[0] = w1[-1] = 0.5
    w2 = np.outer(w1, w1) * h**2

    def quad(arr):
        return float(np.vdot(w2, arr))

    def dirichlet_form(arr):
        padded = np.pad(arr, 1)
        dx = np.diff(padded[:, 1:-1], axis=0)
        dy = np.diff(padded[1:-1, :], axis=1)
        return float(np.sum(dx * dx) + np.sum(dy * dy))

    def neg_lap(arr):
        padded = np.pad(arr, 1)
        return -(
            padded[2:, 1:-1] + padded[:-2, 1:-1] + padded[1:-1, 2:] + padded[1:-1, :-2]
            - 4.0 * arr
        ) / h**2

    u = np.clip(seed.values, 0.0, None)
    u = u / math.sqrt(quad(u * u))
    pw = u ** (q + 1.0)

    def capped_energy(arr, arr_pow):
        kin = dirichlet_form(arr)
        pot = quad(Vcap * arr * arr)
        itr = 2.0 * a / (q + 2.0) * quad(arr_pow * arr)
        # slack scale: the total is a near-cancellation of these, and rounding
        # noise lives at the component magnitude, not the total's
        return kin + pot - itr, kin + pot + itr

    e_now, e_scale = capped_energy(u, pw)
    trace = [e_now]
    halvings = 0
    accepts_in_row = 0
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iter + 1):
        grad = neg_lap(u) + Vcap * u - a * pw
        mu_r = quad(u * grad)
        res = math.sqrt(quad((grad - mu_r * u) ** 2))
        if res < cfg.tol_residual:
            converged = True
            iterations -= 1
            break
        reaction = Vcap * u - a * pw - mu_r * u if use_dst else None
        while True:
            if use_dst:
                rhs = dstn(u - dt * reaction, type=1, norm="ortho")
                trial = idstn(rhs / (1.0 + dt * stencil_eigs), type=1, norm="ortho")
                trial = np.clip(trial, 0.0, None)
            else:
                trial = np.clip(u - dt * grad, 0.0, None)
            trial /= math.sqrt(quad(trial * trial))
            trial_pow = trial ** (q + 1.0)
            e_new, new_scale = capped_energy(trial, trial_pow)
            if e_new <= e_now + 1e-12 * max(1.0, e_scale):
                break
            dt *= 0.5
            halvings += 1
            if halvings > 20:
                raise FlowDivergenceError(
                    f"energy still increasing after {halvings} dt halvings (dt={dt:g})"
                )
        halvings = 0
        u = trial
        pw = trial_pow
        e_now = e_new
        e_scale = new_scale
        trace.append(e_now)
        accepts_in_row += 1
        if accepts_in_row >= 10:
            dt *= 1.1
            accepts_in_row = 0
        if verbose and iterations % 1000 == 0:
            print(f"  iter {iterations}: E={e_now:.8f} res={res:.3e} dt={dt:.2e}")

    out = Field2D(grid, u)
    kin = dirichlet_form(u)
    pot = quad(Vfull * u * u)
    inter = quad(pw * u)
    total = kin + pot - 2.0 * a / (q + 2.0) * inter
    breakdown = EnergyBreakdown(kinetic=kin, potential=pot, interaction=inter, total=total)
    grad_true = neg_lap(u) + Vfull * u - a * pw
    mu_r = quad(u * grad_true)
    residual = math.sqrt(quad((grad_true - mu_r * u) ** 2))
    mu = total - q * a / (q + 2.0) * inter
    max_point, max_value = locate_max(out)
    return MinimizationResult(
        field=out,
        energy=total,
        mu=mu,
        residual=residual,
        iterations=iterations,
        converged=converged,
        max_point=max_point,
        max_value=max_value,
        breakdown=breakdown,
        energy_trace=np.asarray(trace),
    )


def lagrange_multiplier(res, a, q):
    """Multiplier from the energy formula, cross-checked against Rayleigh.

    Formula: mu = d - (q a/(q+2)) * interaction.  The Rayleigh path evaluates
    <u, (-lap + V) u> - a int u^{q+2} with the stencil Laplacian under the
    trapezoid pairing, an independent discretization of the kinetic term.
    """
    mu_formula = res.energy - q * a / (q + 2.0) * res.breakdown.interaction
    f = res.field
    h = f.grid.h
    w1 = np.ones(f.grid.n)
    w1[0] = w1[-1] = 0.5
    w2 = np.outer(w1, w1) * h**2
    kin_pairing = -float(np.vdot(w2, f.values * laplacian(f).values))
    mu_rayleigh = kin_pairing + res.breakdown.potential - a * res.breakdown.interaction
    scale = max(1.0, abs(mu_formula))
    if abs(mu_formula - mu_rayleigh) > 1e-4 * scale:
        raise ConsistencyError(
            f"multiplier cross-check mismatch: formula {mu_formula} vs Rayleigh {mu_rayleigh}"
        )
    return mu_formula


def locate_max(f):
    """Grid argmax refined by a quadratic fit on the 3x3 stencil."""
    n = f.grid.n
    idx = int(np.argmax(f.values))
    i, j = divmod(idx, n)
    if i in (0, n - 1) or j in (0, n - 1):
        raise DomainTooSmallError(
            f"field maximum sits on the boundary ring at node ({i}, {j})"
        )
    h = f.grid.h
    u0 = f.values[i, j]
    value = u0
    coords = []
    for (lo, hi), c0 in (((f.values[i - 1, j], f.values[i + 1, j]), f.grid.axis_x[i]),
                         ((f.values[i, j - 1], f.values[i, j + 1]), f.grid.axis_y[j])):
        d1 = 0.5 * (hi - lo)
        d2 = hi - 2.0 * u0 + lo
        offset = -d1 / d2 if d2 < 0 else 0.0
        offset = float(np.clip(offset, -0.5, 0.5))
        coords.append(c0 + offset * h)
        if d2 < 0:
            value += 0.5 * d1 * offset
    return (coords[0], coords[1]), float(value)


def local_maxima(f, frac=0.5):
    """Interior strict local maxima above frac * global max (uniqueness check)."""
    v = f.values
    core = v[1:-1, 1:-1]
    neighbors = [
        v[:-2, 1:-1], v[2:, 1:-1], v[1:-1, :-2], v[1:-1, 2:],
        v[:-2, :-2], v[:-2, 2:], v[2:, :-2], v[2:, 2:],
    ]
    is_max = np.ones_like(core, dtype=bool)
    for nb in neighbors:
        is_max &= core > nb
    is_max &= core > frac * np.max(v)
    ax, ay = f.grid.axis_x, f.grid.axis_y
    out = []
    for i, j in zip(*np.nonzero(is_max)):
        out.append(((ax[i + 1], ay[j + 1]), float(core[i, j])))
    return out


def l2_distance(f1, f2):
    """L2 distance between two fields on the same grid."""
    if f1.grid != f2.grid:
        raise ParameterError("fields must share a grid")
    h = f1.grid.h
    w1 = np.ones(f1.grid.n)
    w1[0] = w1[-1] = 0.5
    w2 = np.outer(w1, w1) * h**2
    d = f1.values - f2.values
    return math.sqrt(float(np.vdot(w2, d * d)))


def multi_seed_minimize(seeds, V, a, q, cfg=FlowConfig(), dedupe_distance=0.1):
    """Minimize from several seeds; keep one representative per distinct basin.

    Results closer than dedupe_distance in L2 are treated as the same
    minimizer and the lower-energy one is kept.  GPQ_THREADS > 1 runs the
    independent flows concurrently; the result order stays deterministic.
    """
    if len(seeds) < 1:
        raise ParameterError("need at least one seed")
    threads = int(os.environ.get("GPQ_THREADS", "1"))
    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda s: normalized_gradient_flow(s, V, a, q, cfg), seeds
            ))
    else:
        results = [normalized_gradient_flow(s, V, a, q, cfg) for s in seeds]

    kept = []
    for res in sorted(results, key=lambda r: r.energy):
        if all(l2_distance(res.field, other.field) > dedupe_distance for other in kept):
            kept.append(res)
    return kept
