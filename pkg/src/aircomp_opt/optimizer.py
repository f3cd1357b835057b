"""Discriminant-gain maximization by successive convex approximation.

For one feature pair the design variables are the real beamformer half
``f_hat``, per-device steering powers ``c`` and per-class-pair gain
variables ``alpha``.  The feasible set couples them through

* power:   ``c_k^2 <= R_k(f_hat) = 2 p_hat_k |f_hat . h_k|^2``
* gains:   ``sum_k c_k^2 eps_k^2 + noise ||f_hat||^2 + sig2 (sum c)^2
             <= Q = (sum c)^2 g / alpha``

Both right-hand sides are convex, so replacing them by first-order Taylor
expansions at a feasible reference yields an inner convex program whose
solution is feasible for the original problem and never decreases the
objective.  Iterating to a fixed point lands on a KKT point; the resulting
normalized steering powers of power-inactive devices are inversely
proportional to their sensing noise, which `kkt_check` verifies.

The convex subproblems are second-order-cone representable and are solved
with cvxpy (CLARABEL, SCS fallback) through a compiled-problem cache.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import cvxpy as cp
import numpy as np

from .aircomp import TransceiverDesign, make_design, max_precoding_power
from .features import (
    FeatureStatistics,
    class_pairs,
    pair_weight,
    symbol_second_moment,
)

log = logging.getLogger(__name__)

ALPHA_FLOOR = 1e-10
DEGENERATE_ALPHA_TOL = 1e-12
NONMONOTONE_REL_TOL = 1e-6
INIT_POWER_BACKOFF = 1e-6


class SubproblemError(RuntimeError):
    """The convex subproblem solver failed or reported an unusable status."""


class DegenerateReferenceError(ValueError):
    """A reference point has gain variables too small to linearize."""


# ---------------------------------------------------------------------------
# Fixed data of one pair optimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GainProblem:
    """Immutable data of one feature-pair design problem."""

    channels: np.ndarray      # (K, N) complex
    eps2: np.ndarray          # (K,) sensing noise powers
    p_hat: np.ndarray         # (K,) precoding power caps
    noise_power: float        # channel noise power
    sigma2: np.ndarray        # (D,) feature variances of the pair dims
    sq_diffs: np.ndarray      # (P, D) squared centroid gaps per class pair
    weight: float             # class-pair averaging prefactor
    dims: tuple[int, ...]
    chan_outer: np.ndarray = field(init=False, repr=False)  # (K, N, N) Re(h h^H)

    def __post_init__(self):
        h = np.asarray(self.channels, dtype=complex)
        object.__setattr__(self, "channels", h)
        object.__setattr__(self, "eps2", np.asarray(self.eps2, dtype=float).ravel())
        object.__setattr__(self, "p_hat", np.asarray(self.p_hat, dtype=float).ravel())
        object.__setattr__(self, "sigma2", np.asarray(self.sigma2, dtype=float).ravel())
        object.__setattr__(self, "sq_diffs", np.atleast_2d(np.asarray(self.sq_diffs, dtype=float)))
        outer = np.real(h[:, :, None] * h[:, None, :].conj())
        object.__setattr__(self, "chan_outer", outer)

    @property
    def num_devices(self) -> int:
        return self.channels.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.channels.shape[1]

    def r(self, f_hat) -> np.ndarray:
        """Steering-power caps ``2 p_hat_k |f_hat . h_k|^2`` per device."""
        f_hat = np.asarray(f_hat, dtype=float)
        return 2.0 * self.p_hat * np.einsum("i,kij,j->k", f_hat, self.chan_outer, f_hat)

    def r_grad(self, f_hat) -> np.ndarray:
        """Gradient of ``r`` with respect to the beamformer, per device."""
        f_hat = np.asarray(f_hat, dtype=float)
        return 4.0 * self.p_hat[:, None] * np.einsum("kij,j->ki", self.chan_outer, f_hat)

    def sigma_hat2(self, c, f_hat) -> np.ndarray:
        """Received feature variance per pair dimension."""
        c = np.asarray(c, dtype=float)
        f_hat = np.asarray(f_hat, dtype=float)
        return (
            self.sigma2 * c.sum() ** 2
            + float((c**2 * self.eps2).sum())
            + self.noise_power * float(f_hat @ f_hat)
        )

    def alpha_exact(self, c, f_hat) -> np.ndarray:
        """Per-class-pair gains at a design: the tight values of the gain
        variables.  Requires a nonzero design (positive received variance)."""
        var = self.sigma_hat2(c, f_hat)
        if np.any(var <= 0):
            raise ValueError("all-zero design: received variance is zero")
        return np.asarray(c, dtype=float).sum() ** 2 * self.sq_diffs / var

    def q(self, c, alpha) -> np.ndarray:
        """Coupling function ``(sum c)^2 g / alpha`` per class pair and dim."""
        alpha = np.asarray(alpha, dtype=float)
        return np.asarray(c, dtype=float).sum() ** 2 * self.sq_diffs / alpha

    def gain(self, c, f_hat) -> float:
        """Discriminant gain of the pair at a design."""
        return self.weight * float(self.alpha_exact(c, f_hat).sum())


def build_gain_problem(
    stats: FeatureStatistics,
    channels,
    profiles,
    noise_power: float,
    dims,
) -> GainProblem:
    """Assemble the fixed data of one pair optimization from the models."""
    dims = tuple(int(m) for m in dims)
    if not 1 <= len(dims) <= 2:
        raise ValueError("dims must hold one or two feature indices")
    channels = np.asarray(channels, dtype=complex)
    if channels.shape[0] != len(profiles):
        raise ValueError("one channel row per device required")
    eps2 = np.array([p.sensing_noise_power for p in profiles])
    p_hat = np.array(
        [
            max_precoding_power(p, symbol_second_moment(stats, p.sensing_noise_power, dims))
            for p in profiles
        ]
    )
    pairs = class_pairs(stats.num_classes)
    sq_diffs = np.array(
        [
            [(stats.centroids[l, m] - stats.centroids[lp, m]) ** 2 for m in dims]
            for (l, lp) in pairs
        ]
    )
    return GainProblem(
        channels=channels,
        eps2=eps2,
        p_hat=p_hat,
        noise_power=float(noise_power),
        sigma2=stats.variances[list(dims)],
        sq_diffs=sq_diffs,
        weight=pair_weight(stats.num_classes),
        dims=dims,
    )


# ---------------------------------------------------------------------------
# Reference points
# ---------------------------------------------------------------------------

@dataclass
class ScaState:
    """One accepted iterate: design variables, objective and its history."""

    f_hat: np.ndarray
    c: np.ndarray
    alpha: np.ndarray
    objective: float
    iteration: int
    trace: list[float]


def dominant_direction(problem: GainProblem) -> np.ndarray:
    """Unit real beamformer maximizing the summed channel strengths
    ``sum_k |f . h_k|^2``; deterministic sign."""
    msum = problem.chan_outer.sum(axis=0)
    if np.trace(msum) <= 0.0:
        raise ValueError("all channels are zero")
    _, vecs = np.linalg.eigh(msum)
    return _fix_sign(vecs[:, -1])


def _fix_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _reference_from_direction(problem: GainProblem, f_dir: np.ndarray) -> ScaState:
    caps = np.sqrt(np.clip(problem.r(f_dir), 0.0, None))
    c = caps * (1.0 - INIT_POWER_BACKOFF)
    if c.sum() <= 0.0:
        raise ValueError("beamformer direction nulls every device")
    alpha = problem.alpha_exact(c, f_dir)
    objective = problem.weight * float(alpha.sum())
    return ScaState(
        f_hat=np.array(f_dir, dtype=float),
        c=c,
        alpha=alpha,
        objective=objective,
        iteration=0,
        trace=[objective],
    )


def initialize_reference(problem: GainProblem) -> ScaState:
    """Feasible starting point: dominant-channel beamformer, full steering
    powers with a tiny backoff, and tight gain variables."""
    return _reference_from_direction(problem, dominant_direction(problem))


def state_feasibility(problem: GainProblem, state: ScaState) -> dict:
    """Relative violations of the power and gain-ratio constraints.

    Both are <= 0 at a feasible state (up to float noise); tests pin 1e-7.
    """
    caps = problem.r(state.f_hat)
    scale = np.maximum(caps, 1e-30)
    power = float(np.max((state.c**2 - caps) / scale))
    exact = problem.alpha_exact(state.c, state.f_hat)
    ratio = float(np.max((state.alpha - exact) / np.maximum(exact, 1e-30)))
    return {"power": power, "ratio": ratio}


# ---------------------------------------------------------------------------
# Convex subproblem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexSubproblem:
    """First-order Taylor data of the two convex right-hand sides, anchored
    at a feasible reference; exact there and an under-estimator everywhere."""

    problem: GainProblem
    ref_f_hat: np.ndarray
    ref_c: np.ndarray
    ref_alpha: np.ndarray
    r_grad: np.ndarray    # (K, N)
    r_const: np.ndarray   # (K,)
    q_const: np.ndarray   # (P, D), zero on inactive entries
    q_cgrad: np.ndarray   # (P, D)
    q_agrad: np.ndarray   # (P, D), <= 0
    active: np.ndarray    # (P, D) bool: class pairs with separated centroids

    def r_hat(self, f_hat) -> np.ndarray:
        """Linearized steering-power caps at ``f_hat``."""
        return self.r_grad @ np.asarray(f_hat, dtype=float) + self.r_const

    def q_hat(self, c, alpha) -> np.ndarray:
        """Linearized coupling function at ``(c, alpha)`` (active entries)."""
        total_c = float(np.asarray(c, dtype=float).sum())
        return self.q_const + self.q_cgrad * total_c + self.q_agrad * np.asarray(alpha)


def build_subproblem(problem: GainProblem, ref: ScaState) -> ConvexSubproblem:
    """Linearize the convex right-hand sides at the reference point."""
    f0 = np.asarray(ref.f_hat, dtype=float)
    c0 = np.asarray(ref.c, dtype=float)
    a0 = np.asarray(ref.alpha, dtype=float)
    active = problem.sq_diffs > max(problem.sq_diffs.max(initial=0.0), 0.0) * 1e-12
    if np.any(a0[active] <= DEGENERATE_ALPHA_TOL):
        raise DegenerateReferenceError("reference gain variables below tolerance")
    a_safe = np.maximum(a0, ALPHA_FLOOR)
    sum_c0 = c0.sum()
    g = problem.sq_diffs
    q0 = np.where(active, sum_c0**2 * g / a_safe, 0.0)
    a_grad = np.where(active, -(sum_c0**2) * g / a_safe**2, 0.0)
    c_grad = np.where(active, 2.0 * sum_c0 * g / a_safe, 0.0)
    grad = problem.r_grad(f0)
    return ConvexSubproblem(
        problem=problem,
        ref_f_hat=f0,
        ref_c=c0,
        ref_alpha=a0,
        r_grad=grad,
        r_const=problem.r(f0) - grad @ f0,
        q_const=q0 - c_grad * sum_c0 - a_grad * a_safe,
        q_cgrad=c_grad,
        q_agrad=a_grad,
        active=active,
    )


class _Compiled:
    """One cvxpy problem compiled for a (devices, antennas, entries) shape.

    Solved in preconditioned variables: steering powers and gain variables
    are divided by reference scales and the coupling rows by the reference
    received variance, so the solver sees O(1) data at any SNR.
    """

    def __init__(self, k: int, n: int, e: int):
        self.f = cp.Variable(n)
        self.c = cp.Variable(k, nonneg=True)
        self.a = cp.Variable(e)
        self.r_grad = cp.Parameter((k, n))
        self.r_const = cp.Parameter(k)
        self.q_const = cp.Parameter(e)
        self.q_cgrad = cp.Parameter(e)
        self.q_agrad = cp.Parameter(e, nonpos=True)
        self.sigma2 = cp.Parameter(e, nonneg=True)
        self.eps2 = cp.Parameter(k, nonneg=True)
        self.noise = cp.Parameter(nonneg=True)
        self.alpha_floor = cp.Parameter(nonneg=True)
        total_c = cp.sum(self.c)
        sensing = cp.sum(cp.multiply(self.eps2, cp.square(self.c)))
        q_hat = self.q_const + self.q_cgrad * total_c + cp.multiply(self.q_agrad, self.a)
        margin = (
            q_hat
            - cp.multiply(self.sigma2, cp.square(total_c))
            - sensing
            - self.noise * cp.sum_squares(self.f)
        )
        constraints = [
            self.a >= self.alpha_floor,
            cp.square(self.c) <= self.r_grad @ self.f + self.r_const,
            margin >= 0,
        ]
        self.prob = cp.Problem(cp.Maximize(cp.sum(self.a)), constraints)


_COMPILED_CACHE: dict[tuple[int, int, int], _Compiled] = {}


def _compiled_for(k: int, n: int, e: int) -> _Compiled:
    key = (k, n, e)
    if key not in _COMPILED_CACHE:
        _COMPILED_CACHE[key] = _Compiled(k, n, e)
    return _COMPILED_CACHE[key]


def solve_subproblem(sub: ConvexSubproblem, solver: str | None = None):
    """Solve the inner convex program.

    Returns ``(f_hat, c, alpha, objective)`` where ``alpha`` carries the
    solver values on active entries and the pinned reference values
    elsewhere.  The objective is never below the reference objective (the
    reference itself is feasible), up to solver tolerance.  By default
    tries the interior-point solver and falls back to the high-precision
    first-order one; pass ``solver`` to force a single backend.
    """
    problem = sub.problem
    mask = sub.active
    e = int(mask.sum())
    if e == 0:
        return (
            sub.ref_f_hat.copy(),
            sub.ref_c.copy(),
            sub.ref_alpha.copy(),
            problem.weight * float(sub.ref_alpha.sum()),
        )
    comp = _compiled_for(problem.num_devices, problem.num_antennas, e)
    entry_dims = np.broadcast_to(np.arange(len(problem.sigma2)), mask.shape)[mask]

    # preconditioning scales, all derived from the (feasible) reference
    c_scale = float(np.sqrt(np.clip(problem.r(sub.ref_f_hat), 0.0, None)).max())
    c_scale = max(c_scale, 1e-300)
    a_scale = max(float(np.mean(sub.ref_alpha[mask])), ALPHA_FLOOR)
    row = float(np.max(problem.sigma_hat2(sub.ref_c, sub.ref_f_hat)))
    row = max(row, 1e-300)

    comp.r_grad.value = sub.r_grad / c_scale**2
    comp.r_const.value = sub.r_const / c_scale**2
    comp.q_const.value = sub.q_const[mask] / row
    comp.q_cgrad.value = sub.q_cgrad[mask] * c_scale / row
    comp.q_agrad.value = sub.q_agrad[mask] * a_scale / row
    comp.sigma2.value = problem.sigma2[entry_dims] * c_scale**2 / row
    comp.eps2.value = problem.eps2 * c_scale**2 / row
    comp.noise.value = problem.noise_power / row
    comp.alpha_floor.value = ALPHA_FLOOR / a_scale

    status = None
    for backend in (solver,) if solver else ("CLARABEL", "SCS"):
        with np.errstate(all="ignore"), warnings.catch_warnings():
            # reduced-accuracy solutions are handled by the caller's
            # monotone guard; cvxpy's advisory warning is just noise here
            warnings.simplefilter("ignore", UserWarning)
            try:
                if backend == "SCS":
                    comp.prob.solve(solver="SCS", eps=1e-10, max_iters=200_000)
                else:
                    comp.prob.solve(solver=backend)
                status = comp.prob.status
            except cp.error.SolverError:
                status = None
        if status in ("optimal", "optimal_inaccurate"):
            break
        log.debug("subproblem backend %s returned status %r", backend, status)
    if status not in ("optimal", "optimal_inaccurate"):
        raise SubproblemError(f"subproblem solver status {status!r}")
    alpha = np.array(sub.ref_alpha, dtype=float)
    alpha[mask] = np.asarray(comp.a.value, dtype=float) * a_scale
    objective = problem.weight * float(alpha.sum())
    return (
        np.asarray(comp.f.value, dtype=float).copy(),
        np.asarray(comp.c.value, dtype=float).copy() * c_scale,
        alpha,
        objective,
    )


# ---------------------------------------------------------------------------
# SCA driver
# ---------------------------------------------------------------------------

@dataclass
class ScaOptions:
    """Stopping rules and search controls for `sca_optimize`."""

    max_iter: int = 100
    rel_tol: float = 1e-5
    multi_start: bool = True
    on_iteration: Callable[[ConvexSubproblem, ScaState], None] | None = None


def _refine(problem: GainProblem, sub: ConvexSubproblem, f_new, c_new):
    """Exact-feasible point from a solver output: clip steering to the
    linearized caps (lower bounds of the true ones), renormalize the
    scale-invariant ray, and make the gain variables tight."""
    caps = np.sqrt(np.clip(sub.r_hat(f_new), 0.0, None))
    c_new = np.minimum(np.clip(c_new, 0.0, None), caps)
    norm = float(np.linalg.norm(f_new))
    if norm > 0.0:
        f_new = f_new / norm
        c_new = c_new / norm
    if c_new.sum() <= 0.0:
        return None
    alpha_new = problem.alpha_exact(c_new, f_new)
    return f_new, c_new, alpha_new, problem.weight * float(alpha_new.sum())


def _sca_from(problem: GainProblem, state: ScaState, options: ScaOptions) -> ScaState:
    for it in range(1, options.max_iter + 1):
        try:
            sub = build_subproblem(problem, state)
        except DegenerateReferenceError:
            break
        prev = state.objective
        f_new, c_new, _, _ = solve_subproblem(sub)
        candidate = _refine(problem, sub, f_new, c_new)
        if candidate is None or candidate[3] <= prev:
            # the subproblem optimum can never fall below the reference; a
            # regression means the solver lost accuracy, so retry once with
            # the high-precision fallback before declaring a stall
            try:
                f_new, c_new, _, _ = solve_subproblem(sub, solver="SCS")
                retry = _refine(problem, sub, f_new, c_new)
            except SubproblemError:
                retry = None
            if retry is not None and (candidate is None or retry[3] > candidate[3]):
                candidate = retry
        if candidate is None or candidate[3] <= prev:
            break
        f_new, c_new, alpha_new, obj_new = candidate
        state = ScaState(
            f_hat=f_new,
            c=c_new,
            alpha=alpha_new,
            objective=obj_new,
            iteration=it,
            trace=state.trace + [obj_new],
        )
        if options.on_iteration is not None:
            options.on_iteration(sub, state)
        if obj_new - prev < options.rel_tol * max(prev, 1e-30):
            break
    return state


def _candidate_directions(problem: GainProblem, multi_start: bool) -> list[np.ndarray]:
    dirs = [dominant_direction(problem)]
    if multi_start and problem.num_devices > 1:
        for k in range(problem.num_devices):
            block = problem.chan_outer[k]
            if np.trace(block) <= 0.0:
                continue
            _, vecs = np.linalg.eigh(block)
            cand = _fix_sign(vecs[:, -1])
            if all(abs(float(cand @ d)) < 1.0 - 1e-9 for d in dirs):
                dirs.append(cand)
    return dirs


def sca_optimize(
    problem: GainProblem,
    options: ScaOptions | None = None,
):
    """Maximize the pair's discriminant gain; returns (design, final state).

    Runs the monotone linearize-and-solve loop from the dominant-channel
    start and, with ``multi_start``, from each device's matched direction,
    keeping the best converged point.  Every accepted iterate is feasible
    for the original constraints and the objective trace never decreases.
    """
    options = options or ScaOptions()
    best: ScaState | None = None
    for f_dir in _candidate_directions(problem, options.multi_start):
        state = _sca_from(problem, _reference_from_direction(problem, f_dir), options)
        if best is None or state.objective > best.objective:
            best = state
    design = make_design(best.f_hat, best.c, problem.channels)
    return design, best


# ---------------------------------------------------------------------------
# KKT diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KktDiagnostics:
    """Multiplier estimates and stationarity residuals at a converged state.

    ``normalized_steering`` is ``c / sum(c)``; over power-inactive devices
    its product with the sensing noise power is constant at a KKT point,
    reported through ``inactive_products`` and their relative ``spread``.
    """

    beta: np.ndarray                 # (K,) power-constraint multipliers
    lam: np.ndarray                  # (P, D) gain-constraint multipliers
    residual_c: np.ndarray           # (K,) scaled stationarity residuals
    residual_alpha: np.ndarray       # (P, D)
    residual_f: np.ndarray           # (N,)
    max_residual: float
    satisfied: bool
    active: np.ndarray               # (K,) power constraint active flags
    comp_slack: np.ndarray           # (K,) |beta_k (c_k^2 - R_k)|
    normalized_steering: np.ndarray  # (K,)
    inactive_products: np.ndarray
    spread: float                    # max |p - mean| / mean over inactive, nan if < 2


KKT_RESIDUAL_TOL = 1e-4
ACTIVE_SLACK_REL_TOL = 1e-6


def kkt_check(
    problem: GainProblem,
    state: ScaState,
    residual_tol: float = KKT_RESIDUAL_TOL,
) -> KktDiagnostics:
    """Estimate Lagrange multipliers by nonnegative least squares on the
    stationarity system and report scaled residuals and structure checks."""
    from scipy.optimize import nnls

    c = np.asarray(state.c, dtype=float)
    f = np.asarray(state.f_hat, dtype=float)
    alpha = np.asarray(state.alpha, dtype=float)
    k_dev = problem.num_devices
    n_ant = problem.num_antennas
    sum_c = c.sum()
    caps = problem.r(f)
    slack = caps - c**2
    active = slack <= ACTIVE_SLACK_REL_TOL * np.maximum(caps, 1e-30)

    mask = (problem.sq_diffs > 0) & (alpha > 10.0 * ALPHA_FLOOR)
    entries = np.argwhere(mask)
    n_e = entries.shape[0]
    g_e = problem.sq_diffs[mask]
    a_e = alpha[mask]
    sig_e = problem.sigma2[entries[:, 1]]
    c_used = c > 1e-12 * max(c.max(initial=0.0), 1.0)
    # complementary slackness: only active power constraints carry a multiplier
    beta_cols = np.nonzero(active)[0]
    n_b = beta_cols.shape[0]

    rows = []
    rhs = []
    # steering-power stationarity, one row per device with nonzero steering
    for k in np.nonzero(c_used)[0]:
        beta_coeff = np.zeros(n_b)
        if active[k]:
            beta_coeff[np.searchsorted(beta_cols, k)] = c[k]
        lam_coeff = c[k] * problem.eps2[k] + sum_c * (sig_e - g_e / a_e)
        rows.append(np.concatenate([beta_coeff, lam_coeff]))
        rhs.append(0.0)
    # gain-variable stationarity pins the lambda block
    for i in range(n_e):
        lam_coeff = np.zeros(n_e)
        lam_coeff[i] = sum_c**2 * g_e[i] / a_e[i] ** 2
        rows.append(np.concatenate([np.zeros(n_b), lam_coeff]))
        rhs.append(problem.weight)
    # beamformer stationarity
    grad_r = problem.r_grad(f)
    for i in range(n_ant):
        beta_coeff = -grad_r[beta_cols, i]
        lam_coeff = np.full(n_e, 2.0 * problem.noise_power * f[i])
        rows.append(np.concatenate([beta_coeff, lam_coeff]))
        rhs.append(0.0)

    a_mat = np.asarray(rows)
    b_vec = np.asarray(rhs)
    scales = np.maximum(np.abs(a_mat).max(axis=1), np.abs(b_vec))
    scales = np.maximum(scales, 1e-30)
    x, _ = nnls(a_mat / scales[:, None], b_vec / scales)
    beta = np.zeros(k_dev)
    beta[beta_cols] = x[:n_b]
    lam_flat = x[n_b:]
    residual = (a_mat @ x - b_vec) / scales

    n_c = int(c_used.sum())
    residual_c = np.zeros(k_dev)
    residual_c[np.nonzero(c_used)[0]] = residual[:n_c]
    residual_alpha = np.zeros_like(alpha)
    residual_alpha[mask] = residual[n_c : n_c + n_e]
    residual_f = residual[n_c + n_e :]
    max_residual = float(np.max(np.abs(residual), initial=0.0))

    lam = np.zeros_like(alpha)
    lam[mask] = lam_flat
    c_norm = c / sum_c if sum_c > 0 else np.zeros_like(c)
    eligible = (~active) & c_used & (problem.eps2 > 0)
    products = c_norm[eligible] * problem.eps2[eligible]
    if products.size >= 2:
        spread = float(np.max(np.abs(products - products.mean())) / products.mean())
    else:
        spread = float("nan")
    return KktDiagnostics(
        beta=beta,
        lam=lam,
        residual_c=residual_c,
        residual_alpha=residual_alpha,
        residual_f=residual_f,
        max_residual=max_residual,
        satisfied=max_residual <= residual_tol,
        active=active,
        comp_slack=np.abs(beta * (c**2 - caps)),
        normalized_steering=c_norm,
        inactive_products=products,
        spread=spread,
    )


# ---------------------------------------------------------------------------
# Baseline designs
# ---------------------------------------------------------------------------

def baseline_random(problem: GainProblem, rng: np.random.Generator) -> TransceiverDesign:
    """Beamformer uniform on the unit sphere, steering powers at their caps."""
    v = rng.standard_normal(problem.num_antennas)
    norm = float(np.linalg.norm(v))
    while norm == 0.0:
        v = rng.standard_normal(problem.num_antennas)
        norm = float(np.linalg.norm(v))
    f_hat = v / norm
    c = np.sqrt(np.clip(problem.r(f_hat), 0.0, None))
    return make_design(f_hat, c, problem.channels)


def baseline_mmse_centroid(problem: GainProblem) -> TransceiverDesign:
    """Channel-equalizing design: equal steering powers for all devices,
    beamformer picked from matched-direction candidates to maximize the
    weakest channel strength, power set by the weakest device's cap."""
    candidates = [dominant_direction(problem)]
    for k in range(problem.num_devices):
        block = problem.chan_outer[k]
        if np.trace(block) > 0.0:
            _, vecs = np.linalg.eigh(block)
            candidates.append(_fix_sign(vecs[:, -1]))
    best_f, best_score = None, -1.0
    for cand in candidates:
        score = float(np.min(np.einsum("i,kij,j->k", cand, problem.chan_outer, cand)))
        if score > best_score:
            best_f, best_score = cand, score
    caps = np.sqrt(np.clip(problem.r(best_f), 0.0, None))
    level = float(caps.min())
    if level == 0.0:
        log.warning("equalized baseline degenerate: a device is nulled")
    c = np.full(problem.num_devices, level)
    return make_design(best_f, c, problem.channels)
