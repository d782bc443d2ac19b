"""Exact first-passage-time sampling by rejection with Poisson thinning.

Target: ``tau = inf{t : X_t = beta(t)}`` for ``dX = alpha(X) dt + dB`` started
at ``x0`` on the far side of the threshold.  A change of measure to a
reference Brownian motion with constant drift ``g`` (``g = 0`` by default)
turns the density of ``tau`` into ``eta(t) * f_W(t) / N_c`` where ``f_W`` is
the first-passage density of the reference motion to ``beta``,

    eta(t) = E[ exp( -int_0^t gamma1(s) + gamma2(X_s) ds ) | tau = t ],

``gamma1``/``gamma2`` are the rates built by :func:`fptsim.model.make_gamma_pair`
and ``N_c = exp(A(x0) - A(beta(0)) - g*(x0 - beta(0)))``.  The sampler draws a
proposal ``tau_W`` from the reference first-passage law and accepts it when a
rate-``kappa`` exponential clock places no event below the graph of the
integrand.  At a clock event ``E`` in ``[0, tau_W]`` the path state enters as

    x_rec = beta(E) -/+ || (E/tau_W) * delta * e1 + l_E ||,

where ``delta = |beta(0) - x0|`` is the starting gap, ``l`` is a pinned 3-D
Brownian bridge updated event-to-event by :func:`bridge_step`, and the sign
places the reconstruction on the starting side of the threshold.  The
distance ``|| (E/tau_W) * delta * e1 + l_E ||`` is the Bessel(3) bridge from
0 to ``delta`` evaluated at ``E``, i.e. the path-to-threshold gap of the
*time-reversed* proposal path, which runs from 0 at the hit back to ``delta``
at time 0.  Pairing the forward-time rate ``gamma1(E)`` with the
reversed-path state is valid because acceptance depends on the path only
through ``int_0^tau gamma1(s) + gamma2(X_s) ds``, which is invariant under
reversing the time argument of either summand.  Acceptance happens with
probability ``eta(tau_W)``, hence accepted proposals follow the target law
and the expected number of proposals per acceptance equals ``1 / N_c`` (see
:func:`expected_proposals`).

The reconstruction is exact for constant and linear thresholds, where the
conditioned gap of the reference motion is exactly a Bessel(3) bridge; for
curvy thresholds it shares the epsilon-level approximation of the proposal
iteration.

For distant linear thresholds, :func:`sample_exact_split` chains ``k``
intermediate sub-problems (strong Markov property), turning a cost that is
exponential in the gap into ``k`` times a bounded per-stage cost; see
:func:`iteration_bound_linear` and :func:`choose_split_count`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .bm_fpt import CurvyParams, FptDraw, _linear_time, sample_fpt_curvy
from .errors import (
    AssumptionViolation,
    ConfigurationError,
    DomainError,
    NonTerminationError,
    ParameterError,
)
from .model import (
    GAMMA_NEGATIVE_TOLERANCE,
    GAMMA_UPPER_SLACK,
    GammaPair,
    Orientation,
    Threshold,
    UnitDiffusionSDE,
    linear_threshold,
    make_gamma_pair,
)
from .rng import sample_many

__all__ = [
    "BridgeState",
    "Proposal",
    "ExactProblem",
    "bridge_step",
    "sample_exact",
    "sample_exact_below",
    "sample_exact_split",
    "sample_batch",
    "iteration_bound_linear",
    "choose_split_count",
    "expected_proposals",
    "run_thinning_trial",
    "default_proposal",
]


@dataclass(frozen=True)
class BridgeState:
    """State of the event-to-event pinned-bridge recursion.

    ``l`` is the pinned three-dimensional Brownian bridge evaluated at the
    current event time ``E1``; ``E0`` is the previous event time.  ``rejected``
    is set once a thinning event falls below the rate graph, which stops the
    inner loop immediately.
    """

    l: np.ndarray
    E0: float
    E1: float
    rejected: bool = False

    def __post_init__(self) -> None:
        l = np.asarray(self.l, dtype=float)
        if l.shape != (3,):
            raise ParameterError(f"l must be a 3-vector, got shape {l.shape}")
        object.__setattr__(self, "l", l)
        if not 0.0 <= self.E0 <= self.E1:
            raise ParameterError(f"need 0 <= E0 <= E1, got E0={self.E0}, E1={self.E1}")


def _bridge_coeffs(tau_w: float, e0: float, e1: float) -> tuple[float, float]:
    """Conditional-update coefficients of the pinned bridge at ``e1``.

    Given the bridge value at ``e0`` and the pin at ``tau_w``, the value at
    ``e1`` is ``c1 * l + c2 * G`` with a standard normal 3-vector ``G``.
    """
    if not e0 <= e1 <= tau_w:
        raise ParameterError(f"need E0 <= E1 <= tau_w, got {e0}, {e1}, {tau_w}")
    denom = tau_w - e0
    if denom <= 0.0:
        raise ParameterError(f"tau_w must exceed E0, got tau_w={tau_w}, E0={e0}")
    c1 = (tau_w - e1) / denom
    c2 = math.sqrt((tau_w - e1) * (e1 - e0) / denom)
    return c1, c2


def bridge_step(state: BridgeState, tau_w: float, G: np.ndarray) -> BridgeState:
    """Advance the pinned bridge from ``E0`` to ``E1`` using innovation ``G``."""
    G = np.asarray(G, dtype=float)
    if G.shape != (3,):
        raise ParameterError(f"G must be a 3-vector, got shape {G.shape}")
    c1, c2 = _bridge_coeffs(tau_w, state.E0, state.E1)
    return replace(state, l=c1 * state.l + c2 * G)


@dataclass(frozen=True)
class Proposal:
    """Proposal-sampler selection: ``constant``, ``linear`` or ``curvy``."""

    kind: str
    curvy: CurvyParams | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "linear", "curvy"):
            raise ConfigurationError(f"unknown proposal kind {self.kind!r}")
        if self.kind == "curvy" and self.curvy is None:
            raise ConfigurationError("curvy proposals need CurvyParams")


def default_proposal(
    threshold: Threshold, curvy: CurvyParams | None = None
) -> Proposal:
    """Pick the natural proposal for a threshold shape."""
    if threshold.linear is not None:
        a, _ = threshold.linear
        return Proposal("constant" if a == 0.0 else "linear")
    return Proposal("curvy", curvy)


@dataclass(frozen=True)
class ExactProblem:
    """Everything the exact sampler needs for one threshold problem.

    ``gammas`` must carry a ``kappa`` bound and must have been built from
    ``(sde, threshold)`` with the same ``reference_drift`` (or be certified
    equivalent by the caller); runtime guards abort on out-of-range rates
    rather than silently biasing output.
    """

    sde: UnitDiffusionSDE
    threshold: Threshold
    gammas: GammaPair
    proposal: Proposal = field(default_factory=lambda: Proposal("linear"))
    max_proposals: int = 10**6

    def __post_init__(self) -> None:
        if self.gammas.kappa is None:
            raise ConfigurationError("gammas.kappa must be set for sampling")
        if self.max_proposals < 1:
            raise ParameterError(f"max_proposals must be >= 1, got {self.max_proposals}")
        self.threshold.validate_start(self.sde.x0)
        if self.proposal.kind in ("constant", "linear") and self.threshold.linear is None:
            raise ConfigurationError(
                f"{self.proposal.kind!r} proposals require a linear threshold"
            )
        if self.proposal.kind == "constant":
            a, _ = self.threshold.linear  # type: ignore[misc]
            if a != 0.0 or self.gammas.reference_drift != 0.0:
                raise ConfigurationError(
                    "constant proposals require a flat threshold and zero reference drift"
                )


def expected_proposals(problem: ExactProblem) -> float:
    """Expected proposals per acceptance, ``exp(A_g(beta(0)) - A_g(x0))``.

    ``A_g(x) = A(x) - g*x`` is the drift antiderivative relative to the
    reference measure.  Valid when the target passage is almost surely finite
    and the rate pair is unshifted (``shift1 + shift2 = 0``).
    """
    g = problem.gammas.reference_drift
    A = problem.sde.A
    x0 = problem.sde.x0
    b0 = problem.threshold.beta(0.0)
    return math.exp((A(b0) - g * b0) - (A(x0) - g * x0))


def _proposal_drawer(
    problem: ExactProblem, sign: float
) -> Callable[[np.random.Generator], float]:
    """Build a closure drawing reference passage times in the above frame.

    The reference motion is Brownian with drift ``g``; translating the start
    to 0 and reflecting below-start problems, proposals are passage times of
    standard Brownian motion to ``phi(t) = sign * (beta(t) - g*t - x0)``.
    Returns ``inf`` for non-hitting or horizon-censored draws (the caller
    treats both as automatic rejections).
    """
    th = problem.threshold
    g = problem.gammas.reference_drift
    x0 = problem.sde.x0
    kind = problem.proposal.kind

    if kind in ("constant", "linear"):
        a, b = th.linear  # type: ignore[misc]
        slope = sign * (a - g)
        intercept = sign * (b - x0)
        if not intercept > 0.0:
            raise ConfigurationError(
                f"translated proposal intercept {intercept} must be positive"
            )
        return lambda rng: _linear_time(slope, intercept, rng)

    params = problem.proposal.curvy
    assert params is not None
    beta = th.beta
    beta_prime = th.beta_prime

    def phi(t: float) -> float:
        return sign * (beta(t) - g * t - x0)

    def phi_prime(t: float) -> float:
        return sign * (beta_prime(t) - g)

    if sign > 0:
        inf_slope = None if th.inf_slope is None else th.inf_slope - g
        sup_slope = None if th.sup_slope is None else th.sup_slope - g
    else:
        inf_slope = None if th.sup_slope is None else -(th.sup_slope - g)
        sup_slope = None if th.inf_slope is None else -(th.inf_slope - g)
    phi_threshold = Threshold(
        beta=phi,
        beta_prime=phi_prime,
        orientation=Orientation.ABOVE_START,
        inf_slope=inf_slope,
        sup_slope=sup_slope,
    )

    def draw(rng: np.random.Generator) -> float:
        d = sample_fpt_curvy(phi_threshold, params, rng)
        if d.time >= params.horizon:
            return math.inf
        return d.time

    return draw


def _sample_oriented(
    problem: ExactProblem, rng: np.random.Generator, sign: float
) -> FptDraw:
    gp = problem.gammas
    kappa = gp.kappa
    assert kappa is not None
    scale = 1.0 / kappa
    upper = kappa + GAMMA_UPPER_SLACK * max(1.0, kappa)
    beta = problem.threshold.beta
    gamma1 = gp.gamma1
    gamma2 = gp.gamma2
    s1 = gp.shift1
    s2 = gp.shift2
    x0 = problem.sde.x0
    delta = sign * (beta(0.0) - x0)
    draw_proposal = _proposal_drawer(problem, sign)
    exponential = rng.exponential
    standard_normal = rng.standard_normal
    uniform = rng.random

    total_events = 0
    for attempt in range(1, problem.max_proposals + 1):
        tau = draw_proposal(rng)
        if tau == math.inf:
            continue
        if tau <= 0.0:
            return FptDraw(time=0.0, finite=True, proposals=attempt, clock_events=total_events)
        e0 = 0.0
        e1 = exponential(scale)
        l1 = l2 = l3 = 0.0
        rejected = False
        while e1 <= tau:
            z0, z1, z2 = standard_normal(3)
            e = exponential(scale)
            u = uniform()
            # pinned-bridge update; same recursion as bridge_step
            c1 = (tau - e1) / (tau - e0)
            c2 = math.sqrt((tau - e1) * (e1 - e0) / (tau - e0))
            l1 = c1 * l1 + c2 * z0
            l2 = c1 * l2 + c2 * z1
            l3 = c1 * l3 + c2 * z2
            total_events += 1
            # The bridge clock runs backwards along the path: its value at e1
            # is the path-to-threshold gap at forward time tau - e1, so the
            # threshold and the rates must be evaluated there.  Pairing them
            # with e1 instead only cancels for constant thresholds.
            t_fwd = tau - e1
            m = (e1 / tau) * delta + l1
            x_rec = beta(t_fwd) - sign * math.sqrt(m * m + l2 * l2 + l3 * l3)
            # rate guard; same semantics as GammaPair.evaluate
            v = gamma1(t_fwd) - s1 + gamma2(x_rec) - s2
            if not math.isfinite(v):
                raise DomainError(f"gamma sum at (t={e1}, x={x_rec}) is {v}")
            if v < 0.0:
                if v < -GAMMA_NEGATIVE_TOLERANCE:
                    raise AssumptionViolation(
                        f"gamma1+gamma2 = {v} < 0 at (t={e1}, x={x_rec})"
                    )
                v = 0.0
            elif v > upper:
                raise AssumptionViolation(
                    f"gamma1+gamma2 = {v} exceeds kappa = {kappa} at (t={e1}, x={x_rec})"
                )
            if kappa * u <= v:
                rejected = True
                break
            e0 = e1
            e1 += e
        if not rejected:
            return FptDraw(
                time=tau, finite=True, proposals=attempt, clock_events=total_events
            )
    raise NonTerminationError(
        f"no acceptance within {problem.max_proposals} proposals; "
        "check kappa and the proposal horizon"
    )


def sample_exact(problem: ExactProblem, rng: np.random.Generator) -> FptDraw:
    """Draw one exact passage time for an above-start problem."""
    if problem.threshold.orientation is not Orientation.ABOVE_START:
        raise ConfigurationError("sample_exact handles above-start problems; "
                                 "use sample_exact_below")
    return _sample_oriented(problem, rng, +1.0)


def sample_exact_below(problem: ExactProblem, rng: np.random.Generator) -> FptDraw:
    """Draw one exact passage time for a below-start problem."""
    if problem.threshold.orientation is not Orientation.BELOW_START:
        raise ConfigurationError("sample_exact_below handles below-start problems; "
                                 "use sample_exact")
    return _sample_oriented(problem, rng, -1.0)


def sample_exact_split(
    problem: ExactProblem, k: int, rng: np.random.Generator
) -> FptDraw:
    """Exact passage time to a linear threshold via ``k`` chained stages.

    Stage ``i`` runs the exact sampler from the previous hit point to the
    parallel line through level ``x0 + (beta(0) - x0) * i / k``; by the strong
    Markov property the summed stage times follow the original passage law,
    and ``k = 1`` is the plain single-stage path.  Stage rate pairs are
    rebuilt from the stage geometry and inherit the original shifts, bound
    and reference drift.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if problem.threshold.linear is None:
        raise ConfigurationError("space splitting requires a linear threshold")
    if problem.threshold.orientation is not Orientation.ABOVE_START:
        raise ConfigurationError("space splitting is implemented for above-start problems")
    a, b = problem.threshold.linear
    gp = problem.gammas
    x0 = problem.sde.x0
    gap = b - x0

    t_acc = 0.0
    x_cur = x0
    total_proposals = 0
    total_events = 0
    for i in range(1, k + 1):
        level = x0 + gap * (i / k)
        intercept = a * t_acc + level
        stage_threshold = linear_threshold(a, intercept, Orientation.ABOVE_START)
        stage_sde = replace(problem.sde, x0=x_cur)
        stage_gammas = replace(
            make_gamma_pair(stage_sde, stage_threshold, gp.reference_drift),
            shift1=gp.shift1,
            shift2=gp.shift2,
            kappa=gp.kappa,
        )
        stage_problem = ExactProblem(
            sde=stage_sde,
            threshold=stage_threshold,
            gammas=stage_gammas,
            proposal=Proposal("linear" if a != 0.0 or gp.reference_drift != 0.0 else "constant"),
            max_proposals=problem.max_proposals,
        )
        d = _sample_oriented(stage_problem, rng, +1.0)
        x_cur = a * d.time + intercept
        t_acc += d.time
        total_proposals += d.proposals
        total_events += d.clock_events
    return FptDraw(
        time=t_acc, finite=True, proposals=total_proposals, clock_events=total_events
    )


def sample_batch(
    problem: ExactProblem,
    n: int,
    master_seed: int,
    *,
    workers: int = 1,
    split: int | None = None,
    key_prefix: tuple[int, ...] = (),
) -> list[FptDraw]:
    """Draw ``n`` exact passage times on per-index substreams.

    Sample ``i`` uses the generator ``substream(master_seed, *key_prefix, i)``,
    so the output is independent of ``workers``.
    """
    if split is not None:
        draw = lambda rng: sample_exact_split(problem, split, rng)
    elif problem.threshold.orientation is Orientation.ABOVE_START:
        draw = lambda rng: sample_exact(problem, rng)
    else:
        draw = lambda rng: sample_exact_below(problem, rng)
    return sample_many(draw, n, master_seed, workers=workers, key_prefix=key_prefix)


def iteration_bound_linear(a: float, b: float, kappa: float) -> float:
    """Upper bound on expected proposals per acceptance for the line ``a t + b``.

    Requires ``a*b < 0`` (almost-surely hitting line) and ``kappa > 0``::

        E[I] <= exp( a*b * (1 - sqrt(1 + 2*kappa / a^2)) ).
    """
    if not (math.isfinite(a) and math.isfinite(b) and a * b < 0.0):
        raise ParameterError(f"need a*b < 0, got a={a}, b={b}")
    if not kappa > 0.0:
        raise ParameterError(f"kappa must be positive, got {kappa}")
    ab = a * b
    return math.exp(ab - ab * math.sqrt(1.0 + 2.0 * kappa / (a * a)))


def choose_split_count(a: float, b: float, kappa_max: float) -> int:
    """Stage count for which the per-stage proposal bound stays below ``e``.

    Returns ``floor( a*b * (1 - sqrt(1 + 2*kappa_max / a^2)) ) + 1`` (at least
    1): with this many stages the exponent of :func:`iteration_bound_linear`
    per stage is below 1, so total expected proposals are at most ``k * e``.
    """
    if not (math.isfinite(a) and math.isfinite(b) and a * b < 0.0):
        raise ParameterError(f"need a*b < 0, got a={a}, b={b}")
    if not kappa_max > 0.0:
        raise ParameterError(f"kappa_max must be positive, got {kappa_max}")
    ab = a * b
    k = math.floor(ab * (1.0 - math.sqrt(1.0 + 2.0 * kappa_max / (a * a)))) + 1
    return max(1, k)


def run_thinning_trial(
    intensity: Callable[[float], float],
    horizon: float,
    kappa: float,
    rng: np.random.Generator,
) -> int:
    """Count rate-``kappa`` clock events on ``[0, horizon]`` below the graph.

    The zero-count probability is ``exp(-int_0^horizon intensity)``, which is
    the acceptance mechanism of the exact sampler in isolation (validation
    rig).  ``intensity`` values must lie in ``[0, kappa]``.
    """
    if not kappa > 0.0:
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if not horizon >= 0.0:
        raise ParameterError(f"horizon must be >= 0, got {horizon}")
    scale = 1.0 / kappa
    upper = kappa + GAMMA_UPPER_SLACK * max(1.0, kappa)
    below = 0
    t = rng.exponential(scale)
    while t <= horizon:
        u = rng.random()
        v = intensity(t)
        if v < -GAMMA_NEGATIVE_TOLERANCE or v > upper:
            raise AssumptionViolation(f"intensity({t}) = {v} outside [0, {kappa}]")
        if kappa * u <= v:
            below += 1
        t += rng.exponential(scale)
    return below
