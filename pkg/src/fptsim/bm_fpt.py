"""First-passage-time samplers for standard Brownian motion.

All samplers are written in the frame where the Brownian motion starts at 0;
callers translate their own start point into the threshold.  Three threshold
shapes are covered:

* constant level ``b > 0``: the reflection principle gives
  ``P(tau <= t) = 2 Phi(-b / sqrt(t))``, so ``tau = (b / G)^2`` for a standard
  normal ``G``;
* line ``a t + b`` with ``b > 0``: for ``a < 0`` the hitting time is inverse
  Gaussian ``IG(-b/a, b^2)``; for ``a > 0`` it is infinite with probability
  ``1 - exp(-2 a b)`` and ``IG(b/a, b^2)`` otherwise; ``a = 0`` reduces to the
  constant case;
* smooth non-linear thresholds ("curvy"): an iteration that repeatedly draws
  the exact passage time of a tilted line through the current gap.  With gap
  ``H`` and line slope ``r <= inf beta'``, one draws ``G`` ~ line-FPT(r, H)
  and updates ``T <- T + G``, ``H <- beta(T+G) - beta(T) - r G`` (the new gap
  between the hit point and the threshold, non-negative by the slope bound),
  stopping when ``H <= epsilon`` or ``T`` exceeds the horizon.  Every iterate
  is an exact passage time to a piecewise-linear lower approximation, so the
  returned time under-approximates and converges as ``epsilon -> 0``.
  Thresholds the process approaches from above are handled by reflection.

Returned times of ``sample_fpt_curvy`` equal the horizon when the iteration
was censored; callers that need to distinguish censoring compare against the
horizon they passed in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import ParameterError
from .model import Orientation, Threshold

__all__ = [
    "FptDraw",
    "CurvyParams",
    "sample_inverse_gaussian",
    "sample_fpt_constant",
    "sample_fpt_linear",
    "sample_fpt_curvy",
    "inverse_gaussian_cdf",
    "constant_level_cdf",
    "linear_hit_probability",
]


@dataclass(frozen=True)
class FptDraw:
    """One first-passage draw.

    ``finite`` is true exactly when ``time < inf``; censored draws from
    horizon-capped samplers are finite with ``time`` equal to the horizon.
    ``proposals`` counts proposal attempts consumed (for rejection samplers),
    ``clock_events`` counts inner loop steps (thinning clock events, or curvy
    iterations).
    """

    time: float
    finite: bool
    proposals: int = 1
    clock_events: int = 0

    def __post_init__(self) -> None:
        if self.finite != (self.time < math.inf):
            raise ParameterError(
                f"finite={self.finite} inconsistent with time={self.time}"
            )
        if self.finite and not (self.time >= 0.0):
            raise ParameterError(f"time must be >= 0, got {self.time}")
        if self.proposals < 0 or self.clock_events < 0:
            raise ParameterError("counters must be non-negative")


@dataclass(frozen=True)
class CurvyParams:
    """Parameters of the curvy-threshold iteration.

    ``r`` is the tilted-line slope in the frame the iteration runs in (after
    reflection, for thresholds approached from above); it must not exceed the
    infimum of the running frame's threshold slope.  ``epsilon`` is the gap at
    which the iteration stops; ``horizon`` censors non-convergent runs.
    """

    epsilon: float
    r: float
    horizon: float = 50.0

    def __post_init__(self) -> None:
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not math.isfinite(self.r):
            raise ParameterError(f"r must be finite, got {self.r}")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ParameterError(f"horizon must be positive, got {self.horizon}")


def sample_inverse_gaussian(mu: float, lam: float, rng: np.random.Generator) -> float:
    """Draw from the inverse Gaussian law with mean ``mu`` and shape ``lam``."""
    if not (mu > 0.0 and math.isfinite(mu)):
        raise ParameterError(f"mu must be positive and finite, got {mu}")
    if not (lam > 0.0 and math.isfinite(lam)):
        raise ParameterError(f"lam must be positive and finite, got {lam}")
    return _wald(mu, lam, rng)


def inverse_gaussian_cdf(t, mu: float, lam: float):
    """CDF of ``IG(mu, lam)``, vectorised in ``t`` (test oracle).

    ``F(t) = Phi(z (t/mu - 1)) + exp(2 lam / mu) Phi(-z (t/mu + 1))`` with
    ``z = sqrt(lam / t)``; the second term is evaluated in log space to avoid
    overflow.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    tp = t[pos]
    z = np.sqrt(lam / tp)
    out[pos] = ndtr(z * (tp / mu - 1.0)) + np.exp(
        2.0 * lam / mu + log_ndtr(-z * (tp / mu + 1.0))
    )
    return np.clip(out, 0.0, 1.0)


def constant_level_cdf(t, level: float):
    """CDF of the Brownian passage time to a constant level (test oracle)."""
    if level < 0.0:
        raise ParameterError(f"level must be >= 0, got {level}")
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    out[pos] = 2.0 * ndtr(-level / np.sqrt(t[pos]))
    if level == 0.0:
        out[t >= 0.0] = 1.0
    return out


def linear_hit_probability(a: float, b: float) -> float:
    """Probability that Brownian motion ever reaches the line ``a t + b``."""
    if not b > 0.0:
        raise ParameterError(f"intercept b must be positive, got {b}")
    if a <= 0.0:
        return 1.0
    return math.exp(-2.0 * a * b)


def sample_fpt_constant(level: float, rng: np.random.Generator) -> FptDraw:
    """Passage time of Brownian motion from 0 to a constant ``level >= 0``."""
    if not (level >= 0.0 and math.isfinite(level)):
        raise ParameterError(f"level must be >= 0 and finite, got {level}")
    if level == 0.0:
        return FptDraw(time=0.0, finite=True)
    g = rng.standard_normal()
    while g == 0.0:
        g = rng.standard_normal()
    return FptDraw(time=(level / g) ** 2, finite=True)


def _wald(mu: float, lam: float, rng: np.random.Generator) -> float:
    """Wald draw clamped into the law's support; the generator's transform
    can round to a small negative double when ``lam/mu`` is extreme."""
    return max(0.0, float(rng.wald(mu, lam)))


def _linear_time(a: float, b: float, rng: np.random.Generator) -> float:
    """Core line-FPT draw; returns ``inf`` for non-hitting paths.

    For ``a > 0`` the hit indicator is drawn before the conditional time, so
    the stream consumption order is (uniform, then wald-if-hit).
    """
    if a == 0.0:
        g = rng.standard_normal()
        while g == 0.0:
            g = rng.standard_normal()
        return (b / g) ** 2
    if a < 0.0:
        return _wald(-b / a, b * b, rng)
    if rng.random() < math.exp(-2.0 * a * b):
        return _wald(b / a, b * b, rng)
    return math.inf


def sample_fpt_linear(a: float, b: float, rng: np.random.Generator) -> FptDraw:
    """Passage time of Brownian motion from 0 to the line ``a t + b``, ``b > 0``."""
    if not (b > 0.0 and math.isfinite(b)):
        raise ParameterError(f"intercept b must be positive and finite, got {b}")
    if not math.isfinite(a):
        raise ParameterError(f"slope a must be finite, got {a}")
    t = _linear_time(a, b, rng)
    if t == math.inf:
        return FptDraw(time=math.inf, finite=False)
    return FptDraw(time=t, finite=True)


def _curvy_iterates(
    beta, r: float, rng: np.random.Generator
) -> Iterator[tuple[float, float]]:
    """Yield ``(T, H)`` after each tilted-line iteration (above-start frame).

    ``H = inf`` signals a non-hitting line draw; the iterator then stops.
    """
    T = 0.0
    H = beta(0.0)
    while True:
        g = _linear_time(r, H, rng)
        if g == math.inf:
            yield (math.inf, math.inf)
            return
        T_next = T + g
        H = beta(T_next) - beta(T) - r * g
        T = T_next
        yield (T, H)


def _reflected(threshold: Threshold) -> Threshold:
    beta = threshold.beta
    beta_prime = threshold.beta_prime
    return Threshold(
        beta=lambda t: -beta(t),
        beta_prime=lambda t: -beta_prime(t),
        orientation=Orientation.ABOVE_START,
        inf_slope=None if threshold.sup_slope is None else -threshold.sup_slope,
        sup_slope=None if threshold.inf_slope is None else -threshold.inf_slope,
    )


def sample_fpt_curvy(
    threshold: Threshold, params: CurvyParams, rng: np.random.Generator
) -> FptDraw:
    """Passage time of Brownian motion from 0 to a smooth threshold.

    The threshold is given in the Brownian frame (process starts at 0).
    Thresholds with ``Orientation.BELOW_START`` are reflected and the
    above-start iteration runs on ``-beta``; ``params.r`` always refers to the
    running frame.  The returned time is ``min(T, horizon)`` with
    ``clock_events`` equal to the number of line draws consumed; a returned
    time equal to the horizon means the run was censored.
    """
    if threshold.orientation is Orientation.BELOW_START:
        threshold = _reflected(threshold)
    b0 = threshold.beta(0.0)
    if not (b0 > 0.0 and math.isfinite(b0)):
        raise ParameterError(
            f"threshold must start strictly away from the process, got gap {b0}"
        )
    if threshold.inf_slope is not None and params.r > threshold.inf_slope + 1e-12:
        raise ParameterError(
            f"line slope r={params.r} exceeds the threshold slope infimum "
            f"{threshold.inf_slope}; the iteration would overshoot"
        )
    if b0 <= params.epsilon:
        return FptDraw(time=0.0, finite=True, clock_events=0)
    iterations = 0
    for T, H in _curvy_iterates(threshold.beta, params.r, rng):
        iterations += 1
        if H == math.inf:
            return FptDraw(
                time=params.horizon, finite=True, clock_events=iterations
            )
        if H <= params.epsilon or T >= params.horizon:
            return FptDraw(
                time=min(T, params.horizon), finite=True, clock_events=iterations
            )
