"""MAP ratio test for a target at a known location, fused over all sensing receivers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InsufficientSamplesError

H0 = "H0"
H1 = "H1"


@dataclass(frozen=True)
class DetectorContext:
    """Prior-dependent constants of the test.

    `d_diag` is ``noise_variance / sigma_{r,k}^2`` in receiver-major order
    and `log_c` is ``-sum log(pi sigma_{r,k}^2)``.
    """

    d_diag: np.ndarray
    log_c: float
    noise_variance: float

    @classmethod
    def from_variances(cls, variances, noise_variance: float) -> "DetectorContext":
        v = np.asarray(variances, dtype=float).reshape(-1)
        if np.any(v <= 0):
            raise ValueError("all sensing-gain variances must be positive")
        return cls(d_diag=noise_variance / v, log_c=float(-np.sum(np.log(np.pi * v))),
                   noise_variance=float(noise_variance))


@dataclass(frozen=True)
class DetectionResult:
    statistic: float
    alpha_hat: np.ndarray
    decision: str
    threshold: float


def accumulate(maps, observations):
    """Sums ``G^H[m] G[m]`` and ``G^H[m] y[m]`` over the dwell.

    `observations` may carry a leading batch axis ``(n, tau, rows)``; the
    correlation then has shape ``(n, cols)``.
    """
    maps = np.asarray(maps)
    y = np.asarray(observations)
    if y.shape[-2] != maps.shape[0] or y.shape[-1] != maps.shape[1]:
        raise ValueError(f"observations {y.shape} do not match maps {maps.shape}")
    tau, rows, cols = maps.shape
    flat = maps.reshape(tau * rows, cols)
    gram = flat.conj().T @ flat
    corr = y.reshape(y.shape[:-2] + (tau * rows,)) @ flat.conj()
    return gram, corr


def _factor(gram, ctx: DetectorContext):
    return scipy.linalg.cho_factor(gram + np.diag(ctx.d_diag), lower=False)


def estimate_alpha(gram, corr, ctx: DetectorContext, factor=None) -> np.ndarray:
    """MAP estimate ``(gram + D)^{-1} corr``; batches along leading axes of `corr`."""
    factor = _factor(gram, ctx) if factor is None else factor
    corr = np.asarray(corr)
    return scipy.linalg.cho_solve(factor, corr.T).T


def test_statistic(gram, corr, ctx: DetectorContext, factor=None):
    """``T = ln C + corr^H (gram + D)^{-1} corr / noise_variance``."""
    alpha_hat = estimate_alpha(gram, corr, ctx, factor)
    quad = np.sum(np.conj(corr) * alpha_hat, axis=-1)
    if np.any(np.abs(quad.imag) > 1e-8 * (np.abs(quad.real) + 1e-300)):
        raise FloatingPointError("quadratic form has a non-negligible imaginary part")
    t = ctx.log_c + quad.real / ctx.noise_variance
    return float(t) if np.ndim(t) == 0 else t


def calibrate_threshold(h0_statistics, p_fa: float, min_samples: int | None = None) -> float:
    """Empirical threshold: the order statistic at 1-based index ceil((1 - p_fa) n)."""
    if not 0 < p_fa < 1:
        raise ValueError("p_fa must lie in (0, 1)")
    samples = np.sort(np.asarray(h0_statistics, dtype=float).reshape(-1))
    n = samples.size
    needed = math.ceil(20 / p_fa - 1e-9) if min_samples is None else min_samples
    if n < max(needed, 1):
        raise InsufficientSamplesError(f"need at least {needed} H0 samples, got {n}")
    index = max(math.ceil((1 - p_fa) * n - 1e-9), 1)
    return float(samples[index - 1])


def decide(statistic, threshold):
    """H1 iff the statistic reaches the threshold."""
    if np.ndim(statistic) == 0:
        return H1 if statistic >= threshold else H0
    return np.where(np.asarray(statistic) >= threshold, H1, H0)


def detect(maps, observations, ctx: DetectorContext, threshold: float) -> DetectionResult:
    gram, corr = accumulate(maps, observations)
    factor = _factor(gram, ctx)
    alpha_hat = estimate_alpha(gram, corr, ctx, factor)
    stat = test_statistic(gram, corr, ctx, factor)
    return DetectionResult(statistic=stat, alpha_hat=alpha_hat, decision=decide(stat, threshold),
                           threshold=threshold)


test_statistic.__test__ = False  # keep pytest from collecting it when imported by name
