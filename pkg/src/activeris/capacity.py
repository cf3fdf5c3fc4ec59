"""Ergodic capacity estimators.

Two routes to the same number: the sample mean of log2(1 + gamma), and the
integral of (1 - F(s)) / (1 + s) over the empirical CDF of gamma, integrated
exactly step by step.  :func:`estimate_capacity` runs both and refuses to
return if they disagree.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linkmodel import instantaneous_snr
from .params import SystemConfig
from .stochastics import draw_channels

Z_95 = 1.959963984540054
DEFAULT_SAMPLES = 100_000
CHUNK_SIZE = 8192
SELF_CHECK_RTOL = 1e-6


class SelfCheckError(RuntimeError):
    """The two capacity estimators disagreed on the same samples."""


@dataclass(frozen=True)
class CapacityEstimate:
    mean_bits: float
    std_err: float
    ci_low: float
    ci_high: float
    n_samples: int

    @property
    def ci_width(self) -> float:
        return self.ci_high - self.ci_low


class EmpiricalCdf:
    """Right-continuous step CDF F(s) = #{gamma_i <= s} / N."""

    def __init__(self, samples):
        values = np.sort(np.asarray(samples, dtype=float).ravel())
        if values.size and values[0] < 0:
            raise ValueError("SNR samples must be non-negative")
        self.sorted_values = values

    def __len__(self) -> int:
        return self.sorted_values.size

    def at(self, s):
        counts = np.searchsorted(self.sorted_values, s, side="right")
        out = counts / self.sorted_values.size
        return float(out) if np.ndim(out) == 0 else out


def _estimate(values: np.ndarray, mean: float) -> CapacityEstimate:
    n = values.size
    std_err = float(np.std(values, ddof=1) / math.sqrt(n))
    return CapacityEstimate(
        mean_bits=mean,
        std_err=std_err,
        ci_low=mean - Z_95 * std_err,
        ci_high=mean + Z_95 * std_err,
        n_samples=n,
    )


def _check_samples(gammas) -> np.ndarray:
    g = np.asarray(gammas, dtype=float).ravel()
    if g.size < 2:
        raise ValueError(f"need at least 2 SNR samples, got {g.size}")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("SNR samples must be finite and non-negative")
    return g


def capacity_mc(gammas) -> CapacityEstimate:
    """Sample mean of log2(1 + gamma) with its standard error and 95% normal CI."""
    g = _check_samples(gammas)
    bits = np.log1p(g) / math.log(2.0)
    return _estimate(bits, float(np.mean(bits)))


def capacity_cdf_integral(cdf: EmpiricalCdf) -> CapacityEstimate:
    """(1/ln 2) * integral_0^inf (1 - F(s)) / (1 + s) ds on a step CDF, exactly.

    Between consecutive order statistics gamma_(i) < s < gamma_(i+1) the
    survival function is the constant (N - i)/N, and the antiderivative of
    1/(1+s) is ln(1+s), so the integral is a finite sum of log increments.
    """
    g = _check_samples(cdf.sorted_values)
    n = g.size
    log_levels = np.log1p(g)
    increments = np.diff(log_levels, prepend=0.0)
    survival = (n - np.arange(n)) / n
    integral = float(np.sum(survival * increments)) / math.log(2.0)
    # standard error from the per-sample values the step function encodes
    return _estimate(log_levels / math.log(2.0), integral)


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def snr_samples(cfg: SystemConfig, n_samples: int, seed: int, threads: int = 1) -> np.ndarray:
    """``n_samples`` draws of gamma, generated in fixed chunks of :data:`CHUNK_SIZE`.

    Chunk ``k`` always uses the substreams of chunk ``k``, and results are
    concatenated in chunk order, so the output does not depend on ``threads``.
    """
    sizes = [CHUNK_SIZE] * (n_samples // CHUNK_SIZE)
    if n_samples % CHUNK_SIZE:
        sizes.append(n_samples % CHUNK_SIZE)

    def run(chunk: int) -> np.ndarray:
        draw = draw_channels(
            cfg.num_elements, cfg.quant_bits, cfg.misalignment, seed, chunk, sizes[chunk]
        )
        return instantaneous_snr(draw, cfg).gamma

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]
    return np.concatenate(parts)


def estimate_from_samples(gammas) -> CapacityEstimate:
    """:func:`capacity_mc` cross-checked against :func:`capacity_cdf_integral`."""
    mc = capacity_mc(gammas)
    integral = capacity_cdf_integral(EmpiricalCdf(gammas))
    gap = _relative_gap(mc.mean_bits, integral.mean_bits)
    if gap > SELF_CHECK_RTOL:
        raise SelfCheckError(
            f"Monte Carlo mean {mc.mean_bits!r} and CDF integral {integral.mean_bits!r} "
            f"differ by {gap:.3g} relative"
        )
    return mc


def estimate_capacity(
    cfg: SystemConfig,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
) -> CapacityEstimate:
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    return estimate_from_samples(snr_samples(cfg, n_samples, seed, threads))
