"""Seeded random variates for the fading, phase-quantization and misalignment models.

Every sampler takes an :class:`RngStream`.  A stream is fully determined by
``(master_seed, stream_index)``, so any chunk of a Monte Carlo run can be
regenerated in isolation and in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import CONTINUOUS, DISABLED, Continuous, Disabled, MisalignmentParams

# Each Monte Carlo chunk owns one substream per random quantity, so switching
# one sampler on or off never shifts another's sequence.
ENVELOPES, PHASE_ERRORS, MISALIGNMENT, SIGNAL = range(4)
STREAMS_PER_CHUNK = 4


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stream_index < 0:
            raise ValueError(f"stream_index must be >= 0, got {self.stream_index}")

    @classmethod
    def for_chunk(cls, master_seed: int, chunk: int, kind: int) -> RngStream:
        return cls(master_seed, chunk * STREAMS_PER_CHUNK + kind)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class ChannelDraw:
    """Channel realization(s).

    The per-element arrays have shape ``(..., M)``; ``h_m`` has the leading
    shape.  A single realization therefore has 1-D element arrays and a scalar
    ``h_m``, while a Monte Carlo batch of ``n`` draws uses ``(n, M)`` and ``(n,)``.
    """

    f_env: np.ndarray
    g_env: np.ndarray
    phase_err: np.ndarray
    h_m: np.ndarray | float

    @property
    def num_elements(self) -> int:
        return self.f_env.shape[-1]


def half_width(bits: int | Continuous) -> float:
    """Half-width pi/2^b of the quantization error interval; 0 when continuous."""
    return 0.0 if bits is CONTINUOUS else math.pi / 2**bits


def _rng(stream: RngStream | np.random.Generator) -> np.random.Generator:
    return stream if isinstance(stream, np.random.Generator) else stream.generator()


def sample_envelopes(M: int, stream: RngStream, size: int | None = None):
    """Moduli |f_m|, |g_m| of independent CN(0, 1) coefficients.

    Returns two arrays of shape ``(M,)``, or ``(size, M)`` when ``size`` is given.
    Each entry is Rayleigh distributed with scale sqrt(1/2), i.e. E|f|^2 = 1.
    """
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    rng = _rng(stream)
    shape = (M,) if size is None else (size, M)
    scale = math.sqrt(0.5)
    f_env = rng.rayleigh(scale, size=shape)
    g_env = rng.rayleigh(scale, size=shape)
    return f_env, g_env


def quantize_phase(target, bits: int):
    """Snap ``target`` (radians) to the nearest level of {0, 2pi/2^b, ..., (2^b - 1)2pi/2^b}.

    Returns ``(theta, err)`` with ``err = theta - target`` wrapped into (-pi, pi],
    hence ``|err| <= pi/2^b``.  Half-step ties go to the smaller level index.
    Works elementwise on arrays.
    """
    if bits < 1:
        raise ValueError(f"bits must be >= 1, got {bits}")
    levels = 2**bits
    step = 2.0 * math.pi / levels
    t = np.mod(np.asarray(target, dtype=float), 2.0 * math.pi)
    # ceil(u - 0.5) rounds to nearest with exact halves going down
    u = t / step - 0.5
    index = np.ceil(u).astype(np.int64)
    # tie between the last level and the wrapped level 0 goes to 0
    index = np.where((index == levels - 1) & (u == levels - 1), 0, index) % levels
    theta = index * step
    err = theta - t
    err = np.where(err > math.pi, err - 2.0 * math.pi, err)
    err = np.where(err <= -math.pi, err + 2.0 * math.pi, err)
    if np.ndim(theta) == 0:
        return float(theta), float(err)
    return theta, err


def sample_phase_errors(M: int, bits: int | Continuous, stream: RngStream, size: int | None = None):
    """I.i.d. quantization errors, uniform on [-pi/2^b, pi/2^b]; zeros when continuous.

    The uniforms are drawn even in the continuous case and scaled by the
    half-width, so draws at different resolutions stay paired under a seed.
    """
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    shape = (M,) if size is None else (size, M)
    u = _rng(stream).uniform(-1.0, 1.0, size=shape)
    return u * half_width(bits)


def quantization_errors_from_targets(M: int, bits: int, stream: RngStream, size: int | None = None):
    """Errors produced by running :func:`quantize_phase` on uniformly random target phases."""
    shape = (M,) if size is None else (size, M)
    targets = _rng(stream).uniform(0.0, 2.0 * math.pi, size=shape)
    return quantize_phase(targets, bits)[1]


def misalignment_from_uniform(params: MisalignmentParams, u):
    """Inverse CDF of the power law: ``phi * u**(1/zeta)`` for u in (0, 1]."""
    return params.phi * np.power(u, 1.0 / params.zeta)


def sample_misalignment(params: MisalignmentParams | Disabled, stream: RngStream, size: int | None = None):
    if params is DISABLED:
        return 1.0 if size is None else np.ones(size)
    # 1 - U maps numpy's [0, 1) onto (0, 1], keeping h_m = phi reachable and 0 not
    u = 1.0 - _rng(stream).random(size)
    h = misalignment_from_uniform(params, u)
    return float(h) if size is None else h


def draw_channels(
    M: int,
    bits: int | Continuous,
    misalignment: MisalignmentParams | Disabled,
    master_seed: int,
    chunk: int,
    size: int,
) -> ChannelDraw:
    """Batch of ``size`` draws for Monte Carlo chunk ``chunk``."""
    f_env, g_env = sample_envelopes(M, RngStream.for_chunk(master_seed, chunk, ENVELOPES), size)
    phase_err = sample_phase_errors(M, bits, RngStream.for_chunk(master_seed, chunk, PHASE_ERRORS), size)
    h_m = sample_misalignment(misalignment, RngStream.for_chunk(master_seed, chunk, MISALIGNMENT), size)
    return ChannelDraw(f_env=f_env, g_env=g_env, phase_err=phase_err, h_m=h_m)


def draw_channel(
    M: int,
    bits: int | Continuous,
    misalignment: MisalignmentParams | Disabled,
    stream: RngStream,
) -> ChannelDraw:
    """A single realization, every quantity taken from substreams of ``stream``."""
    seed, base = stream.master_seed, stream.stream_index
    f_env, g_env = sample_envelopes(M, RngStream.for_chunk(seed, base, ENVELOPES))
    phase_err = sample_phase_errors(M, bits, RngStream.for_chunk(seed, base, PHASE_ERRORS))
    h_m = sample_misalignment(misalignment, RngStream.for_chunk(seed, base, MISALIGNMENT))
    return ChannelDraw(f_env=f_env, g_env=g_env, phase_err=phase_err, h_m=h_m)
