"""Instantaneous SNR at the user and a symbol-level received-signal simulator.

:func:`instantaneous_snr` is the closed per-draw SNR used by the capacity
estimators.  :func:`simulate_received_signal` builds the received samples
term by term (desired signal, amplified RIS noise, receiver noise) and serves
as an independent check on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import CONTINUOUS, SnrMode, SystemConfig, db_to_linear, link_gains
from .stochastics import ChannelDraw, RngStream, quantize_phase


@dataclass(frozen=True)
class SnrSample:
    gamma: np.ndarray | float
    rho_s: np.ndarray | float


@dataclass(frozen=True)
class SignalRealization:
    """Received samples over ``n_symbols`` symbol periods, split by origin.

    ``y == desired + ris_noise + user_noise`` elementwise.
    """

    y: np.ndarray
    desired: np.ndarray
    ris_noise: np.ndarray
    user_noise: np.ndarray

    def empirical_snr(self) -> float:
        noise = self.ris_noise + self.user_noise
        noise_power = np.mean(np.abs(noise) ** 2)
        return float(np.mean(np.abs(self.desired) ** 2) / noise_power)


def noise_power(draw: ChannelDraw, cfg: SystemConfig):
    """beta^2 * sum|g_m|^2 * sigma_r^2 + sigma_u^2 for each draw."""
    g_power = np.sum(draw.g_env**2, axis=-1)
    return cfg.beta**2 * g_power * cfg.sigma_r_sq + cfg.sigma_u_sq


def effective_rho(draw: ChannelDraw, cfg: SystemConfig):
    """SNR factor rho_s for each draw.

    In physical mode ``P_s * h_L^2 / (beta^2 * sum|g_m|^2 * sigma_r^2 + sigma_u^2)``;
    in rho-controlled mode the configured ``10**(rho_db/10)`` regardless of the draw.
    """
    if cfg.snr_mode is SnrMode.RHO_CONTROLLED:
        rho = db_to_linear(cfg.rho_db)
        lead = np.shape(draw.h_m)
        return rho if lead == () else np.full(lead, rho)
    h_l = link_gains(cfg).h_l
    return cfg.tx_power * h_l**2 / noise_power(draw, cfg)


def channel_gain(draw: ChannelDraw, cfg: SystemConfig):
    """beta^2 * h_M^2 * |sum_m |f_m||g_m| exp(j Phi_m)|^2, the draw-dependent SNR factor."""
    amp = draw.f_env * draw.g_env
    re = np.sum(amp * np.cos(draw.phase_err), axis=-1)
    im = np.sum(amp * np.sin(draw.phase_err), axis=-1)
    return cfg.beta**2 * np.square(draw.h_m) * (re * re + im * im)


def instantaneous_snr(draw: ChannelDraw, cfg: SystemConfig) -> SnrSample:
    if draw.num_elements != cfg.num_elements:
        raise ValueError(f"draw has {draw.num_elements} elements, config has {cfg.num_elements}")
    rho = effective_rho(draw, cfg)
    gamma = rho * channel_gain(draw, cfg)
    if np.ndim(gamma) == 0:
        return SnrSample(gamma=float(gamma), rho_s=float(rho))
    return SnrSample(gamma=gamma, rho_s=rho)


def _circular_normal(rng: np.random.Generator, variance: float, shape) -> np.ndarray:
    std = math.sqrt(variance / 2.0)
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_received_signal(
    draw: ChannelDraw,
    cfg: SystemConfig,
    stream: RngStream,
    n_symbols: int = 1,
) -> SignalRealization:
    """Compose the received samples for one channel draw over ``n_symbols`` symbols.

    Complex coefficients f_m, g_m are built from the draw's envelopes with
    random phases chosen so that the quantizer, aimed at the co-phasing
    target ``-(arg f_m + arg g_m)``, lands on a level whose residual error is
    exactly ``draw.phase_err``.  Each RIS element adds its own noise
    n_{r,m} ~ CN(0, sigma_r^2); the user adds n_u ~ CN(0, sigma_u^2).  Symbols
    are unit-modulus QPSK.

    In rho-controlled mode the transmit amplitude is set so that the desired
    power over the conditional noise power equals the configured rho_s times the
    channel gain, matching :func:`instantaneous_snr`.
    """
    if np.ndim(draw.h_m) != 0:
        raise ValueError("simulate_received_signal takes a single channel draw")
    M = draw.num_elements
    rng = stream.generator()

    # phases: pick the applied level theta, back out the target, split it across f and g
    if cfg.quant_bits is CONTINUOUS:
        theta = rng.uniform(0.0, 2.0 * math.pi, M)
        target = theta - draw.phase_err
    else:
        levels = 2**cfg.quant_bits
        theta = rng.integers(0, levels, M) * (2.0 * math.pi / levels)
        target = np.mod(theta - draw.phase_err, 2.0 * math.pi)
        theta, _ = quantize_phase(target, cfg.quant_bits)
    arg_f = rng.uniform(0.0, 2.0 * math.pi, M)
    arg_g = -target - arg_f
    f = draw.f_env * np.exp(1j * arg_f)
    g = draw.g_env * np.exp(1j * arg_g)
    reflect = cfg.beta * np.exp(1j * np.asarray(theta, dtype=float))

    if cfg.snr_mode is SnrMode.PHYSICAL:
        amplitude = math.sqrt(cfg.tx_power) * link_gains(cfg).h_l
    else:
        amplitude = math.sqrt(db_to_linear(cfg.rho_db) * float(noise_power(draw, cfg)))

    x = np.exp(1j * (math.pi / 4 + (math.pi / 2) * rng.integers(0, 4, n_symbols)))
    cascade = np.sum(f * g * reflect)
    desired = amplitude * draw.h_m * cascade * x

    n_r = _circular_normal(rng, cfg.sigma_r_sq, (n_symbols, M))
    ris_noise = n_r @ (g * reflect) if M else np.zeros(n_symbols, dtype=complex)
    user_noise = _circular_normal(rng, cfg.sigma_u_sq, n_symbols)
    return SignalRealization(
        y=desired + ris_noise + user_noise,
        desired=desired,
        ris_noise=ris_noise,
        user_noise=user_noise,
    )
