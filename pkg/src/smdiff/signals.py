"""Analytic test signals with exact derivatives, and noise models.

Every signal evaluates its j-th derivative in closed form (power rule for
polynomials, quarter-period phase shifts for sinusoids), so simulation
truth never relies on numerical differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .rng import SplitMix64

MAX_DERIVATIVE = 8


@dataclass(frozen=True)
class PolynomialSignal:
    """f0(t) = sum_l coeffs[l] * t**l."""

    coeffs: tuple[float, ...]

    def derivative(self, t: float, j: int) -> float:
        acc = 0.0
        for l in range(j, len(self.coeffs)):
            acc += self.coeffs[l] * math.factorial(l) / math.factorial(l - j) * t ** (l - j)
        return acc


@dataclass(frozen=True)
class RampCosine:
    """f0(t) = t * cos(rate * t)."""

    rate: float = 0.5

    def derivative(self, t: float, j: int) -> float:
        a = self.rate
        value = t * a ** j * math.cos(a * t + j * math.pi / 2)
        if j > 0:
            value += j * a ** (j - 1) * math.cos(a * t + (j - 1) * math.pi / 2)
        return value


@dataclass(frozen=True)
class SinusoidMix:
    """Sum of sinusoids A*sin(omega*t + phase) plus an optional polynomial."""

    terms: tuple[tuple[float, float, float], ...]
    poly: tuple[float, ...] = ()

    def derivative(self, t: float, j: int) -> float:
        acc = 0.0
        for amp, omega, phase in self.terms:
            acc += amp * omega ** j * math.sin(omega * t + phase + j * math.pi / 2)
        if self.poly:
            acc += PolynomialSignal(self.poly).derivative(t, j)
        return acc


SignalModel = PolynomialSignal | RampCosine | SinusoidMix

#: sin t + cos 2t + sin 3t + cos 4t (cosines written as shifted sines).
HARMONIC_MIX = SinusoidMix(
    terms=(
        (1.0, 1.0, 0.0),
        (1.0, 2.0, math.pi / 2),
        (1.0, 3.0, 0.0),
        (1.0, 4.0, math.pi / 2),
    )
)


def truth(signal: SignalModel, t: float, up_to: int) -> tuple[float, ...]:
    """Exact derivatives (f0(t), f0'(t), ..., f0^(up_to)(t)).

    ``up_to`` is capped at `MAX_DERIVATIVE`; beyond that the closed forms
    have not been validated.
    """
    if up_to > MAX_DERIVATIVE:
        raise ValueError(f"derivatives validated only up to order {MAX_DERIVATIVE}")
    return tuple(signal.derivative(t, j) for j in range(up_to + 1))


# ---------------------------------------------------------------------------
# noise models


@dataclass(frozen=True)
class NoNoise:
    def sampler(self) -> Callable[[float], float]:
        return lambda t: 0.0


@dataclass(frozen=True)
class SinusoidNoise:
    """amplitude * cos(omega * t)."""

    amplitude: float
    omega: float

    def sampler(self) -> Callable[[float], float]:
        amp, om = self.amplitude, self.omega
        return lambda t: amp * math.cos(om * t)


@dataclass(frozen=True)
class GaussianNoise:
    """I.i.d. N(0, sigma^2) draws, one per sample, deterministic per seed."""

    sigma: float
    seed: int

    def sampler(self) -> Callable[[float], float]:
        gen = SplitMix64(self.seed)
        sigma = self.sigma
        return lambda t: sigma * gen.next_gauss()


@dataclass(frozen=True)
class SumNoise:
    terms: tuple["NoiseModel", ...]

    def sampler(self) -> Callable[[float], float]:
        fns = [term.sampler() for term in self.terms]
        return lambda t: sum(fn(t) for fn in fns)


NoiseModel = NoNoise | SinusoidNoise | GaussianNoise | SumNoise


def reseed(noise: NoiseModel, seed: int) -> NoiseModel:
    """Copy of ``noise`` with every Gaussian component reseeded."""
    if isinstance(noise, GaussianNoise):
        return GaussianNoise(sigma=noise.sigma, seed=seed)
    if isinstance(noise, SumNoise):
        return SumNoise(tuple(reseed(term, seed) for term in noise.terms))
    return noise
