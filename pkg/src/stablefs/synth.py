"""Synthetic traces with planted informative features.

The generator builds a latent load signal (periodic or flash-crowd shaped,
echoing how service testbeds are driven), derives informative feature
columns as distinct monotone transforms of that load, optionally adds
noisy copies of them, fills the rest with white noise, and produces a
target as a fixed nonlinear function of the informative columns. Because
the planted structure is known, desk-scale experiments can check ground
truth recovery exactly.

Returned matrices are pre-scaling; callers apply :func:`stablefs.trace.preprocess`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec
from .trace import DesignMatrix, FeatureId


@dataclass(frozen=True)
class PeriodicLoad:
    """Sinusoidally modulated load level."""

    period_s: float = 600.0
    amplitude: float = 0.8
    base: float = 1.0


@dataclass(frozen=True)
class FlashCrowdLoad:
    """Base load with randomly timed surges.

    Each event ramps to the peak within a minute, holds for a minute, then
    decays back over four minutes; overlapping events take the maximum.
    ``event_rate`` is in events per hour of 1-second samples.
    """

    event_rate: float = 10.0
    base: float = 1.0
    peak: float = 5.0


RAMP_S = 60
HOLD_S = 60
DECAY_S = 240


@dataclass(frozen=True)
class SynthSpec:
    n_features: int = 100
    m_samples: int = 2048
    n_informative: int = 5
    n_redundant: int = 10
    noise_sigma: float = 0.05
    load_pattern: PeriodicLoad | FlashCrowdLoad = field(default_factory=PeriodicLoad)
    seed: int = 0

    def __post_init__(self):
        if self.n_features < 1 or self.m_samples < 64:
            raise InvalidSpec(
                f"need n_features >= 1 and m_samples >= 64, got "
                f"{self.n_features}, {self.m_samples}")
        if self.n_informative < 0 or self.n_redundant < 0:
            raise InvalidSpec("informative and redundant counts must be non-negative")
        if self.n_informative + self.n_redundant > self.n_features:
            raise InvalidSpec(
                f"{self.n_informative} informative + {self.n_redundant} redundant "
                f"exceed {self.n_features} features")
        if self.n_redundant > 0 and self.n_informative == 0:
            raise InvalidSpec("redundant features need informative parents")
        if self.noise_sigma < 0:
            raise InvalidSpec(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def informative_indices(self) -> tuple[int, ...]:
        return tuple(range(self.n_informative))

    @property
    def redundant_indices(self) -> tuple[int, ...]:
        return tuple(range(self.n_informative, self.n_informative + self.n_redundant))


def latent_load(spec: SynthSpec) -> np.ndarray:
    """The latent per-second load level L(t), t = 1..m."""
    m = spec.m_samples
    t = np.arange(1, m + 1, dtype=np.float64)
    pat = spec.load_pattern
    if isinstance(pat, PeriodicLoad):
        return pat.base + pat.amplitude * np.sin(2.0 * np.pi * t / pat.period_s)
    if isinstance(pat, FlashCrowdLoad):
        rng = np.random.default_rng([spec.seed, 1])
        p_event = pat.event_rate / 3600.0
        events = np.flatnonzero(rng.random(m) < p_event)
        profile = np.concatenate([
            np.linspace(0.0, 1.0, RAMP_S, endpoint=False),
            np.ones(HOLD_S),
            np.linspace(1.0, 0.0, DECAY_S, endpoint=False),
        ])
        envelope = np.zeros(m)
        for s in events:
            stop = min(m, s + profile.size)
            seg = profile[: stop - s]
            envelope[s:stop] = np.maximum(envelope[s:stop], seg)
        return pat.base + (pat.peak - pat.base) * envelope
    raise InvalidSpec(f"unknown load pattern {type(pat).__name__}")


# monotone transform bank for informative columns; gentle curvature only,
# so the planted load shape keeps its high mean absolute deviation after
# min-max scaling. The per-index input scale keeps cycling columns distinct.
_TRANSFORMS = (
    lambda x: x,
    np.tanh,
    np.arcsinh,
    np.arctan,
    lambda x: x * (1.0 + np.abs(x) / 4.0),
    lambda x: x / (1.0 + np.abs(x) / 4.0),
)

# nonlinear target contribution bank
_TARGET_TERMS = (
    lambda x: x,
    lambda x: x ** 2,
    lambda x: np.abs(x) ** 1.5,
    np.tanh,
)


def generate(spec: SynthSpec) -> DesignMatrix:
    """Produce a raw (pre-scaling) planted trace for the given spec."""
    m, n = spec.m_samples, spec.n_features
    load = latent_load(spec)
    feat_rng = np.random.default_rng([spec.seed, 2])
    noise_rng = np.random.default_rng([spec.seed, 3])
    target_rng = np.random.default_rng([spec.seed, 4])

    columns = np.empty((m, n))
    names = []

    # features are noisy views of clean latent signals; the target is built
    # from the clean signals so selected subsets and the full feature set
    # face the same irreducible noise
    clean_signals = []
    for j in range(spec.n_informative):
        g = _TRANSFORMS[j % len(_TRANSFORMS)]
        scale = 1.0 + 0.5 * j
        signal = g(scale * load)
        clean_signals.append(signal)
        columns[:, j] = signal + spec.noise_sigma * feat_rng.standard_normal(m)
        names.append(f"sig{j:03d}")

    for r, j in enumerate(spec.redundant_indices):
        parent = clean_signals[r % spec.n_informative]
        columns[:, j] = parent + spec.noise_sigma * feat_rng.standard_normal(m)
        names.append(f"echo{r:03d}")

    first_noise = spec.n_informative + spec.n_redundant
    for j in range(first_noise, n):
        columns[:, j] = noise_rng.random(m)
        names.append(f"rand{j - first_noise:04d}")

    if spec.n_informative == 0:
        y_clean = np.full(m, 1.0)
    else:
        y_clean = np.zeros(m)
        for j, signal in enumerate(clean_signals):
            h = _TARGET_TERMS[j % len(_TARGET_TERMS)]
            y_clean = y_clean + (2.0 ** -j) * h(signal)
    y_scale = float(np.std(y_clean))
    y = y_clean + spec.noise_sigma * y_scale * target_rng.standard_normal(m)

    feature_ids = tuple(FeatureId(index=j, name=name) for j, name in enumerate(names))
    return DesignMatrix(values=columns, feature_ids=feature_ids,
                        targets=y, target_name="y")
