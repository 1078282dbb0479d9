"""Measurement ensembles: entry distributions, moment constants, sampling.

A measurement vector a in R^d or C^d has i.i.d. entries drawn from a
mean-zero symmetric scalar law. In the complex case each entry is
(1/sqrt(2)) * (u + i*v) with u, v independent draws of the same law.
The rank-one measurement is A = a a*.

For such ensembles the two moment identities

    E(A)            = tau1 * I
    E((x* A x) A)   = tau2 ||x||^2 I + tau3 x x* + tau4 diag(|x_i|^2)

hold with constants determined by the entry moments m2 = E u^2 and
m4 = E u^4.  The closed forms used here are gated behind the Monte-Carlo
oracles in :mod:`phasekit.verify`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def as_rng(seed: SeedLike) -> np.random.Generator:
    """Coerce an int / SeedSequence / Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class Field(Enum):
    REAL = "real"
    COMPLEX = "complex"


@dataclass(frozen=True)
class EntryDistribution:
    """A scalar entry law with declared second and fourth absolute moments.

    The sampler maps (rng, shape) to a float64 array. The law must be
    mean-zero and symmetric; m2 > 0 and m4 >= m2^2 are enforced.
    """

    name: str
    m2: float
    m4: float
    sampler: Callable[[np.random.Generator, tuple], np.ndarray] = field(repr=False)

    def __post_init__(self):
        if not (self.m2 > 0):
            raise ValueError(f"entry distribution {self.name!r}: m2 must be > 0, got {self.m2}")
        if self.m4 < self.m2 ** 2:
            raise ValueError(
                f"entry distribution {self.name!r}: m4 >= m2^2 required "
                f"(got m4={self.m4}, m2^2={self.m2 ** 2})"
            )


GAUSSIAN = EntryDistribution("gaussian", 1.0, 3.0, lambda rng, shape: rng.standard_normal(shape))
UNIFORM = EntryDistribution("uniform", 1.0 / 3.0, 1.0 / 5.0, lambda rng, shape: rng.uniform(-1.0, 1.0, shape))
TERNARY = EntryDistribution(
    "ternary", 2.0 / 3.0, 2.0 / 3.0, lambda rng, shape: rng.integers(-1, 2, shape).astype(np.float64)
)

BUILTIN_ENTRIES = {e.name: e for e in (GAUSSIAN, UNIFORM, TERNARY)}


def custom_entry(name: str, sampler: Callable, m2: float, m4: float) -> EntryDistribution:
    """Declare a custom entry law. Moments are trusted only after the
    Monte-Carlo condition check in :func:`phasekit.verify.mc_condition_residual`."""
    return EntryDistribution(name, float(m2), float(m4), sampler)


def entry_moments(entry: EntryDistribution) -> tuple[float, float]:
    """Exact (m2, m4) of one real entry draw."""
    return entry.m2, entry.m4


@dataclass(frozen=True)
class MomentProfile:
    """The ensemble constants tau1..tau4 together with the positivity checks
    tau1 > 0, tau2 > 0, tau3 > 0 and tau3 + tau4 > 0."""

    tau1: float
    tau2: float
    tau3: float
    tau4: float

    def validate(self) -> "MomentProfile":
        checks = [
            ("tau1 > 0", self.tau1 > 0),
            ("tau2 > 0", self.tau2 > 0),
            ("tau3 > 0", self.tau3 > 0),
            ("tau3 + tau4 > 0", self.tau3 + self.tau4 > 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ValueError(f"moment profile violates {name}: {self}")
        return self


@dataclass(frozen=True)
class Ensemble:
    """A measurement ensemble: field plus i.i.d. entry law."""

    field: Field
    entry: EntryDistribution

    def to_dict(self) -> dict:
        return {"field": self.field.value, "entry": self.entry.name}

    @staticmethod
    def from_dict(desc: dict) -> "Ensemble":
        try:
            fld = Field(desc["field"])
            entry = BUILTIN_ENTRIES[desc["entry"]]
        except (KeyError, ValueError) as exc:
            raise ValueError(f"unknown ensemble descriptor {desc!r}") from exc
        return Ensemble(fld, entry)


@dataclass(frozen=True)
class MeasurementSet:
    """N sampled measurement vectors a_j, stored as the rows of `vectors`."""

    field: Field
    vectors: np.ndarray  # shape (N, d)

    @property
    def N(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


def moment_profile(ensemble: Ensemble) -> MomentProfile:
    """Closed-form tau1..tau4 for an i.i.d. symmetric entry ensemble.

    Real field:    (m2, m2^2, 2 m2^2, m4 - 3 m2^2)
    Complex field: (m2, m2^2,   m2^2, (m4 - 3 m2^2) / 2)
    """
    m2, m4 = entry_moments(ensemble.entry)
    if ensemble.field is Field.REAL:
        profile = MomentProfile(m2, m2 ** 2, 2.0 * m2 ** 2, m4 - 3.0 * m2 ** 2)
    else:
        profile = MomentProfile(m2, m2 ** 2, m2 ** 2, (m4 - 3.0 * m2 ** 2) / 2.0)
    return profile.validate()


@dataclass(frozen=True)
class DerivedConstants:
    """alpha, beta, alpha_hat and the basin radius epsilon0 of a profile."""

    profile: MomentProfile
    alpha: float
    beta: float
    alpha_hat: float
    epsilon0: float

    def theoretical_R(self, d: int, N: int, delta: float | None = None) -> float:
        """Smoothness constant R(d, N, delta); a proof artifact, exposed for
        inspection only.  Requires 0 < delta < beta (default beta/10)."""
        return self.r_bound_terms(d, N, delta)["R"]

    def r_bound_terms(self, d: int, N: int, delta: float | None = None) -> dict:
        """Both branches of the R bound, plus the variant without the log N
        factor that appears in one statement of the bound. Diagnostics only."""
        if delta is None:
            delta = self.beta / 10.0
        if not (0.0 < delta < self.beta):
            raise ValueError(f"delta must satisfy 0 < delta < beta={self.beta}, got {delta}")
        t1 = 96.0 * self.alpha_hat ** 2 * (1.0 + delta ** 2) / (self.beta - delta)
        tail = 60.0 * d * self.profile.tau1 * (1.0 + delta) * self.epsilon0 ** 2
        t2 = 270.0 * self.alpha_hat * (1.0 + delta) + tail * math.log(N)
        t2_no_log = 270.0 * self.alpha_hat * (1.0 + delta) + tail
        return {
            "delta": delta,
            "curvature_term": t1,
            "smoothness_term": t2,
            "smoothness_term_no_logN": t2_no_log,
            "R": max(t1, t2),
            "R_no_logN": max(t1, t2_no_log),
        }


def derived_constants(profile: MomentProfile) -> DerivedConstants:
    """alpha = tau2+tau3-(tau4)_-, beta = tau3-(tau4)_-, alpha_hat = tau2+tau3+|tau4|,
    epsilon0 = (10/(27 alpha)) * (sqrt(36 tau4^2 + 27 alpha beta / 10) - 6 |tau4|)."""
    profile.validate()
    t4_minus = max(-profile.tau4, 0.0)
    alpha = profile.tau2 + profile.tau3 - t4_minus
    beta = profile.tau3 - t4_minus
    alpha_hat = profile.tau2 + profile.tau3 + abs(profile.tau4)
    if not (0.0 < beta <= alpha):
        raise ValueError(f"profile yields invalid constants: alpha={alpha}, beta={beta}")
    eps0 = (10.0 / (27.0 * alpha)) * (
        math.sqrt(36.0 * profile.tau4 ** 2 + 27.0 * alpha * beta / 10.0) - 6.0 * abs(profile.tau4)
    )
    return DerivedConstants(profile, alpha, beta, alpha_hat, eps0)


def sample_entries(ensemble: Ensemble, shape: tuple, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. draws of `shape`; complex draws are (u + i v)/sqrt(2)."""
    if ensemble.field is Field.REAL:
        return ensemble.entry.sampler(rng, shape)
    u = ensemble.entry.sampler(rng, shape)
    v = ensemble.entry.sampler(rng, shape)
    return (u + 1j * v) / math.sqrt(2.0)


def sample_measurements(ensemble: Ensemble, N: int, d: int, seed: SeedLike) -> MeasurementSet:
    """N measurement vectors of dimension d. Identical seeds give identical bits."""
    if N < 1 or d < 1:
        raise ValueError(f"need N >= 1 and d >= 1, got N={N}, d={d}")
    rng = as_rng(seed)
    return MeasurementSet(ensemble.field, sample_entries(ensemble, (N, d), rng))
