"""Nonconvex objective, gradient, phase-aligned distance and the descent loop.

The objective is E(z) = (1/2N) sum_j (|<a_j, z>|^2 - y_j)^2 with gradient

    g(z) = (1/N) sum_j (|<a_j, z>|^2 - y_j) <a_j, z> a_j

fixed by the convention that the real directional derivative of E along a
direction u equals 2 Re<u, g>. The same formulas serve both fields.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .ensembles import Field, MeasurementSet


@dataclass(frozen=True)
class FixedStep:
    xi: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"fixed step size must be positive, got {self.xi}")


@dataclass(frozen=True)
class BarzilaiBorwein:
    """BB stepping; first_step/fallback_step default to 0.1/||g(z0)||."""

    first_step: Optional[float] = None
    fallback_step: Optional[float] = None


StepMode = Union[FixedStep, BarzilaiBorwein]


class SolveStatus(Enum):
    GRAD_TOLERANCE_MET = "grad_tolerance_met"
    MAX_ITERS = "max_iters"
    NON_FINITE = "non_finite"


@dataclass(frozen=True)
class SolverConfig:
    step_mode: StepMode = field(default_factory=BarzilaiBorwein)
    max_iters: int = 2000
    grad_norm_tol: float = 1e-16
    trace: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class AlignedDistance:
    theta: float   # in [0, 2*pi)
    value: float   # min over theta of ||z - x e^{i theta}||


@dataclass
class SolveReport:
    final_z: np.ndarray
    iterations: int
    status: SolveStatus
    objectives: Optional[list] = None
    grad_norms: Optional[list] = None
    rel_errors: Optional[list] = None

    def to_dict(self, include_traces: bool = True) -> dict:
        out = {
            "iterations": self.iterations,
            "status": self.status.value,
            "final_z_real": np.real(self.final_z).tolist(),
        }
        if np.iscomplexobj(self.final_z):
            out["final_z_imag"] = np.imag(self.final_z).tolist()
        if include_traces and self.objectives is not None:
            out["objectives"] = list(self.objectives)
            out["grad_norms"] = list(self.grad_norms)
            if self.rel_errors is not None:
                out["rel_errors"] = list(self.rel_errors)
        return out


def objective(z: np.ndarray, mset: MeasurementSet, y: np.ndarray) -> float:
    """(1/2N) sum_j (|<a_j, z>|^2 - y_j)^2."""
    z = np.asarray(z)
    if z.shape != (mset.d,):
        raise ValueError(f"z has shape {z.shape}, expected ({mset.d},)")
    w = mset.vectors.conj() @ z
    r = np.abs(w) ** 2 - y
    return float(np.sum(r ** 2)) / (2.0 * mset.N)


def gradient(z: np.ndarray, mset: MeasurementSet, y: np.ndarray) -> np.ndarray:
    """(1/N) sum_j (|w_j|^2 - y_j) w_j a_j with w_j = <a_j, z>."""
    z = np.asarray(z)
    if z.shape != (mset.d,):
        raise ValueError(f"z has shape {z.shape}, expected ({mset.d},)")
    w = mset.vectors.conj() @ z
    coeff = (np.abs(w) ** 2 - y) * w
    return (coeff @ mset.vectors) / mset.N


def phase_align(z: np.ndarray, x: np.ndarray) -> AlignedDistance:
    """theta minimizing ||z - x e^{i theta}|| and the minimal value.

    Complex inputs: theta = arg(x* z); real inputs: theta in {0, pi}.
    If x* z = 0 the angle is defined as 0."""
    z = np.asarray(z)
    x = np.asarray(x)
    if z.shape != x.shape:
        raise ValueError(f"shape mismatch {z.shape} vs {x.shape}")
    c = np.vdot(x, z)  # x* z
    if np.iscomplexobj(z) or np.iscomplexobj(x):
        theta = cmath.phase(c) % (2.0 * math.pi) if c != 0 else 0.0
        value = np.linalg.norm(z - x * cmath.exp(1j * theta))
    else:
        theta = 0.0 if c.real >= 0 else math.pi
        value = np.linalg.norm(z - x if c.real >= 0 else z + x)
    return AlignedDistance(float(theta), float(value))


def dist(z: np.ndarray, x: np.ndarray) -> float:
    """Phase-invariant distance min_theta ||z - x e^{i theta}||."""
    return phase_align(z, x).value


def bb_step(s: np.ndarray, g: np.ndarray, fallback: float) -> float:
    """xi = |Re<s, g>| / ||g||^2; degenerate cases return `fallback`."""
    gg = float(np.real(np.vdot(g, g)))
    if gg == 0.0:
        return fallback
    num = abs(float(np.real(np.vdot(s, g))))
    if num == 0.0:
        return fallback
    return num / gg


def solve(
    mset: MeasurementSet,
    y: np.ndarray,
    z0: np.ndarray,
    config: SolverConfig = SolverConfig(),
    ground_truth: Optional[np.ndarray] = None,
) -> SolveReport:
    """Gradient descent z_{k+1} = z_k - xi_k g(z_k) from z0.

    Fixed mode uses a constant step; BB mode uses
    xi_k = |Re<s_k, g_k - g_{k-1}>| / ||g_k - g_{k-1}||^2 with
    s_k = z_k - z_{k-1} (first iteration uses `first_step`).
    Stops when ||g|| < grad_norm_tol or after max_iters updates. A non-finite
    iterate aborts with the last finite one.
    """
    if mset.field is Field.COMPLEX:
        z = np.asarray(z0, dtype=np.complex128).copy()
    else:
        z = np.asarray(z0, dtype=np.float64).copy()
    if z.shape != (mset.d,):
        raise ValueError(f"z0 has shape {z.shape}, expected ({mset.d},)")
    if not np.all(np.isfinite(z)):
        raise ValueError("z0 must be finite")
    y = np.asarray(y, dtype=np.float64)

    x_norm = float(np.linalg.norm(ground_truth)) if ground_truth is not None else None
    objectives = [] if config.trace else None
    grad_norms = [] if config.trace else None
    rel_errors = [] if (config.trace and ground_truth is not None) else None

    def record(zk, gnorm):
        if config.trace:
            objectives.append(objective(zk, mset, y))
            grad_norms.append(gnorm)
            if rel_errors is not None:
                rel_errors.append(dist(zk, ground_truth) / x_norm if x_norm else float("nan"))

    bb = isinstance(config.step_mode, BarzilaiBorwein)
    g = gradient(z, mset, y)
    gnorm = float(np.linalg.norm(g))
    record(z, gnorm)

    if bb:
        first = config.step_mode.first_step
        if first is None:
            first = 0.1 / gnorm if gnorm > 0 else 1.0
        fallback = config.step_mode.fallback_step
        if fallback is None:
            fallback = first

    status = SolveStatus.MAX_ITERS
    iterations = 0
    z_prev = None
    g_prev = None
    for _ in range(config.max_iters):
        if gnorm < config.grad_norm_tol:
            status = SolveStatus.GRAD_TOLERANCE_MET
            break
        if bb:
            if z_prev is None:
                xi = first
            else:
                xi = bb_step(z - z_prev, g - g_prev, fallback)
        else:
            xi = config.step_mode.xi
        z_new = z - xi * g
        if not np.all(np.isfinite(z_new)):
            status = SolveStatus.NON_FINITE
            break
        g_new = gradient(z_new, mset, y)
        if not np.all(np.isfinite(g_new)):
            status = SolveStatus.NON_FINITE
            z = z_new
            iterations += 1
            record(z, float("inf"))
            break
        z_prev, g_prev = z, g
        z, g = z_new, g_new
        gnorm = float(np.linalg.norm(g))
        iterations += 1
        record(z, gnorm)
    else:
        status = SolveStatus.MAX_ITERS
    if status is SolveStatus.MAX_ITERS and gnorm < config.grad_norm_tol:
        status = SolveStatus.GRAD_TOLERANCE_MET

    return SolveReport(z, iterations, status, objectives, grad_norms, rel_errors)
