"""Real potentials q on [0,1] with the Robin parameter h, and their derived scalars.

Grid potentials are interpreted as natural cubic splines through uniform
samples; polynomial and constant kinds are exact. All downstream formulas
consume the scalar bundle produced by :func:`derive_scalars`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError

KINDS = ("polynomial", "grid", "constant")

_QUAD_PANELS = 32       # composite Gauss-Legendre panels
_QUAD_ORDER = 8         # nodes per panel
_CROSSCHECK_RTOL = 1e-10


@dataclass(frozen=True)
class Potential:
    """A real potential on [0,1] plus the boundary parameter h.

    Exactly one payload field is meaningful, selected by ``kind``:
    ``coeffs`` (ascending degree) for polynomials, ``samples`` (uniform on
    [0,1], natural cubic spline) for grids, ``value`` for constants.
    Instances are immutable and safe to share between workers.
    """

    kind: str
    h: float = 0.0
    coeffs: tuple = ()
    samples: tuple = ()
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if self.kind == "polynomial" and len(self.coeffs) == 0:
            raise DomainError("polynomial potential needs at least one coefficient")
        if self.kind == "grid" and len(self.samples) < 4:
            raise DomainError("grid potential needs at least 4 samples")
        payload = self.coeffs + self.samples + (self.value, self.h)
        if not np.all(np.isfinite(payload)):
            raise DomainError("potential data must be finite and real")

    @classmethod
    def polynomial(cls, coeffs, h=0.0):
        return cls(kind="polynomial", h=float(h), coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def grid(cls, samples, h=0.0):
        return cls(kind="grid", h=float(h), samples=tuple(float(s) for s in samples))

    @classmethod
    def constant(cls, value, h=0.0):
        return cls(kind="constant", h=float(h), value=float(value))

    @classmethod
    def from_dict(cls, spec: dict) -> "Potential":
        """Build from the run-config representation (see External Interfaces)."""
        if not isinstance(spec, dict) or "kind" not in spec:
            raise DomainError("potential spec must be a mapping with a 'kind' key")
        kind = spec["kind"]
        allowed = {
            "polynomial": {"kind", "coeffs", "h"},
            "grid": {"kind", "samples", "h"},
            "constant": {"kind", "value", "h"},
        }.get(kind)
        if allowed is None:
            raise DomainError(f"unknown potential kind {kind!r}")
        unknown = set(spec) - allowed
        if unknown:
            raise DomainError(f"unknown potential keys: {sorted(unknown)}")
        h = float(spec.get("h", 0.0))
        if kind == "polynomial":
            return cls.polynomial(spec.get("coeffs", ()), h=h)
        if kind == "grid":
            return cls.grid(spec.get("samples", ()), h=h)
        return cls.constant(spec.get("value", 0.0), h=h)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "h": self.h}
        if self.kind == "polynomial":
            out["coeffs"] = list(self.coeffs)
        elif self.kind == "grid":
            out["samples"] = list(self.samples)
        else:
            out["value"] = self.value
        return out

    @cached_property
    def _spline(self) -> CubicSpline:
        x = np.linspace(0.0, 1.0, len(self.samples))
        return CubicSpline(x, np.asarray(self.samples), bc_type="natural")

    @cached_property
    def _eval(self) -> Callable:
        """Unchecked vectorized evaluator used by quadrature and ODE stepping."""
        if self.kind == "constant":
            v = self.value
            return lambda x: v * np.ones_like(np.asarray(x, dtype=float))
        if self.kind == "polynomial":
            c = np.asarray(self.coeffs)
            return lambda x: np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)
        spline = self._spline
        return lambda x: spline(np.asarray(x, dtype=float))

    def derivative_at(self, x: float, order: int = 1) -> float:
        """q^(order)(x) from the analytic form (polynomial/constant) or the spline."""
        if self.kind == "constant":
            return 0.0 if order >= 1 else self.value
        if self.kind == "polynomial":
            c = np.polynomial.polynomial.polyder(np.asarray(self.coeffs), order) if order else np.asarray(self.coeffs)
            if c.size == 0:
                return 0.0
            return float(np.polynomial.polynomial.polyval(x, c))
        return float(self._spline(x, nu=order)) if order <= 3 else 0.0


@dataclass(frozen=True)
class PotentialScalars:
    """Derived scalars every downstream formula consumes.

    ``m_order`` is ``(m, q^(m)(1))`` for the smallest m with a nonvanishing
    endpoint derivative, or None when none is detectable (e.g. q identically 0).
    """

    omega: float
    q_at_1: float
    dq_at_1: float
    q_at_0: float
    dq_at_0: float
    q_sq_integral: float
    m_order: Optional[tuple]
    h: float = 0.0


def evaluate_q(p: Potential, x):
    """Evaluate q at x in [0,1] under the potential's declared interpretation."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < -1e-12) or np.any(xa > 1 + 1e-12):
        raise DomainError(f"x={x} outside [0,1]")
    out = p._eval(np.clip(xa, 0.0, 1.0))
    return float(out) if np.isscalar(x) or xa.ndim == 0 else out


def _quad_panels(p: Potential) -> int:
    """Panel count, knot-aligned for grid kinds so spline kinks sit on edges."""
    if p.kind != "grid":
        return _QUAD_PANELS
    nint = len(p.samples) - 1
    return nint * max(1, -(-_QUAD_PANELS // nint))


def _gauss_composite(f, panels: int, order: int) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    mids = 0.5 * (edges[:-1] + edges[1:])
    xs = (mids[:, None] + half * nodes[None, :]).ravel()
    ws = np.tile(weights * half, panels)
    return float(ws @ f(xs))


def _simpson_composite(f, n_intervals: int) -> float:
    xs = np.linspace(0.0, 1.0, n_intervals + 1)
    ys = f(xs)
    h = xs[1] - xs[0]
    return float(h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum()))


def _detect_m_order(p: Potential) -> Optional[tuple]:
    """Smallest m with q^(m)(1) != 0, with its value."""
    if p.kind == "constant":
        return (0, p.value) if abs(p.value) > 0.0 else None
    if p.kind == "polynomial":
        scale = max(1.0, float(np.max(np.abs(p.coeffs))))
        for m in range(len(p.coeffs)):
            val = p.derivative_at(1.0, order=m) if m else float(p._eval(1.0))
            if abs(val) > 1e-11 * scale * max(1.0, float(math.factorial(m))):
                return (m, val)
        return None
    # Spline derivatives are approximate; only orders 0..3 are meaningful.
    scale = max(1.0, float(np.max(np.abs(p.samples))))
    for m in range(4):
        val = float(p._spline(1.0, nu=m)) if m else float(p._eval(1.0))
        if abs(val) > 1e-7 * scale:
            return (m, val)
    return None


def derive_scalars(p: Potential) -> PotentialScalars:
    """Compute the scalar bundle (omega, endpoint values/derivatives, smoothness order).

    omega and the q^2 integral come from a fixed composite Gauss-Legendre rule
    and are cross-checked against composite Simpson at doubled resolution.
    """
    if p.kind == "constant":
        c = p.value
        return PotentialScalars(
            omega=c, q_at_1=c, dq_at_1=0.0, q_at_0=c, dq_at_0=0.0,
            q_sq_integral=c * c, m_order=(0, c) if c != 0.0 else None, h=p.h,
        )
    q = p._eval
    panels = _quad_panels(p)
    omega = _gauss_composite(q, panels, _QUAD_ORDER)
    q_sq = _gauss_composite(lambda x: q(x) ** 2, panels, _QUAD_ORDER)
    n_check = 2 * panels * _QUAD_ORDER
    omega_check = _simpson_composite(q, n_check)
    q_sq_check = _simpson_composite(lambda x: q(x) ** 2, n_check)
    scale = max(1.0, abs(omega), q_sq)
    if abs(omega - omega_check) > _CROSSCHECK_RTOL * scale or abs(q_sq - q_sq_check) > _CROSSCHECK_RTOL * scale:
        warnings.warn(
            f"quadrature cross-check disagreement: omega {omega!r} vs {omega_check!r}, "
            f"q^2 {q_sq!r} vs {q_sq_check!r}",
            stacklevel=2,
        )
    return PotentialScalars(
        omega=omega,
        q_at_1=float(q(1.0)),
        dq_at_1=p.derivative_at(1.0),
        q_at_0=float(q(0.0)),
        dq_at_0=p.derivative_at(0.0),
        q_sq_integral=q_sq,
        m_order=_detect_m_order(p),
        h=p.h,
    )


def q_constants(s: PotentialScalars):
    """The four correction constants entering the refined eigenvalue asymptotics.

    Q1, Q2 drive the Robin expansions; Q3, Q4 the Dirichlet ones.
    """
    h, w = s.h, s.omega
    q1 = s.dq_at_1 - s.q_at_1 * w - 4.0 * h * s.q_at_1
    q2 = -s.dq_at_0 + s.q_sq_integral + s.q_at_0 * w - w ** 3 / 6.0 + 4.0 * h * (s.q_at_0 + w * h)
    q3 = -s.dq_at_1 + s.q_at_1 * w
    q4 = -s.dq_at_0 + s.q_at_0 * w - s.q_sq_integral + w ** 3 / 6.0
    return q1, q2, q3, q4
