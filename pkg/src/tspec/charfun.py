"""The entire characteristic function D(k) for the Robin and Dirichlet problems.

D is assembled from the Jost data F(k) = -i[f'(k,0) - h f(k,0)]; its zeros are
the square roots of the transmission eigenvalues. Near k = 0 the odd-difference
terms divided by k are removable 0/0 forms and are evaluated by 4-point
Richardson extrapolation along the ray through k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .jost import DEFAULT_RTOL, jost_at_zero_many
from .potential import Potential

VARIANTS = ("robin", "dirichlet")
K_SMALL_DEFAULT = 1e-3
_RICHARDSON_FACTORS = (4.0, 2.0, 1.5, 1.0)


@dataclass(frozen=True)
class FValue:
    """F(k) = -i[f'(k,0) - h f(k,0)]."""

    k: complex
    value: complex


@dataclass(frozen=True)
class CharFunSample:
    """One sample k -> D(k), tagged with the boundary-condition variant."""

    k: complex
    value: complex
    variant: str
    h: float = 0.0
    error: Optional[str] = None


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}, got {variant!r}")


def eval_F(p: Potential, k, rtol: float = DEFAULT_RTOL) -> FValue:
    f, fp = jost_at_zero_many(p, [k], rtol=rtol)
    return FValue(k=complex(k), value=complex(-1j * (fp[0] - p.h * f[0])))


def _d_from_jost(ks, f_pos, fp_pos, f_neg, fp_neg, variant, h):
    """Assemble D from Jost data at +k and -k. ks must stay away from 0."""
    if variant == "robin":
        big_f_pos = -1j * (fp_pos - h * f_pos)
        big_f_neg = -1j * (fp_neg - h * f_neg)
        return (big_f_pos + big_f_neg) / 2j - (h / (2.0 * ks)) * (big_f_pos - big_f_neg)
    return (f_pos - f_neg) / (2j * ks)


def _neville(zs, vals, z):
    """Polynomial interpolation through (zs, vals) evaluated at z."""
    v = list(vals)
    n = len(v)
    for m in range(1, n):
        for i in range(n - m):
            v[i] = ((z - zs[i + m]) * v[i] + (zs[i] - z) * v[i + 1]) / (zs[i] - zs[i + m])
    return v[0]


def _eval_d_small(p: Potential, k: complex, variant: str, rtol: float, k_small: float) -> complex:
    """D(k) for |k| < k_small via extrapolation of the even function behind the 0/0.

    The odd-difference/k terms are even analytic in k, so they are interpolated
    in the variable k^2 from samples at |k| in {4,2,1.5,1}*k_small on the same ray.
    """
    direction = k / abs(k) if abs(k) > 0 else 1.0 + 0j
    nodes = np.array([c * k_small * direction for c in _RICHARDSON_FACTORS], dtype=complex)
    stack = np.concatenate([nodes, -nodes, [k, -k]])
    f, fp = jost_at_zero_many(p, stack, rtol=rtol)
    nf, nfp = f[:4], fp[:4]
    mf, mfp = f[4:8], fp[4:8]
    zs = nodes ** 2
    if variant == "robin":
        big_f_pos = -1j * (nfp - p.h * nf)
        big_f_neg = -1j * (mfp - p.h * mf)
        odd_over_k = (big_f_pos - big_f_neg) / nodes
        fk = -1j * (fp[8] - p.h * f[8])
        fmk = -1j * (fp[9] - p.h * f[9])
        even = (fk + fmk) / 2j
        return complex(even - (p.h / 2.0) * _neville(zs, odd_over_k, k * k))
    d_nodes = (nf - mf) / (2j * nodes)
    return complex(_neville(zs, d_nodes, k * k))


def eval_D_many(p: Potential, ks, variant: str = "robin", rtol: float = DEFAULT_RTOL,
                k_small: float = K_SMALL_DEFAULT) -> np.ndarray:
    """Vectorized D over an array of k."""
    _check_variant(variant)
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    out = np.empty(ks.shape, dtype=complex)
    small = np.abs(ks) < k_small
    if np.any(~small):
        idx = np.nonzero(~small)[0]
        stack = np.concatenate([ks[idx], -ks[idx]])
        f, fp = jost_at_zero_many(p, stack, rtol=rtol)
        nsel = idx.size
        out[idx] = _d_from_jost(ks[idx], f[:nsel], fp[:nsel], f[nsel:], fp[nsel:], variant, p.h)
    for i in np.nonzero(small)[0]:
        out[i] = _eval_d_small(p, complex(ks[i]), variant, rtol, k_small)
    return out


def eval_D(p: Potential, k, variant: str = "robin", rtol: float = DEFAULT_RTOL,
           k_small: float = K_SMALL_DEFAULT) -> CharFunSample:
    """D(k) for one k, with the stable small-k path for the removable 1/k terms."""
    value = eval_D_many(p, [k], variant=variant, rtol=rtol, k_small=k_small)[0]
    return CharFunSample(k=complex(k), value=complex(value), variant=variant, h=p.h)


def sample_D_grid(p: Potential, variant: str, region, n: int, m: int,
                  rtol: float = DEFAULT_RTOL, threads: int = 1):
    """Evaluate D on an n x m grid over region = (sigma0, sigma1, tau0, tau1).

    Per-point failures are recorded on the sample rather than raised; used by
    root-finder seeding and the CLI field export.
    """
    _check_variant(variant)
    s0, s1, t0, t1 = (float(v) for v in region)
    sigmas = np.linspace(s0, s1, n)
    taus = np.linspace(t0, t1, m)
    points = (sigmas[:, None] + 1j * taus[None, :]).ravel()

    def eval_chunk(chunk):
        try:
            vals = eval_D_many(p, chunk, variant=variant, rtol=rtol)
            return [CharFunSample(k=complex(c), value=complex(v), variant=variant, h=p.h)
                    for c, v in zip(chunk, vals)]
        except Exception:
            samples = []
            for c in chunk:
                try:
                    v = eval_D_many(p, [c], variant=variant, rtol=rtol)[0]
                    samples.append(CharFunSample(k=complex(c), value=complex(v), variant=variant, h=p.h))
                except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                    nan = complex(float("nan"), float("nan"))
                    samples.append(CharFunSample(k=complex(c), value=nan, variant=variant,
                                                 h=p.h, error=f"{type(exc).__name__}: {exc}"))
            return samples

    if threads > 1 and points.size > 16:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(points, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(eval_chunk, chunks))
        samples = [s for part in parts for s in part]
    else:
        samples = eval_chunk(points)
    return samples


class DEvaluator:
    """Cached vectorized D(k) evaluator at a fixed tolerance.

    Pure and reentrant: repeated k hit the cache, so adaptive boundary
    refinement and box subdivision do not re-integrate shared points.
    """

    def __init__(self, p: Potential, variant: str = "robin", rtol: float = DEFAULT_RTOL,
                 k_small: float = K_SMALL_DEFAULT):
        _check_variant(variant)
        self.potential = p
        self.variant = variant
        self.rtol = rtol
        self.k_small = k_small
        self._cache: dict = {}

    def __call__(self, ks):
        scalar = np.isscalar(ks) or getattr(ks, "ndim", 1) == 0
        arr = np.atleast_1d(np.asarray(ks, dtype=complex))
        out = np.empty(arr.shape, dtype=complex)
        missing = []
        missing_idx = []
        for i, k in enumerate(arr):
            kk = complex(k)
            hit = self._cache.get(kk)
            if hit is None:
                missing.append(kk)
                missing_idx.append(i)
            else:
                out[i] = hit
        if missing:
            vals = eval_D_many(self.potential, missing, variant=self.variant,
                               rtol=self.rtol, k_small=self.k_small)
            for kk, v, i in zip(missing, vals, missing_idx):
                self._cache[kk] = complex(v)
                out[i] = v
        return complex(out[0]) if scalar else out

    def with_tolerance(self, rtol: float) -> "DEvaluator":
        return DEvaluator(self.potential, self.variant, rtol=rtol, k_small=self.k_small)


def make_d_evaluator(p: Potential, variant: str = "robin", rtol: float = DEFAULT_RTOL) -> DEvaluator:
    return DEvaluator(p, variant, rtol=rtol)
