"""Zeros of analytic functions in rectangles via argument-principle winding counts.

Boxes are counted by accumulating boundary phase with adaptive bisection of
segments whose phase jump exceeds pi/2, subdivided until each holds at most
one zero, then refined by Newton iteration with derivatives from central
complex differences. Results are deduplicated under the k -> -k, k -> k*
symmetry group of the characteristic function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional

import numpy as np

from .errors import BoundaryTooCloseError, DomainError, IndexingConflictError, PhaseResolutionError

_JUMP_TOL = math.pi / 2
_MAX_BOUNDARY_POINTS = 2 ** 14
_MODULUS_FLOOR_REL = 1e-4   # local dip vs neighbors marking a boundary zero
_STUCK_SEGMENT = 1e-9       # unresolvable phase jump across a segment this short
_SPLIT_FRACTIONS = (0.47, 0.53, 0.41, 0.59, 0.5)


@dataclass
class ContourBox:
    """A rectangle in the k-plane with its winding statistics."""

    s0: float
    s1: float
    t0: float
    t1: float
    winding: Optional[int] = None
    boundary_samples: int = 0
    min_boundary_modulus: float = math.inf

    @property
    def width(self) -> float:
        return self.s1 - self.s0

    @property
    def height(self) -> float:
        return self.t1 - self.t0

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.s0 + self.s1), 0.5 * (self.t0 + self.t1))

    def contains(self, k: complex, pad: float = 0.0) -> bool:
        return (self.s0 - pad <= k.real <= self.s1 + pad
                and self.t0 - pad <= k.imag <= self.t1 + pad)


@dataclass
class Eigenvalue:
    """A zero of D with its first-quadrant representative k (lambda = k^2)."""

    k: complex
    lam: complex
    index: Optional[int]
    multiplicity: int
    residual: float
    cls: str
    copies: tuple = ()
    local_scale: float = math.nan
    refined: bool = True
    branch: Optional[int] = None


@dataclass
class ZeroSearchResult:
    zeros: List[Eigenvalue]
    raw_zeros: list
    unresolved: List[ContourBox]
    region: tuple


def _boundary_points(box: ContourBox, spacing: float):
    """Counterclockwise boundary samples including all four corners."""
    pts = []
    corners = [complex(box.s0, box.t0), complex(box.s1, box.t0),
               complex(box.s1, box.t1), complex(box.s0, box.t1)]
    for a, b in zip(corners, corners[1:] + corners[:1]):
        n = max(8, int(math.ceil(abs(b - a) / spacing)))
        seg = a + (b - a) * np.arange(n) / n
        pts.append(seg)
    return np.concatenate(pts)


def _wrapped_jumps(vals: np.ndarray) -> np.ndarray:
    ratio = np.roll(vals, -1) / vals
    return np.angle(ratio)


def winding_count(f: Callable, box: ContourBox, *, jump_tol: float = _JUMP_TOL,
                  max_points: int = _MAX_BOUNDARY_POINTS, spacing: float = 0.2,
                  perturb: bool = True) -> int:
    """Number of zeros of f inside the box, counted with multiplicity.

    Total boundary argument variation divided by 2*pi, sampled adaptively
    until successive-point phase jumps fall below jump_tol; the result must
    round to an integer with gap < 0.25. A boundary running too close to a
    zero triggers up to three outward perturbations of the box.
    """
    base = box
    exhausted = False
    for attempt in range(4):
        exhausted = False
        pts = _boundary_points(box, spacing)
        vals = np.asarray(f(pts), dtype=complex)
        ok = True
        while True:
            mods = np.abs(vals)
            if not np.all(np.isfinite(mods)) or float(mods.min(initial=math.inf)) == 0.0:
                ok = False
                break
            # A zero hugging the boundary shows as a deep dip relative to its
            # neighbors; the global dynamic range along big contours is huge
            # (e^{2|Im k|} growth), so the test must be local.
            neighbor = np.maximum(np.roll(mods, 1), np.roll(mods, -1))
            if float((mods / neighbor).min()) < _MODULUS_FLOOR_REL:
                ok = False
                break
            jumps = _wrapped_jumps(vals)
            bad = np.nonzero(np.abs(jumps) > jump_tol)[0]
            if bad.size == 0:
                break
            nxt = np.roll(pts, -1)
            # A jump that stays ~pi while its segment shrinks to nothing is a
            # zero sitting on the boundary: bisection can never resolve it.
            seg_len = np.abs(nxt[bad] - pts[bad])
            if np.any(seg_len < _STUCK_SEGMENT * (1.0 + np.abs(pts[bad]))):
                ok = False
                break
            if pts.size + bad.size > max_points:
                ok = False
                exhausted = True
                break
            mids = 0.5 * (pts[bad] + nxt[bad])
            new_vals = np.asarray(f(mids), dtype=complex)
            pts = np.insert(pts, bad + 1, mids)
            vals = np.insert(vals, bad + 1, new_vals)
        if ok:
            total = float(_wrapped_jumps(vals).sum()) / (2.0 * math.pi)
            w = int(round(total))
            if abs(total - w) >= 0.25:
                raise PhaseResolutionError(
                    f"winding {total:.4f} does not round cleanly on box "
                    f"[{box.s0},{box.s1}]x[{box.t0},{box.t1}]")
            box.winding = w
            box.boundary_samples = int(pts.size)
            box.min_boundary_modulus = float(np.abs(vals).min())
            if box is not base:
                base.winding = w
                base.boundary_samples = box.boundary_samples
                base.min_boundary_modulus = box.min_boundary_modulus
            return w
        if not perturb:
            if exhausted:
                raise PhaseResolutionError(
                    f"boundary refinement exceeded {max_points} points on box "
                    f"[{box.s0},{box.s1}]x[{box.t0},{box.t1}]")
            raise BoundaryTooCloseError(
                f"zero too close to the boundary of [{box.s0},{box.s1}]x[{box.t0},{box.t1}]")
        delta = 1e-4 * max(base.width, base.height) * (attempt + 1)
        box = ContourBox(base.s0 - delta, base.s1 + delta, base.t0 - delta, base.t1 + delta)
    if exhausted:
        raise PhaseResolutionError(
            f"boundary refinement exceeded {max_points} points near "
            f"[{base.s0},{base.s1}]x[{base.t0},{base.t1}]")
    raise BoundaryTooCloseError(
        f"zero on the boundary of [{base.s0},{base.s1}]x[{base.t0},{base.t1}] "
        "after 3 perturbations")


def newton_refine(f: Callable, z0: complex, *, tol: float = 1e-12, max_iter: int = 50,
                  step_rel: float = 1e-6):
    """Newton iteration with the derivative from central complex differences.

    Two orthogonal difference directions are averaged; analyticity makes them
    consistent and their gap doubles as a derivative error estimate. Returns
    (z, converged, iterations, derivative_gap).
    """
    z = complex(z0)
    best = (math.inf, z)
    grew = 0
    for it in range(1, max_iter + 1):
        d = step_rel * max(1.0, abs(z))
        batch = np.array([z, z + d, z - d, z + 1j * d, z - 1j * d], dtype=complex)
        vals = np.asarray(f(batch), dtype=complex)
        d1 = (vals[1] - vals[2]) / (2.0 * d)
        d2 = (vals[3] - vals[4]) / (2.0 * 1j * d)
        deriv = 0.5 * (d1 + d2)
        gap = abs(d1 - d2)
        if deriv == 0:
            return z, False, it, gap
        dz = -vals[0] / deriv
        z = z + dz
        step = abs(dz)
        if step < tol * max(1.0, abs(z)):
            return z, True, it, gap
        if step < best[0]:
            best = (step, z)
            grew = 0
        else:
            grew += 1
            # Stalled on the evaluation noise floor: accept the best iterate.
            if grew >= 2 and best[0] < 1e-8 * max(1.0, abs(z)):
                return best[1], True, it, gap
    return best[1], False, max_iter, gap


def _line_clear(f, a: complex, b: complex) -> bool:
    """True when no zero of f sits on or hugs the segment [a, b].

    A zero on the line flips the phase by ~pi between the flanking probes no
    matter how coarse the probing is, so a phase-jump criterion is decisive
    where a modulus-only probe is blind.
    """
    n = max(9, int(math.ceil(abs(b - a) / 0.15)))
    pts = a + (b - a) * np.arange(n + 1) / n
    vals = np.asarray(f(pts), dtype=complex)
    mods = np.abs(vals)
    if not np.all(np.isfinite(mods)) or mods.min() == 0.0:
        return False
    # Even-order zeros hide from the wrapped phase (their pi-flip doubles to
    # 2 pi = 0) but dent the log-convexity of |f| along the line.
    dip = mods[1:-1] / np.sqrt(mods[:-2] * mods[2:])
    if dip.size and float(dip.min()) < 0.4:
        return False
    jumps = np.angle(vals[1:] / vals[:-1])
    return bool(np.all(np.abs(jumps) < 0.75 * math.pi))


def newton_refine_many(f: Callable, seeds, *, tol: float = 1e-12, max_iter: int = 30,
                       step_rel: float = 1e-6):
    """Vectorized Newton over many seeds; one stacked evaluation per sweep.

    Returns (roots, converged_mask). Seeds are expected close to simple zeros
    (asymptotic predictions); anything that fails here goes through the boxed
    search instead.
    """
    z = np.asarray(seeds, dtype=complex).copy()
    active = np.ones(z.size, dtype=bool)
    converged = np.zeros(z.size, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        zi = z[idx]
        d = step_rel * np.maximum(1.0, np.abs(zi))
        pts = np.concatenate([zi, zi + d, zi - d, zi + 1j * d, zi - 1j * d])
        vals = np.asarray(f(pts), dtype=complex).reshape(5, idx.size)
        deriv = 0.5 * ((vals[1] - vals[2]) / (2.0 * d) + (vals[3] - vals[4]) / (2j * d))
        dead = deriv == 0
        deriv[dead] = 1.0
        dz = np.where(dead, 0.0, -vals[0] / deriv)
        z[idx] = zi + dz
        done = np.abs(dz) < tol * np.maximum(1.0, np.abs(z[idx]))
        converged[idx[done & ~dead]] = True
        active[idx[done | dead]] = False
    return z, converged


def _split_candidates(f, box: ContourBox):
    """Candidate child partitions along jittered lines, best-validated first.

    Yields line-validated partitions per jitter fraction, then the plain
    midpoint bisection as a last resort; the caller checks winding additivity
    either way.
    """
    thin = box.width / box.height if box.height > 0 else math.inf
    mode = "both"
    if thin > 4.0:
        mode = "s"
    elif thin < 0.25:
        mode = "t"

    def children_for(sm, tm):
        if mode == "s":
            return [ContourBox(box.s0, sm, box.t0, box.t1),
                    ContourBox(sm, box.s1, box.t0, box.t1)]
        if mode == "t":
            return [ContourBox(box.s0, box.s1, box.t0, tm),
                    ContourBox(box.s0, box.s1, tm, box.t1)]
        return [ContourBox(box.s0, sm, box.t0, tm),
                ContourBox(sm, box.s1, box.t0, tm),
                ContourBox(box.s0, sm, tm, box.t1),
                ContourBox(sm, box.s1, tm, box.t1)]

    for frac in _SPLIT_FRACTIONS:
        sm = box.s0 + frac * box.width
        tm = box.t0 + frac * box.height
        clear = True
        if mode in ("s", "both"):
            clear &= _line_clear(f, complex(sm, box.t0), complex(sm, box.t1))
        if clear and mode in ("t", "both"):
            clear &= _line_clear(f, complex(box.s0, tm), complex(box.s1, tm))
        if clear:
            yield children_for(sm, tm)
    yield children_for(box.s0 + 0.5 * box.width, box.t0 + 0.5 * box.height)


def _subdivide(f, box: ContourBox, w_parent: int, spacing: float):
    """Children with windings, accepted only when they sum to the parent.

    A mismatch means a zero straddles a shared edge (counted half on each
    side, or half-pairs rounding to integers); the next jitter fraction moves
    the line off it. Returns None if no candidate partition balances.
    """
    for children in _split_candidates(f, box):
        try:
            ws = [winding_count(f, c, spacing=spacing) for c in children]
        except (PhaseResolutionError, BoundaryTooCloseError):
            continue
        if sum(ws) == w_parent:
            return list(zip(children, ws))
    return None


def _classify(k: complex, tol: float) -> str:
    if abs(k.imag) < tol:
        return "real"
    if abs(k.real) < tol:
        return "imaginary"
    return "quadrant"


def _representative(k: complex) -> complex:
    return complex(abs(k.real), abs(k.imag))


def _local_scale(f, k: complex, radius: float) -> float:
    circle = k + radius * np.exp(2j * math.pi * np.arange(8) / 8)
    return float(np.max(np.abs(np.asarray(f(circle), dtype=complex))))


def find_zeros(f: Callable, region, max_depth: int = 14, *, refine_f: Optional[Callable] = None,
               min_size: float = 1e-7, dedup_tol: float = 1e-6,
               spacing: float = 0.2, symmetry: bool = True) -> ZeroSearchResult:
    """All zeros of f in region = (s0, s1, t0, t1), with multiplicities.

    Boxes are bisected (children must reproduce the parent winding) until each
    holds at most one zero (Newton-refined) or shrinks below min_size (then a
    multiplicity-m cluster is reported). Boxes still holding several zeros at
    max_depth land in the unresolved list. refine_f, when given, is a
    higher-accuracy evaluator used for Newton polish and residuals. With
    symmetry=True results are deduplicated under k -> -k, k -> k* into
    first-quadrant representatives (the symmetry group of the characteristic
    function); pass False for functions without it.
    """
    s0, s1, t0, t1 = (float(v) for v in region)
    if not (s1 > s0 and t1 > t0):
        raise DomainError("region must have positive width and height")
    rf = refine_f or f
    root = ContourBox(s0, s1, t0, t1)
    raw = []
    unresolved: List[ContourBox] = []
    stack = [(root, 0, winding_count(f, root, spacing=spacing))]
    while stack:
        box, depth, w = stack.pop()
        if w == 0:
            continue
        small = max(box.width, box.height) < min_size
        if w == 1:
            z, converged, _, _ = newton_refine(rf, box.center)
            if converged and box.contains(z, pad=0.25 * max(box.width, box.height)):
                raw.append((z, 1, True))
                continue
            if small:
                raw.append((box.center, 1, False))
                continue
        elif small:
            raw.append((box.center, w, False))
            continue
        if depth >= max_depth:
            unresolved.append(box)
            continue
        children = _subdivide(f, box, w, spacing)
        if children is None:
            unresolved.append(box)
            continue
        stack.extend((child, depth + 1, wc) for child, wc in children if wc > 0)

    # Deduplicate identical roots found from adjacent boxes.
    deduped = []
    for z, mult, refined in sorted(raw, key=lambda r: (r[0].real, r[0].imag)):
        for j, (z2, _m2, r2) in enumerate(deduped):
            if abs(z - z2) < dedup_tol * max(1.0, abs(z)):
                if refined and not r2:
                    deduped[j] = (z, mult, refined)
                break
        else:
            deduped.append((z, mult, refined))

    # Group into orbits of the symmetry group k -> -k, k -> k*.
    cls_tol = 1e-8
    orbits: List[dict] = []
    for z, mult, refined in deduped:
        rep = _representative(z) if symmetry else z
        for orb in orbits:
            if symmetry and abs(rep - orb["rep"]) < 10 * dedup_tol * max(1.0, abs(rep)):
                orb["copies"].append(z)
                orb["refined"] &= refined
                break
        else:
            orbits.append({"rep": rep, "mult": mult, "copies": [z], "refined": refined})

    zeros = []
    reps = [orb["rep"] for orb in orbits]
    for orb in orbits:
        rep = orb["rep"]
        tol = cls_tol * (1.0 + abs(rep))
        others = [abs(rep - r) for r in reps if r is not rep and abs(rep - r) > tol]
        radius = 0.5 * min(1.0, min(others) if others else 1.0)
        residual = float(abs(np.asarray(rf(np.array([rep])), dtype=complex)[0]))
        zeros.append(Eigenvalue(
            k=rep, lam=rep * rep, index=None, multiplicity=orb["mult"],
            residual=residual, cls=_classify(rep, tol), copies=tuple(orb["copies"]),
            local_scale=_local_scale(rf, rep, radius), refined=orb["refined"],
        ))
    zeros.sort(key=lambda e: (abs(e.k), e.k.real))
    return ZeroSearchResult(zeros=zeros, raw_zeros=deduped, unresolved=unresolved,
                            region=(s0, s1, t0, t1))


def gamma_contour_count(d_evaluator: Callable, n: int, *, spacing: float = 0.2) -> int:
    """Zeros of k*D(k) inside the square contour with half-side (n+1)*pi.

    The k factor contributes the origin zero the counting theorem includes.
    """
    half = (n + 1) * math.pi
    box = ContourBox(-half, half, -half, half)

    def kd(ks):
        arr = np.asarray(ks, dtype=complex)
        return arr * np.asarray(d_evaluator(arr), dtype=complex)

    return winding_count(kd, box, spacing=spacing)


def origin_multiplicity(d_evaluator: Callable, radius: float = 0.3) -> int:
    """Multiplicity s of the zero eigenvalue: half the winding of D at the origin."""
    box = ContourBox(-radius, radius, -radius, radius)
    w = winding_count(d_evaluator, box)
    if w % 2:
        raise PhaseResolutionError(f"odd origin winding {w} for an even function")
    return w // 2


def _match_targets(zeros, targets, spacing, n_min):
    """Nearest-target index assignment with deficit filling for small zeros.

    targets: list of (n, value, branch). Raises IndexingConflictError when two
    zeros contend for one target or leftovers exceed the index deficit.
    """
    radius = 0.45 * spacing
    assigned: dict = {}
    leftovers = []
    for ev in zeros:
        best = None
        for n, val, branch in targets:
            dist = abs(ev.k - val)
            if best is None or dist < best[0]:
                best = (dist, n, branch)
        if best is not None and best[0] < radius:
            key = (best[1], best[2])
            if key in assigned:
                raise IndexingConflictError(
                    f"zeros {assigned[key].k} and {ev.k} both match index {best[1]}")
            assigned[key] = ev
        else:
            leftovers.append(ev)
    matched_ns = sorted({n for (n, _b) in assigned})
    deficit = []
    probe = n_min
    bound = max(matched_ns) if matched_ns else n_min + len(leftovers)
    while probe <= bound and len(deficit) < len(leftovers):
        if probe not in matched_ns:
            deficit.append(probe)
        probe += 1
    if len(leftovers) > len(deficit):
        raise IndexingConflictError(
            f"{len(leftovers)} unmatched zeros but only {len(deficit)} free indices "
            f">= {n_min}; zeros at {[l.k for l in leftovers]}")
    out = []
    for (n, branch), ev in assigned.items():
        out.append(replace(ev, index=n, branch=branch))
    for slot, ev in zip(deficit, sorted(leftovers, key=lambda e: abs(e.k))):
        out.append(replace(ev, index=slot))
    out.sort(key=lambda e: (e.index, abs(e.k)))
    return out


def index_eigenvalues(zeros, scalars, variant: str = "robin"):
    """Assign the theorem numbering to computed zeros by nearest-mu matching.

    The target sequence depends on the sign case of q(1)/omega (with the
    Dirichlet sign flip), the omega = 0 branches, and the q(1) = 0 variants.
    Unmatched small zeros fill the count deficit in ascending |k|.
    """
    from . import asymptotics as asy

    if not zeros:
        return []
    k_max = max(abs(e.k) for e in zeros) + math.pi
    targets, spacing, n_min = asy.index_targets(scalars, variant, k_max)
    return _match_targets(zeros, targets, spacing, n_min)
