"""Orchestration from validated config to structured outputs.

Two spectrum paths: a generic region scan (argument-principle subdivision) and
a targeted per-index search seeded by the asymptotic predictions, each ending
in Newton polish at a tighter tolerance. Validation replays the paper-level
audits (symmetry closure, contour counts, residual decay, gamma consistency)
against a spectrum file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import asymptotics as asy
from .charfun import DEvaluator
from .errors import (BoundaryTooCloseError, DomainError, HypothesisMismatchError,
                     IndexingConflictError, PhaseResolutionError, TspecError,
                     UnstableLimitError)
from .gamma_recovery import from_eigenvalues, gamma_direct, gamma_from_endpoint, gamma_from_omega
from .potential import Potential, PotentialScalars, derive_scalars
from .rootfind import (ContourBox, Eigenvalue, ZeroSearchResult, find_zeros,
                       gamma_contour_count, index_eigenvalues, newton_refine_many,
                       origin_multiplicity, winding_count)
from .spectrumfile import SpectrumHeader, SpectrumRecord

_DEGENERATE_PROBES = (0.6 + 0.4j, 1.7 + 0.0j, 2.9 + 0.8j, 4.3 + 0.0j, 6.1 + 0.3j)
_DIRECT_PROBE_CANDIDATES = (0.37, 0.71, 0.53, 1.13, 1.91)


def is_degenerate(dev: DEvaluator) -> bool:
    """True when D vanishes identically (the unperturbed q = 0 system)."""
    vals = np.asarray(dev(np.array(_DEGENERATE_PROBES)), dtype=complex)
    return bool(np.max(np.abs(vals)) < 1e-11)


def _classify(k: complex) -> str:
    tol = 1e-8 * (1.0 + abs(k))
    if abs(k.imag) < tol:
        return "real"
    if abs(k.real) < tol:
        return "imaginary"
    return "quadrant"


def targeted_spectrum(p: Potential, scalars: PotentialScalars, variant: str,
                      n_lo: int, n_hi: int, *, rtol: float = 1e-12,
                      rtol_refine: float = 1e-13, rtol_winding: float = 1e-8,
                      verify: bool = True) -> List[Eigenvalue]:
    """Indexed eigenvalues n_lo..n_hi found from asymptotic seeds.

    Batched Newton from the predicted locations, polished at rtol_refine; each
    root is then certified unique in its window by a winding count (the small
    contours the counting argument uses). Misbehaving indices fall back to a
    boxed search around the seed.
    """
    dev = DEvaluator(p, variant, rtol=rtol)
    dev_fine = dev.with_tolerance(rtol_refine)
    dev_wind = dev.with_tolerance(rtol_winding)
    k_max = (n_hi + 2) * math.pi
    targets, spacing, _ = asy.index_targets(scalars, variant, k_max)
    sel = [(n, val, br) for (n, val, br) in targets if n_lo <= n <= n_hi]
    if not sel:
        return []
    seeds = np.array([val for (_n, val, _b) in sel], dtype=complex)
    roots, conv = newton_refine_many(dev, seeds)
    polished, conv2 = newton_refine_many(dev_fine, roots, max_iter=6)
    good = conv & conv2
    roots = np.where(good, polished, roots)
    out = []
    half = 0.45 * spacing
    for (n, target, br), root, ok in zip(sel, roots, good):
        if not ok or abs(root - target) > half:
            root, ok = _boxed_fallback(dev, dev_fine, target, half)
        if verify and ok:
            box = ContourBox(root.real - half, root.real + half,
                             root.imag - half, root.imag + half)
            try:
                w = winding_count(dev_wind, box)
            except (BoundaryTooCloseError, PhaseResolutionError):
                w = -1
            if w != 1:
                root, ok = _boxed_fallback(dev, dev_fine, target, half)
        rep = complex(abs(root.real), abs(root.imag))
        residual = float(abs(complex(dev_fine(rep))))
        circle = rep + 0.5 * min(1.0, spacing / 2.0) * np.exp(2j * math.pi * np.arange(8) / 8)
        local_scale = float(np.max(np.abs(dev_fine(circle))))
        out.append(Eigenvalue(k=rep, lam=rep * rep, index=n, multiplicity=1,
                              residual=residual, cls=_classify(rep), copies=(complex(root),),
                              local_scale=local_scale, refined=bool(ok), branch=br))
    return out


def _boxed_fallback(dev, dev_fine, target: complex, half: float):
    try:
        res = find_zeros(dev, (target.real - half, target.real + half,
                               target.imag - half, target.imag + half),
                         refine_f=dev_fine, max_depth=10)
    except TspecError:
        return complex(target), False
    if not res.zeros:
        return complex(target), False
    best = min(res.zeros, key=lambda e: abs(e.k - complex(abs(target.real), abs(target.imag))))
    return complex(best.k), True


def scan_spectrum(p: Potential, scalars: PotentialScalars, variant: str, region,
                  depth: int = 14, *, rtol_winding: float = 1e-9,
                  rtol_refine: float = 1e-13) -> ZeroSearchResult:
    dev = DEvaluator(p, variant, rtol=rtol_winding)
    dev_fine = dev.with_tolerance(rtol_refine)
    return find_zeros(dev, region, max_depth=depth, refine_f=dev_fine)


def expand_orbit(ev: Eigenvalue) -> List[complex]:
    """The full symmetry orbit {k, -k, k*, -k*} of a representative, deduplicated."""
    rep = ev.k
    orbit = []
    for cand in (rep, -rep, np.conj(rep), -np.conj(rep)):
        c = complex(cand)
        if all(abs(c - o) > 1e-12 * (1.0 + abs(c)) for o in orbit):
            orbit.append(c)
    return orbit


def records_from_eigenvalues(zeros: List[Eigenvalue]) -> List[SpectrumRecord]:
    records = []
    for ev in zeros:
        for mirror in expand_orbit(ev):
            records.append(SpectrumRecord(
                index=ev.index, re_k=mirror.real, im_k=mirror.imag,
                multiplicity=ev.multiplicity, residual=ev.residual,
                cls=ev.cls, branch=ev.branch,
            ))
    return records


def eigenvalues_from_records(records: List[SpectrumRecord]) -> List[Eigenvalue]:
    """First-quadrant representatives with indices, one per orbit."""
    seen = {}
    for r in records:
        rep = complex(abs(r.re_k), abs(r.im_k))
        key = (round(rep.real, 9), round(rep.imag, 9))
        if key not in seen:
            seen[key] = Eigenvalue(k=rep, lam=rep * rep, index=r.index,
                                   multiplicity=r.multiplicity, residual=r.residual,
                                   cls=r.cls, copies=(complex(r.re_k, r.im_k),),
                                   branch=r.branch)
    return sorted(seen.values(), key=lambda e: (e.index if e.index is not None else 10 ** 9,
                                                abs(e.k)))


@dataclass
class SpectrumRun:
    header: SpectrumHeader
    records: List[SpectrumRecord]
    eigenvalues: List[Eigenvalue]
    unresolved: list
    exit_code: int


def run_spectrum(cfg) -> SpectrumRun:
    """Orchestrates charfun + root finder + indexing into a spectrum document."""
    p = Potential.from_dict(cfg.potential)
    scalars = derive_scalars(p)
    warnings_list = []
    dev = DEvaluator(p, cfg.variant, rtol=cfg.rtol)
    region = list(cfg.spectrum.get("region", (0.0, 20.0, 0.0, 4.0)))
    if is_degenerate(dev):
        warnings_list.append("degenerate characteristic function: D == 0 identically "
                             "(unperturbed system); spectrum is empty")
        header = SpectrumHeader(potential=cfg.potential, variant=cfg.variant, region=region,
                                tolerances={"rtol": cfg.rtol, "rtol_refine": cfg.rtol_refine},
                                s=0, warnings=warnings_list)
        return SpectrumRun(header=header, records=[], eigenvalues=[], unresolved=[],
                           exit_code=0)
    unresolved = []
    if "n" in cfg.spectrum:
        n_lo, n_hi = cfg.spectrum["n"]
        zeros = targeted_spectrum(p, scalars, cfg.variant, int(n_lo), int(n_hi),
                                  rtol=cfg.rtol, rtol_refine=cfg.rtol_refine)
    else:
        result = scan_spectrum(p, scalars, cfg.variant, region,
                               depth=int(cfg.spectrum.get("depth", 14)),
                               rtol_winding=max(cfg.rtol, 1e-10), rtol_refine=cfg.rtol_refine)
        unresolved = result.unresolved
        try:
            zeros = index_eigenvalues(result.zeros, scalars, cfg.variant)
        except (IndexingConflictError, DomainError) as exc:
            warnings_list.append(f"indexing: {exc}")
            zeros = result.zeros
    try:
        s = origin_multiplicity(dev)
    except TspecError as exc:
        warnings_list.append(f"origin multiplicity undetermined: {exc}")
        s = 0
    if unresolved:
        warnings_list.append(f"{len(unresolved)} unresolved cluster boxes")
    header = SpectrumHeader(potential=cfg.potential, variant=cfg.variant, region=region,
                            tolerances={"rtol": cfg.rtol, "rtol_refine": cfg.rtol_refine},
                            s=s, warnings=warnings_list)
    return SpectrumRun(header=header, records=records_from_eigenvalues(zeros),
                       eigenvalues=zeros, unresolved=unresolved,
                       exit_code=2 if unresolved else 0)


# ---------------------------------------------------------------------------
# Validation audits
# ---------------------------------------------------------------------------

@dataclass
class AuditEntry:
    name: str
    status: str      # "pass" | "fail" | "skipped"
    detail: str


@dataclass
class ValidationReport:
    entries: List[AuditEntry] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(e.status == "fail" for e in self.entries)

    def add(self, name, status, detail=""):
        self.entries.append(AuditEntry(name=name, status=status, detail=detail))

    def to_rows(self):
        return [(e.name, e.status, e.detail) for e in self.entries]


def audit_symmetry(records: List[SpectrumRecord], tol: float = 1e-9) -> AuditEntry:
    """The record set must be closed under k -> -k and k -> k*."""
    ks = [complex(r.re_k, r.im_k) for r in records]
    missing = []
    for k in ks:
        for image in (-k, np.conj(k), -np.conj(k)):
            if not any(abs(image - other) <= tol * (1.0 + abs(k)) for other in ks):
                missing.append((k, complex(image)))
    if missing:
        k, image = missing[0]
        return AuditEntry("symmetry-closure", "fail",
                          f"{len(missing)} missing mirrors, e.g. {image} of {k}")
    return AuditEntry("symmetry-closure", "pass", f"{len(ks)} records closed under +-k, conj")


def audit_contours(dev: DEvaluator, scalars: PotentialScalars, ns) -> AuditEntry:
    scale = max(abs(scalars.omega), abs(scalars.q_at_1), 1e-12)
    if abs(scalars.omega) < 1e-9 * scale or abs(scalars.q_at_1) < 1e-9 * scale:
        return AuditEntry("contour-counts", "skipped",
                          "counting theorem needs omega != 0 and q(1) != 0")
    ratio = scalars.q_at_1 / scalars.omega
    expected = (lambda n: 4 * n + 5) if ratio > 0 else (lambda n: 4 * n + 3)
    got = {}
    for n in ns:
        try:
            got[n] = gamma_contour_count(dev, n)
        except TspecError as exc:
            return AuditEntry("contour-counts", "fail", f"count failed at n={n}: {exc}")
    bad = {n: (got[n], expected(n)) for n in ns if got[n] != expected(n)}
    if bad:
        return AuditEntry("contour-counts", "fail", f"mismatches {bad}")
    return AuditEntry("contour-counts", "pass",
                      f"counts {got} match 4n+{5 if ratio > 0 else 3}")


def default_theorem_tag(scalars: PotentialScalars, variant: str) -> Optional[str]:
    scale = max(abs(scalars.omega), abs(scalars.q_at_1), abs(scalars.dq_at_1), 1e-12)
    omega_zero = abs(scalars.omega) < 1e-9 * scale
    q1_zero = abs(scalars.q_at_1) < 1e-9 * scale
    if variant == "dirichlet":
        if q1_zero:
            return None
        return "Dirichlet_ii" if omega_zero else "Dirichlet_i"
    if not q1_zero:
        return "T41ii_W22" if omega_zero else "T41i_W22"
    if abs(scalars.dq_at_1) > 1e-9 * scale:
        return "T42ii" if omega_zero else "T42i"
    return None


def audit_residual_decay(zeros: List[Eigenvalue], scalars: PotentialScalars, variant: str,
                         theorem: Optional[str] = None, slope_tol: float = -0.3) -> AuditEntry:
    tag = theorem or default_theorem_tag(scalars, variant)
    if tag is None:
        return AuditEntry("residual-decay", "skipped", "no asymptotic theorem applies")
    try:
        asy.predict_eigenvalues(scalars, tag, [5])  # hypothesis check first
    except HypothesisMismatchError as exc:
        return AuditEntry("residual-decay", "fail", f"hypothesis mismatch: {exc}")
    rows = [ev for ev in zeros if ev.index is not None and ev.index >= 1]
    if len(rows) < 4:
        return AuditEntry("residual-decay", "skipped",
                          f"only {len(rows)} indexed eigenvalues with n >= 1")
    try:
        pred = asy.predict_eigenvalues(scalars, tag, sorted({ev.index for ev in rows}))
        report = asy.residual_report(rows, pred)
    except HypothesisMismatchError as exc:
        return AuditEntry("residual-decay", "fail", f"hypothesis mismatch: {exc}")
    except DomainError as exc:
        return AuditEntry("residual-decay", "skipped", str(exc))
    ok = report.loglog_slope <= slope_tol and report.tails_decreasing
    detail = (f"tag {tag}: slope {report.loglog_slope:.2f} (tol {slope_tol}), "
              f"tail sums {report.tail_first:.3e} -> {report.tail_second:.3e}")
    return AuditEntry("residual-decay", "pass" if ok else "fail", detail)


def audit_gamma(dev: DEvaluator, zeros: List[Eigenvalue], scalars: PotentialScalars,
                variant: str, s: int = 0, rel_tol: float = 0.25) -> AuditEntry:
    if not zeros:
        return AuditEntry("gamma-consistency", "skipped", "empty spectrum")
    try:
        hp = from_eigenvalues(zeros, s=s)
    except DomainError as exc:
        return AuditEntry("gamma-consistency", "fail", f"bad eigenvalue list: {exc}")
    if hp.truncation < 20:
        return AuditEntry("gamma-consistency", "skipped",
                          f"only {hp.truncation} eigenvalues; limit routes need >= 20")
    probe = None
    roots = hp.sqrt_roots()
    mirrors = np.concatenate([roots, -roots, np.conj(roots), -np.conj(roots)])
    for cand in _DIRECT_PROBE_CANDIDATES:
        if np.min(np.abs(cand - mirrors)) > 0.1:
            probe = cand
            break
    if probe is None:
        return AuditEntry("gamma-consistency", "skipped", "no clear probe point")
    direct = gamma_direct(dev, hp, probe)
    scale = max(abs(scalars.omega), abs(scalars.q_at_1), abs(scalars.dq_at_1), 1e-12)
    try:
        if abs(scalars.omega) > 1e-9 * scale:
            other = gamma_from_omega(hp, scalars, variant)
        elif scalars.m_order is not None:
            other = gamma_from_endpoint(hp, scalars, variant)
        else:
            return AuditEntry("gamma-consistency", "skipped", "no limit route applies")
    except (UnstableLimitError, DomainError) as exc:
        return AuditEntry("gamma-consistency", "fail", f"{exc}")
    rel = abs(other.gamma - direct.gamma) / max(abs(direct.gamma), 1e-300)
    detail = (f"direct {direct.gamma:.5g} vs {other.route} {other.gamma:.5g} "
              f"({100 * rel:.1f}% apart, tol {100 * rel_tol:.0f}%)")
    return AuditEntry("gamma-consistency", "pass" if rel <= rel_tol else "fail", detail)


def run_validate(cfg, header: SpectrumHeader, records: List[SpectrumRecord],
                 hash_ok: bool = True) -> ValidationReport:
    """Pass/fail table over symmetry, contour counts, residual decay, gamma routes."""
    report = ValidationReport()
    report.add("file-integrity", "pass" if hash_ok else "fail",
               "content hash matches" if hash_ok else "content hash mismatch")
    if not records:
        has_warning = any("degenerate" in w for w in header.warnings)
        report.add("symmetry-closure", "skipped", "empty spectrum")
        report.add("residual-decay", "skipped", "empty spectrum")
        report.add("gamma-consistency", "skipped", "empty spectrum")
        if not has_warning:
            report.add("empty-spectrum", "fail", "no records and no degeneracy warning")
        return report
    report.entries.append(audit_symmetry(records))
    p = Potential.from_dict(header.potential)
    scalars = derive_scalars(p)
    dev = DEvaluator(p, header.variant, rtol=cfg.rtol)
    contours = cfg.validate.get("contours", [2, 3])
    report.entries.append(audit_contours(dev, scalars, contours))
    zeros = eigenvalues_from_records(records)
    theorem = cfg.validate.get("theorem")
    report.entries.append(audit_residual_decay(zeros, scalars, header.variant, theorem))
    report.entries.append(audit_gamma(dev, zeros, scalars, header.variant, s=header.s,
                                      rel_tol=float(cfg.validate.get("gamma_tol", 0.25))))
    return report
