import math

import numpy as np
import pytest

from tspec import Potential, derive_scalars
from tspec.charfun import make_d_evaluator
from tspec.errors import IndexingConflictError, PhaseResolutionError
from tspec.potential import PotentialScalars
from tspec.rootfind import (ContourBox, Eigenvalue, find_zeros, gamma_contour_count,
                            index_eigenvalues, newton_refine, origin_multiplicity,
                            winding_count)


def poly_with_roots(roots):
    roots = np.asarray(roots, dtype=complex)

    def f(k):
        k = np.asarray(k, dtype=complex)
        out = np.ones_like(k)
        for r in roots:
            out = out * (k - r)
        return out

    return f


class TestWindingCount:
    def test_single_simple_zero(self):
        f = lambda k: np.asarray(k, complex) ** 2 - 1.0
        assert winding_count(f, ContourBox(0.5, 1.5, -0.5, 0.5)) == 1

    def test_double_zero(self):
        f = lambda k: (np.asarray(k, complex) ** 2 - 1.0) ** 2
        assert winding_count(f, ContourBox(0.5, 1.5, -0.5, 0.5)) == 2

    def test_empty_box(self):
        f = lambda k: np.asarray(k, complex) ** 2 - 1.0
        assert winding_count(f, ContourBox(2.0, 3.0, 1.0, 2.0)) == 0

    def test_gamma_contour_q_one(self, q_one):
        # Counting theorem, ratio-positive case: 4n+5 zeros of kD inside.
        dev = make_d_evaluator(q_one, "robin", rtol=1e-9)
        assert gamma_contour_count(dev, 2) == 13

    def test_additivity_random_boxes(self, rng):
        # Parent winding equals the sum over a 2x2 split, 20 random boxes.
        for trial in range(20):
            roots = rng.uniform(-2, 2, 5) + 1j * rng.uniform(-2, 2, 5)
            f = poly_with_roots(roots)
            cx, cy = rng.uniform(-1, 1, 2)
            w, h = rng.uniform(0.8, 2.5, 2)
            box = ContourBox(cx - w, cx + w, cy - h, cy + h)
            try:
                parent = winding_count(f, box)
            except PhaseResolutionError:
                continue
            sm, tm = cx, cy
            children = [ContourBox(box.s0, sm, box.t0, tm), ContourBox(sm, box.s1, box.t0, tm),
                        ContourBox(box.s0, sm, tm, box.t1), ContourBox(sm, box.s1, tm, box.t1)]
            total = sum(winding_count(f, c) for c in children)
            assert total == parent

    def test_boundary_zero_perturbation(self):
        # A zero exactly on the requested boundary is absorbed by perturbing.
        f = poly_with_roots([1.0 + 0.0j, -2.0 + 0.5j])
        w = winding_count(f, ContourBox(0.0, 1.0, -0.5, 0.5))
        assert w in (0, 1)  # lands on one side after perturbation


class TestNewton:
    def test_quadratic_convergence_near_simple_roots(self, rng):
        # From any seed within 0.1 of a simple root, <= 25 iterations.
        roots = np.array([1.0 + 0.5j, -0.8 + 1.2j, 2.5 - 1.0j, -1.5 - 2.0j, 0.3 + 2.2j])
        f = poly_with_roots(roots)
        for r in roots:
            for _ in range(4):
                seed = r + 0.1 * np.exp(2j * math.pi * rng.uniform())
                z, converged, iters, _gap = newton_refine(f, seed)
                assert converged and iters <= 25
                assert abs(z - r) < 1e-10

    def test_derivative_gap_small_for_analytic(self):
        f = poly_with_roots([1.0 + 1.0j])
        _z, _c, _i, gap = newton_refine(f, 1.1 + 0.9j)
        assert gap < 1e-4


class TestFindZeros:
    def test_two_square_roots_of_1_plus_i(self):
        f = lambda k: np.asarray(k, complex) ** 2 - (1 + 1j)
        res = find_zeros(f, (-2.0, 2.0, -2.0, 2.0))
        expect = complex(1.09868411346781, 0.45508986056222)
        assert len(res.zeros) == 1  # one orbit under k -> -k
        assert len(res.raw_zeros) == 2
        ev = res.zeros[0]
        assert ev.multiplicity == 1
        assert abs(ev.k - expect) < 1e-9
        assert min(abs(r[0] - expect) for r in res.raw_zeros) < 1e-9
        assert min(abs(r[0] + expect) for r in res.raw_zeros) < 1e-9

    def test_multiplicity_cluster(self):
        f = lambda k: (np.asarray(k, complex) - (0.4 + 0.3j)) ** 2
        res = find_zeros(f, (-1.0, 1.0, -1.0, 1.0), max_depth=40, min_size=1e-6,
                         symmetry=False)
        assert len(res.zeros) == 1
        ev = res.zeros[0]
        assert ev.multiplicity == 2
        assert abs(ev.k - (0.4 + 0.3j)) < 1e-4

    def test_residual_against_local_scale(self, rng):
        roots = np.array([0.9 + 0.7j, -1.2 + 1.5j, 1.8 - 0.9j])
        f = poly_with_roots(roots)
        res = find_zeros(f, (-2.5, 2.5, -2.0, 2.0), symmetry=False)
        assert len(res.raw_zeros) == 3
        for ev, root in zip(sorted(res.zeros, key=lambda e: e.k.real),
                            sorted(roots, key=lambda r: r.real)):
            assert abs(ev.k - root) < 1e-9
            assert ev.residual < 1e-9 * ev.local_scale

    def test_symmetry_closure_on_symmetric_region(self, q_one):
        # Zeros of D come in full orbits when the region is symmetric.
        dev = make_d_evaluator(q_one, "robin", rtol=1e-9)
        devf = dev.with_tolerance(1e-12)
        res = find_zeros(dev, (-7.0, 7.0, -2.2, 2.2), refine_f=devf)
        raw = [r[0] for r in res.raw_zeros]
        assert len(raw) >= 8  # orbits of k_0 and k_1 at least
        for z in raw:
            for image in (-z, np.conj(z), -np.conj(z)):
                assert min(abs(image - w) for w in raw) < 1e-9 * (1 + abs(z))

    def test_unresolved_cluster_reported(self):
        f = lambda k: (np.asarray(k, complex) - (0.4 + 0.3j)) ** 2
        res = find_zeros(f, (-1.0, 1.0, -1.0, 1.0), max_depth=3, min_size=1e-12,
                         symmetry=False)
        assert res.unresolved
        assert res.zeros == []


class TestOriginMultiplicity:
    def test_no_zero_at_origin(self, q_one):
        dev = make_d_evaluator(q_one, "robin", rtol=1e-10)
        assert origin_multiplicity(dev) == 0

    def test_synthetic_double_origin(self):
        f = lambda k: np.asarray(k, complex) ** 2 * (1 - np.asarray(k, complex) ** 2 / 9.0)
        assert origin_multiplicity(f) == 1


def _ev(k, index=None, mult=1, cls="quadrant"):
    k = complex(k)
    return Eigenvalue(k=k, lam=k * k, index=index, multiplicity=mult, residual=0.0,
                      cls=cls, copies=(k,))


class TestIndexing:
    def test_identity_on_synthetic_targets(self, q_one):
        # Zeros placed exactly at mu_n index as n (matcher fixed point).
        from tspec.asymptotics import leading_zeros

        s = derive_scalars(q_one)
        lz = leading_zeros(s, 6, include_small=True)
        zeros = [_ev(mu) for mu in lz.mu_n]
        indexed = index_eigenvalues(zeros, s, "robin")
        assert [e.index for e in indexed] == list(lz.ns)

    def test_omega_zero_indexing(self):
        s = PotentialScalars(omega=0.0, q_at_1=0.5, dq_at_1=1.0, q_at_0=-0.5,
                             dq_at_0=1.0, q_sq_integral=1.0 / 12.0, m_order=(0, 0.5), h=0.0)
        zeros = [_ev(n * math.pi / 2.0 - 0.02 / n, cls="real") for n in (5, 6, 7, 9)]
        indexed = index_eigenvalues(zeros, s, "robin")
        assert [e.index for e in indexed] == [5, 6, 7, 9]

    def test_conflict_detection(self, q_one):
        from tspec.asymptotics import leading_zeros

        s = derive_scalars(q_one)
        lz = leading_zeros(s, 4)
        mu2 = lz.mu_n[1]
        zeros = [_ev(mu2 + 0.01), _ev(mu2 - 0.01)]
        with pytest.raises(IndexingConflictError):
            index_eigenvalues(zeros, s, "robin")

    def test_deficit_filling(self, q_one):
        # A small zero matching no formula target takes the free low index.
        from tspec.asymptotics import leading_zeros

        s = derive_scalars(q_one)
        lz = leading_zeros(s, 3, include_small=True)
        mu_by_n = dict(zip(lz.ns, lz.mu_n))
        zeros = [_ev(2.19 + 1.07j), _ev(mu_by_n[1]), _ev(mu_by_n[2])]
        indexed = index_eigenvalues(zeros, s, "robin")
        by_index = {e.index: e for e in indexed}
        assert set(by_index) == {0, 1, 2}
        assert abs(by_index[0].k - (2.19 + 1.07j)) < 1e-9
