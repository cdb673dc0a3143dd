"""Symmetric eigensolver wrappers and range-restricted spectra."""

import numpy as np
import pytest

from permbandit import numerics as nm
from permbandit import plackett_luce as pl

from helpers import all_centered


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return (a + a.T) / 2


class TestSymEig:
    def test_identity(self):
        vals, vecs = nm.sym_eig(np.eye(4))
        np.testing.assert_allclose(vals, 1.0)
        np.testing.assert_allclose(vecs @ vecs.T, np.eye(4), atol=1e-12)

    def test_diagonal(self):
        vals, _ = nm.sym_eig(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(np.sort(vals), [1.0, 2.0, 3.0])

    def test_uniform_covariance_spectrum(self):
        # rank n-1 with a flat nonzero eigenvalue n(n+1)/12
        vals, _ = nm.sym_eig(pl.uniform_covariance(3))
        np.testing.assert_allclose(np.sort(vals), [0.0, 1.0, 1.0], atol=1e-12)

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(20)
        for n in (2, 5, 9):
            a = random_symmetric(rng, n)
            vals, vecs = nm.sym_eig(a)
            scale = np.max(np.abs(a)) + 1.0
            assert np.max(np.abs(vecs @ vecs.T - np.eye(n))) < 1e-9
            recon = (vecs * vals) @ vecs.T
            assert np.max(np.abs(recon - a)) < 1e-8 * scale

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            nm.sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            nm.sym_eig(np.zeros((2, 3)))


class TestPseudoInverse:
    def test_identity(self):
        np.testing.assert_allclose(nm.pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-12)

    def test_singular_diagonal(self):
        got = nm.pseudo_inverse(np.diag([2.0, 0.0]))
        np.testing.assert_allclose(got, np.diag([0.5, 0.0]), atol=1e-12)

    def test_uniform_covariance(self):
        # inverse on the sum-zero subspace of the n=3 uniform covariance
        n = 3
        expected = np.eye(n) - np.ones((n, n)) / n
        np.testing.assert_allclose(nm.pseudo_inverse(pl.uniform_covariance(n)), expected, atol=1e-12)

    def test_moore_penrose_identities(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            b = rng.normal(size=(n, max(1, n - 1)))
            a = b @ b.T
            ap = nm.pseudo_inverse(a)
            np.testing.assert_allclose(a @ ap @ a, a, atol=1e-8 * (1 + np.max(np.abs(a))))
            np.testing.assert_allclose(ap @ a @ ap, ap, atol=1e-8 * (1 + np.max(np.abs(ap))))
            np.testing.assert_allclose(ap, ap.T, atol=1e-10 * (1 + np.max(np.abs(ap))))


class TestMinEigOnRange:
    def test_identity(self):
        assert nm.min_eig_on_range(np.eye(5)) == pytest.approx(1.0)

    def test_uniform_covariance_closed_form(self):
        # smallest eigenvalue on the span is n(n+1)/12
        assert nm.min_eig_on_range(pl.uniform_covariance(3)) == pytest.approx(1.0)
        assert nm.min_eig_on_range(pl.uniform_covariance(10)) == pytest.approx(110 / 12)
        for n in (2, 4, 7, 23):
            expected = n * (n + 1) / 12.0
            assert nm.min_eig_on_range(pl.uniform_covariance(n)) == pytest.approx(expected)

    def test_matches_brute_force_quotient(self):
        # minimum Rayleigh quotient over the covariance's own range
        rng = np.random.default_rng(22)
        for n in (2, 3, 4, 5, 6):
            cs = all_centered(n)
            probs = rng.dirichlet(np.ones(cs.shape[0]))
            cov = cs.T @ (probs[:, None] * cs)
            vals, vecs = np.linalg.eigh(cov)
            keep = vals > 1e-12 * vals.max()
            got = nm.min_eig_on_range(cov)
            assert got == pytest.approx(vals[keep].min(), rel=1e-9)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            nm.min_eig_on_range(np.zeros((3, 3)))

    def test_rank_deficient_ignores_kernel(self):
        a = np.diag([0.0, 3.0, 5.0])
        assert nm.min_eig_on_range(a) == pytest.approx(3.0)
