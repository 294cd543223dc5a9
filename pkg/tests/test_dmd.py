import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pairs_from, random_stable_system, rotation, trajectory
from modalkit import dmd, numerics
from modalkit.errors import ModalkitError, RankTooLarge, ShapeError
from modalkit.numerics import Fixed
from modalkit.simulator import PlantedMode, plant_modes
from modalkit.snapshots import Role, build_pairs


class TestFit:
    def test_identity_dynamics(self):
        X = np.ones((2, 10))
        dec = dmd.fit_dmd(pairs_from(X), Fixed(1))
        np.testing.assert_allclose(dec.eigenvalues, [1.0], atol=1e-14)
        np.testing.assert_allclose(dmd.reconstruct(dec, X[:, 0], 10), X, atol=1e-13)

    def test_geometric_decay(self):
        X = 0.5 ** np.arange(20)
        dec = dmd.fit_dmd(pairs_from(X))
        np.testing.assert_allclose(dec.eigenvalues, [0.5], atol=1e-14)
        # b scales the unit-norm mode to reproduce x1 = 1
        np.testing.assert_allclose(dec.exact_modes[:, 0] * dec.amplitudes[0], [1.0], atol=1e-14)

    def test_scaled_rotation(self):
        rho, theta = 0.99, 0.1
        X = trajectory(rotation(rho, theta), [1.0, 0.0], 200)
        dec = dmd.fit_dmd(pairs_from(X), Fixed(2))
        expected = rho * np.exp(1j * theta * np.array([1, -1]))
        np.testing.assert_allclose(dec.eigenvalues, expected, atol=1e-8)
        np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(dec.reduced_A)),
                                   np.sort_complex(dec.eigenvalues), atol=1e-8)

    def test_rank_exceeds_columns(self):
        with pytest.raises(RankTooLarge):
            dmd.fit_dmd(pairs_from(np.random.default_rng(0).standard_normal((6, 4))), Fixed(4))

    def test_shapes(self, rng):
        X = trajectory(random_stable_system(rng, 4) * 0.01 + np.eye(4), rng.standard_normal(4), 60)
        dec = dmd.fit_dmd(pairs_from(X, s=3), Fixed(4))
        assert dec.exact_modes.shape == (12, 4) and dec.amplitudes.shape == (4,)
        assert dec.basis_U.shape == (12, 4) and dec.ranks == (4, None)


class TestAmplitudes:
    def _dec(self, Phi):
        Phi = np.asarray(Phi, dtype=complex)
        r = Phi.shape[1]
        return dmd.ModalDecomposition(kind="dmd", eigenvalues=np.ones(r), exact_modes=Phi,
                                      amplitudes=np.zeros(r), reduced_A=np.eye(r),
                                      basis_U=np.eye(Phi.shape[0], r), singular_values=(),
                                      ranks=(r, None), dt=1.0)

    def test_identity(self):
        np.testing.assert_allclose(dmd.mode_amplitudes(self._dec(np.eye(2)), [3, 4]), [3, 4])

    def test_orthonormal_projection(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
        x = rng.standard_normal(5)
        np.testing.assert_allclose(dmd.mode_amplitudes(self._dec(Q), x), Q.T @ x, atol=1e-13)

    def test_duplicated_column_minimum_norm(self):
        Phi = np.array([[1.0, 1.0], [2.0, 2.0], [0.0, 0.0]])
        x = np.array([1.0, 1.0, 1.0])
        b, residual = dmd.mode_amplitudes(self._dec(Phi), x, full_output=True)
        # oracle: normal equations on the single independent column c,
        # then split the coefficient equally (minimum-norm among b1 + b2 = t)
        c = Phi[:, 0]
        t = (c @ x) / (c @ c)
        np.testing.assert_allclose(b, [t / 2, t / 2], atol=1e-14)
        assert residual == pytest.approx(np.linalg.norm(c * t - x), rel=1e-12)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            dmd.mode_amplitudes(self._dec(np.eye(2)), [1, 2, 3])


class TestReconstruct:
    def test_identity_three_steps(self):
        dec = dmd.fit_dmd(pairs_from(np.ones((2, 10))), Fixed(1))
        np.testing.assert_allclose(dmd.reconstruct(dec, [1, 1], 3), np.ones((2, 3)), atol=1e-14)

    def test_decay_closed_form(self):
        dec = dmd.fit_dmd(pairs_from(0.5 ** np.arange(20)))
        np.testing.assert_allclose(dmd.reconstruct(dec, [1.0], 4)[0], [1, 0.5, 0.25, 0.125],
                                   atol=1e-14)

    def test_planted_tone(self):
        dt, n, s = 4e-4, 5000, 20
        ts = plant_modes([PlantedMode(8.6, 0.0, 1.0, 0.3)], dt, n, channels=1, seed=0)
        snap = build_pairs(ts, s)
        dec = dmd.fit_dmd(snap, Fixed(2))
        # oracle: the generating signal itself
        truth = ts.matrix(Role.STATE)[0]
        rec = dmd.reconstruct(dec, snap.X1[:, 0], n - s + 1)[0]
        assert dmd.relative_error(truth[: n - s + 1], rec) < 1e-3
        assert dmd.imaginary_residue(dec, snap.X1[:, 0], n - s + 1) < 1e-6

    def test_rejects_dmdc(self):
        dec = dmd.fit_dmd(pairs_from(np.ones((2, 10))), Fixed(1))
        with pytest.raises(ModalkitError):
            dmd.reconstruct(dmd.ModalDecomposition(**{**dec.__dict__, "kind": "dmdc"}), [1, 1], 2)

    def test_shape_error(self):
        dec = dmd.fit_dmd(pairs_from(np.ones((2, 10))), Fixed(1))
        with pytest.raises(ShapeError):
            dmd.reconstruct(dec, [1, 1, 1], 2)

    def test_one_step_residual_monotone_in_rank(self, rng):
        A = scipy.linalg.expm(random_stable_system(rng, 6) * 0.01)
        X = trajectory(A, rng.standard_normal(6), 120)
        snap = pairs_from(X)
        residuals = []
        for r in range(1, 7):
            dec = dmd.fit_dmd(snap, Fixed(r))
            # lifted one-step operator Phi Lambda Phi^+
            lifted = dec.exact_modes @ np.diag(dec.eigenvalues) @ np.linalg.pinv(dec.exact_modes)
            residuals.append(np.linalg.norm(snap.X2 - lifted @ snap.X1))
        assert all(b <= a + 1e-10 for a, b in zip(residuals, residuals[1:]))
        full = dmd.fit_dmd(snap, Fixed(6))
        assert dmd.relative_error(X, dmd.reconstruct(full, X[:, 0], 120)) < 1e-8


@settings(max_examples=25, deadline=None)
@given(k=st.integers(1, 6), seed=st.integers(0, 2 ** 31 - 1))
def test_oracle_equivalence(k, seed):
    rng = np.random.default_rng(seed)
    dt = 0.01
    Ac = random_stable_system(rng, k, dt=dt)
    F = scipy.linalg.expm(Ac * dt)
    X = trajectory(F, rng.standard_normal(k) + 1.0, max(10 * k, 60))
    dec = dmd.fit_dmd(pairs_from(X, dt=dt), Fixed(k))
    oracle = np.exp(np.linalg.eigvals(Ac) * dt)
    assert numerics.eigenvalue_distance(dec.eigenvalues, oracle) < 1e-6


@settings(max_examples=25, deadline=None)
@given(k=st.integers(1, 4), seed=st.integers(0, 2 ** 31 - 1))
def test_diagonal_scaling_invariance(k, seed):
    rng = np.random.default_rng(seed)
    F = scipy.linalg.expm(random_stable_system(rng, k) * 0.01)
    X = trajectory(F, rng.standard_normal(k) + 1.0, 80)
    D = np.diag(rng.uniform(0.1, 10.0, k))
    a = dmd.fit_dmd(pairs_from(X), Fixed(k)).eigenvalues
    b = dmd.fit_dmd(pairs_from(D @ X), Fixed(k)).eigenvalues
    assert numerics.eigenvalue_distance(a, b) < 1e-6


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(1, 6), cols=st.integers(3, 30), seed=st.integers(0, 2 ** 31 - 1))
def test_conjugate_closed(rows, cols, seed):
    X = np.random.default_rng(seed).standard_normal((rows, cols))
    lam = dmd.fit_dmd(pairs_from(X)).eigenvalues
    assert numerics.eigenvalue_distance(lam, lam.conj()) < 1e-8 * max(1.0, np.abs(lam).max())
