import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_schmidt_form, random_small_state, reduced_gram_eigenvalues
from fockbell.errors import ZeroStateError
from fockbell.fock import FieldState, ModePartition, Statistics, inner_product
from fockbell.schmidt import build_coefficient_matrix, reconstruct, schmidt_decompose, schmidt_rank
from fockbell.states import beamsplit_single_photon, bsv, tmsv

R = 1 / math.sqrt(2)
P11 = ModePartition.simple(1, 1)
P22 = ModePartition.simple(2, 2)


class TestCoefficientMatrix:
    def test_single_key(self):
        cm = build_coefficient_matrix(FieldState.basis(P11, (1,), (1,)))
        np.testing.assert_array_equal(cm.entries, [[1]])

    def test_anti_diagonal(self):
        cm = build_coefficient_matrix(beamsplit_single_photon())
        np.testing.assert_allclose(cm.entries, [[0, R], [R, 0]])

    def test_tmsv_diagonal_graded(self):
        g = 0.4
        cm = build_coefficient_matrix(tmsv(gamma=g, cutoff=2, renormalize=False))
        lam = [math.tanh(g) ** n / math.cosh(g) for n in range(3)]
        np.testing.assert_allclose(cm.entries, np.diag(lam))
        assert cm.row_index == ((0,), (1,), (2,))

    def test_round_trip(self, rng):
        s = random_small_state(rng)
        cm = build_coefficient_matrix(s)
        assert cm.to_state().allclose(s, atol=0)
        assert np.linalg.norm(cm.entries) == pytest.approx(s.norm())


class TestDecompose:
    def test_product_state(self):
        d = schmidt_decompose(FieldState.basis(P11, (1,), (1,)))
        assert d.rank == 1 and d.is_separable
        np.testing.assert_allclose(d.coefficients, [1.0])
        assert reconstruct(d).allclose(FieldState.basis(P11, (1,), (1,)))

    def test_singlet(self):
        s = FieldState(P22, {((1, 0), (0, 1)): R, ((0, 1), (1, 0)): -R})
        d = schmidt_decompose(s)
        np.testing.assert_allclose(d.coefficients, [R, R])

    def test_bsv_low_cutoff(self):
        g = 0.5
        d = schmidt_decompose(bsv(g, 1, renormalize=False))
        t = math.tanh(g) / math.cosh(g) ** 2
        # vacuum term 1/cosh^2 plus the degenerate singlet pair
        np.testing.assert_allclose(sorted(d.coefficients), sorted([1 / math.cosh(g) ** 2, t, t]), atol=1e-14)

    def test_phase_convention(self, rng):
        d = schmidt_decompose(random_small_state(rng))
        for vec in d.a_vectors:
            amps = np.array(list(vec.amplitudes.values()))
            lead = amps[np.argmax(np.abs(amps))]
            assert lead.imag == pytest.approx(0, abs=1e-15) and lead.real > 0

    def test_truncated_norm_deficit(self):
        s = tmsv(lambdas=[0.8, 0.5, 0.3, 1e-6])
        d = schmidt_decompose(s, tol=1e-4)
        assert d.rank == 3
        deficit = 1 - reconstruct(d).norm_squared()
        assert deficit == pytest.approx(float(np.sum(d.discarded**2)), rel=1e-9)
        assert d.reconstruction_error == pytest.approx(float(d.discarded[0]), rel=1e-9)

    def test_zero_state(self):
        with pytest.raises(ZeroStateError):
            schmidt_decompose(FieldState(P11, {}))
        with pytest.raises(ZeroStateError):
            schmidt_rank(FieldState(P11, {}))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), fermion=st.booleans())
    def test_invariants(self, seed, fermion):
        rng = np.random.default_rng(seed)
        s = random_small_state(rng, Statistics.FERMION if fermion else Statistics.BOSON)
        d = schmidt_decompose(s)
        lam = d.coefficients
        assert np.all(np.diff(lam) <= 1e-15)
        assert math.fsum(lam**2) == pytest.approx(1.0, abs=1e-10)
        assert d.reconstruction_error <= 1e-10
        for vecs in (d.a_vectors, d.b_vectors):
            gram = np.array([[inner_product(x, y) for y in vecs] for x in vecs])
            assert np.max(np.abs(gram - np.eye(len(vecs)))) <= 1e-10

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_spectrum_matches_reduced_gram(self, seed):
        s = random_small_state(np.random.default_rng(seed))
        lam2 = schmidt_decompose(s, tol=0.0).coefficients ** 2
        np.testing.assert_allclose(lam2, reduced_gram_eigenvalues(s)[: len(lam2)], atol=1e-10)

    def test_spectrum_invariant_under_local_relabeling(self, rng):
        s = random_state_3x3(rng)
        base = schmidt_decompose(s).coefficients
        # permute occupation labels within each party (a unitary relabeling)
        rows = sorted({k[0] for k in s.amplitudes})
        cols = sorted({k[1] for k in s.amplitudes})
        pr = dict(zip(rows, [rows[i] for i in rng.permutation(len(rows))]))
        pc = dict(zip(cols, [cols[i] for i in rng.permutation(len(cols))]))
        t = s.with_amplitudes({(pr[a], pc[b]): v for (a, b), v in s.amplitudes.items()})
        np.testing.assert_allclose(schmidt_decompose(t).coefficients, base, atol=1e-12)

    def test_degenerate_spectrum_reconstructs(self):
        amps = {((1, 0, 0), (1, 0, 0)): 0.5, ((0, 1, 0), (0, 1, 0)): 0.5,
                ((0, 0, 1), (0, 0, 1)): 0.5, ((0, 0, 0), (0, 0, 0)): 0.5}
        s = FieldState(ModePartition.simple(3, 3), amps)
        d = schmidt_decompose(s)
        np.testing.assert_allclose(d.coefficients, [0.5] * 4)
        assert d.reconstruction_error <= 1e-12


def random_state_3x3(rng):
    return random_schmidt_form(rng, 2, 2, 2, rank=4)


@pytest.mark.parametrize(
    "s, rank",
    [
        (FieldState.basis(P11, (2,), (1,)), 1),
        (beamsplit_single_photon(), 2),
        (tmsv(gamma=0.3, cutoff=5), 6),
    ],
    ids=["product", "beamsplit", "tmsv"],
)
def test_rank(s, rank):
    assert schmidt_rank(s) == rank


def test_random_schmidt_form_round_trip(rng):
    s = random_schmidt_form(rng, 2, 3, 2, rank=3)
    d = schmidt_decompose(s)
    assert d.rank == 3
    assert reconstruct(d).allclose(s, atol=1e-12)
