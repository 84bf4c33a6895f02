"""Schmidt decomposition of Fock-space states across the A|B mode cut.

The state is mapped to its coefficient matrix ``C[j, j'] = <n^j; m^j'|psi>``
over the occupation vectors of each party, decomposed with a complex SVD, and
the singular vectors are mapped back to one-party Fock vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroStateError
from .fock import (
    FieldState,
    ModePartition,
    Occupation,
    Party,
    Statistics,
    TruncationPolicy,
    occupation_order,
)
from .serialization import sparse_occupation

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    row_index: tuple[Occupation, ...]
    col_index: tuple[Occupation, ...]
    entries: np.ndarray
    partition: ModePartition
    statistics: Statistics
    truncation: TruncationPolicy

    def to_state(self) -> FieldState:
        amps = {}
        for j, k in zip(*np.nonzero(self.entries)):
            amps[(self.row_index[j], self.col_index[k])] = complex(self.entries[j, k])
        return FieldState(self.partition, amps, statistics=self.statistics, truncation=self.truncation)


def build_coefficient_matrix(s: FieldState) -> CoefficientMatrix:
    rows = sorted({k[0] for k in s.amplitudes}, key=occupation_order)
    cols = sorted({k[1] for k in s.amplitudes}, key=occupation_order)
    row_pos = {occ: i for i, occ in enumerate(rows)}
    col_pos = {occ: i for i, occ in enumerate(cols)}
    entries = np.zeros((len(rows), len(cols)), dtype=complex)
    for (ka, kb), v in s.amplitudes.items():
        entries[row_pos[ka], col_pos[kb]] = v
    return CoefficientMatrix(tuple(rows), tuple(cols), entries, s.partition, s.statistics, s.truncation)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Retained Schmidt terms, largest first.

    ``discarded`` holds the singular values that fell below the rank tolerance;
    their weight shows up in ``reconstruction_error``.
    """

    coefficients: np.ndarray
    a_vectors: tuple[FieldState, ...]
    b_vectors: tuple[FieldState, ...]
    reconstruction_error: float
    rank_tolerance: float
    discarded: np.ndarray
    partition: ModePartition
    statistics: Statistics
    truncation: TruncationPolicy

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    @property
    def is_separable(self) -> bool:
        return self.rank <= 1

    def to_dict(self) -> dict:
        def dump(vectors, side):
            return [
                [
                    {"occ": sparse_occupation(k[side]), "re": v.real, "im": v.imag}
                    for k, v in vec.amplitudes.items()
                ]
                for vec in vectors
            ]

        return {
            "coefficients": [float(x) for x in self.coefficients],
            "rank": self.rank,
            "rank_tolerance": self.rank_tolerance,
            "discarded": [float(x) for x in self.discarded],
            "reconstruction_error": self.reconstruction_error,
            "a_vectors": dump(self.a_vectors, 0),
            "b_vectors": dump(self.b_vectors, 1),
        }


def _local(partition: ModePartition, party: Party, occs, coeffs, statistics, truncation) -> FieldState:
    amps = {}
    for occ, c in zip(occs, coeffs):
        if c != 0:
            amps[(occ, ()) if party is Party.A else ((), occ)] = complex(c)
    return FieldState(
        partition.restrict(party),
        amps,
        statistics=statistics,
        truncation=TruncationPolicy(truncation.max_quanta_per_side, 0.0),
    )


def schmidt_decompose(s: FieldState, tol: float = DEFAULT_RANK_TOL) -> SchmidtDecomposition:
    """Schmidt decomposition with singular values below ``tol * lambda_1`` dropped.

    Each A vector is rotated so that its largest-modulus component is real
    and positive; the compensating phase goes into the paired B vector.
    """
    if s.is_zero or s.norm() == 0.0:
        raise ZeroStateError("cannot decompose the zero state")
    cm = build_coefficient_matrix(s)
    u, sv, vh = np.linalg.svd(cm.entries, full_matrices=False)
    keep = int(np.count_nonzero(sv > tol * sv[0]))

    a_vecs, b_vecs = [], []
    for t in range(keep):
        col = u[:, t]
        mod = np.abs(col)
        lead = int(np.flatnonzero(mod >= mod.max() - 1e-12)[0])
        phase = col[lead] / mod[lead]
        a_vecs.append(_local(s.partition, Party.A, cm.row_index, col * np.conj(phase), s.statistics, s.truncation))
        b_vecs.append(_local(s.partition, Party.B, cm.col_index, vh[t, :] * phase, s.statistics, s.truncation))

    d = SchmidtDecomposition(
        coefficients=sv[:keep].copy(),
        a_vectors=tuple(a_vecs),
        b_vectors=tuple(b_vecs),
        reconstruction_error=0.0,
        rank_tolerance=tol,
        discarded=sv[keep:].copy(),
        partition=s.partition,
        statistics=s.statistics,
        truncation=s.truncation,
    )
    error = (s - reconstruct(d)).norm()
    object.__setattr__(d, "reconstruction_error", error)
    return d


def schmidt_rank(s: FieldState, tol: float = DEFAULT_RANK_TOL) -> int:
    if s.is_zero or s.norm() == 0.0:
        raise ZeroStateError("zero state has no Schmidt rank")
    sv = np.linalg.svd(build_coefficient_matrix(s).entries, compute_uv=False)
    return int(np.count_nonzero(sv > tol * sv[0]))


def reconstruct(d: SchmidtDecomposition) -> FieldState:
    """Sum of the retained terms ``lambda_t a_t (x) b_t``."""
    acc: dict = {}
    for lam, av, bv in zip(d.coefficients, d.a_vectors, d.b_vectors):
        for ka, va in av.amplitudes.items():
            for kb, vb in bv.amplitudes.items():
                key = (ka[0], kb[1])
                acc.setdefault(key, []).append(lam * va * vb)
    amps = {
        k: complex(math.fsum(t.real for t in ts), math.fsum(t.imag for t in ts))
        for k, ts in acc.items()
    }
    return FieldState(
        d.partition,
        amps,
        statistics=d.statistics,
        truncation=TruncationPolicy(d.truncation.max_quanta_per_side, 0.0),
    )
