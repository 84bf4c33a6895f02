"""Generators for example field states and simple transformations.

Generators expand the ideal state up to a cutoff.  The squared norm that
falls outside the cutoff is recorded in ``pruned_weight``; by default the
truncated vector is then renormalized.  Pass ``renormalize=False`` to keep the
exact leading amplitudes, which is what expectation values of operators
supported inside the cutoff should be computed on.
"""

from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from .errors import ZeroStateError
from .fock import (
    FieldState,
    ModeId,
    ModePartition,
    Party,
    Statistics,
    TruncationPolicy,
    a_mode,
    apply_annihilation,
    b_mode,
    tensor_with_ancilla,
)

TRUNCATION_WARN = 1e-6


def _finish(s: FieldState, ideal_norm_sq: float, renormalize: bool) -> FieldState:
    pruned = max(ideal_norm_sq - s.norm_squared(), 0.0)
    s = s.with_amplitudes(s.amplitudes, pruned_weight=pruned)
    return s.normalized() if renormalize else s


def tmsv(
    lambdas: Sequence[float] | None = None,
    gamma: float | None = None,
    cutoff: int = 10,
    renormalize: bool = True,
) -> FieldState:
    """Two-mode squeezed vacuum ``sum_n lambda_n |n; n>`` on modes a1 | b1.

    With ``gamma`` the spectrum is ``tanh^n(gamma) / cosh(gamma)`` for
    ``n <= cutoff``; an explicit ``lambdas`` sequence is used verbatim and
    normalized.
    """
    if (lambdas is None) == (gamma is None):
        raise ValueError("give exactly one of lambdas or gamma")
    if lambdas is not None:
        coeffs = [complex(x) for x in lambdas]
        if not any(coeffs):
            raise ValueError("all-zero Schmidt spectrum")
        ideal = math.fsum(abs(c) ** 2 for c in coeffs)
        cutoff = len(coeffs) - 1
    else:
        if gamma < 0:
            raise ValueError("gain must be non-negative")
        t = math.tanh(gamma)
        coeffs = [t**n / math.cosh(gamma) for n in range(cutoff + 1)]
        ideal = 1.0
    part = ModePartition.simple(1, 1)
    s = FieldState(
        part,
        {((n,), (n,)): c for n, c in enumerate(coeffs)},
        truncation=TruncationPolicy(cutoff),
    )
    if lambdas is not None:
        return s.normalized() if renormalize else s
    return _finish(s, ideal, renormalize)


def bsv(gamma: float, cutoff: int = 10, renormalize: bool = True) -> FieldState:
    """2x2 bright squeezed vacuum on modes a1, a2 | b1, b2.

    ``cosh^-2(g) sum_n tanh^n(g) sum_m (-1)^m |n-m, m; m, n-m>`` for n up to
    ``cutoff``.
    """
    if gamma < 0:
        raise ValueError("gain must be non-negative")
    t = math.tanh(gamma)
    pref = 1.0 / math.cosh(gamma) ** 2
    amps = {}
    for n in range(cutoff + 1):
        for m in range(n + 1):
            amps[((n - m, m), (m, n - m))] = pref * t**n * (-1) ** m
    s = FieldState(ModePartition.simple(2, 2), amps, truncation=TruncationPolicy(cutoff))
    return _finish(s, 1.0, renormalize)


def bghz(coeffs: Sequence[complex], cutoff: int | None = None, renormalize: bool = True) -> FieldState:
    """Bright GHZ-type state on modes a1..a4 | b1, b2.

    ``sum_k sum_m C_{k-m} C_m (a1+ a2+ b1+)^{k-m} (a3+ a4+ b2+)^m |vacuum>``
    with ``C`` supplied by the caller and k up to ``cutoff`` (default: as far
    as the coefficients reach).  Repeated creation contributes
    ``(j!)^{3/2}`` per block of j triples.
    """
    c = [complex(x) for x in coeffs]
    if not any(c):
        raise ValueError("all-zero BGHZ coefficients")
    kmax = 2 * (len(c) - 1) if cutoff is None else cutoff
    amps = {}
    for k in range(kmax + 1):
        for m in range(k + 1):
            j = k - m
            if j >= len(c) or m >= len(c):
                continue
            ladder = (math.factorial(j) * math.factorial(m)) ** 1.5
            amps[((j, j, m, m), (j, m))] = c[j] * c[m] * ladder
    s = FieldState(ModePartition.simple(4, 2), amps, truncation=TruncationPolicy(2 * kmax))
    return s.normalized() if renormalize else s


def beamsplit_single_photon() -> FieldState:
    """``(|0; 1> + |1; 0>) / sqrt(2)`` on modes a1 | b1."""
    r = 1 / math.sqrt(2)
    return FieldState(ModePartition.simple(1, 1), {((0,), (1,)): r, ((1,), (0,)): r}, truncation=TruncationPolicy(1))


def coherent_state(mode: ModeId, z: complex, cutoff: int, renormalize: bool = True) -> FieldState:
    """Truncated coherent state ``e^{-|z|^2/2} sum_k z^k / sqrt(k!) |k>`` on one mode."""
    part = ModePartition((mode,), ()) if mode.party is Party.A else ModePartition((), (mode,))
    amps = {}
    for k in range(cutoff + 1):
        amp = math.exp(-abs(z) ** 2 / 2) * z**k / math.sqrt(math.factorial(k))
        amps[((k,), ()) if mode.party is Party.A else ((), (k,))] = amp
    s = FieldState(part, amps, truncation=TruncationPolicy(cutoff, 0.0))
    return _finish(s, 1.0, renormalize)


def _fresh_mode(s: FieldState, party: Party) -> ModeId:
    used = [m.index for m in s.partition.modes(party) if m.field_tag == 0]
    return ModeId(party, max(used, default=0) + 1)


def attach_coherent_ancillas(
    s: FieldState, z: complex, cutoff: int, renormalize: bool = True
) -> FieldState:
    """Tensor ``s`` with a coherent state ``|z>`` on one fresh mode per party.

    Warns when the coherent truncation discards more than 1e-6 of the norm.
    """
    out = s
    for party in (Party.A, Party.B):
        anc = coherent_state(_fresh_mode(out, party), z, cutoff, renormalize=renormalize)
        if anc.pruned_weight > TRUNCATION_WARN:
            warnings.warn(
                f"coherent ancilla cutoff {cutoff} drops weight {anc.pruned_weight:.3g} at |z|={abs(z):.3g}",
                stacklevel=2,
            )
        out = tensor_with_ancilla(out, anc)
    return out


def photon_subtract(s: FieldState, modes: Sequence[ModeId]) -> FieldState:
    """Apply ``sum_j a_j`` over ``modes`` and renormalize."""
    if not modes:
        raise ValueError("no modes to subtract from")
    total = s.zero()
    for m in modes:
        total = total + apply_annihilation(s, m)
    if total.is_zero or total.norm() == 0.0:
        raise ZeroStateError("photon subtraction annihilated the state")
    return total.normalized()


def random_state(
    n_a: int,
    n_b: int,
    max_quanta: int,
    rng: np.random.Generator,
    statistics: Statistics = Statistics.BOSON,
    density: float = 1.0,
) -> FieldState:
    """Normalized state with complex Gaussian amplitudes over all keys up to ``max_quanta`` per side."""
    part = ModePartition.simple(n_a, n_b)
    occ_a = _occupations(n_a, max_quanta, statistics)
    occ_b = _occupations(n_b, max_quanta, statistics)
    amps = {}
    for ka in occ_a:
        for kb in occ_b:
            if density < 1.0 and rng.random() > density:
                continue
            amps[(ka, kb)] = complex(rng.normal(), rng.normal())
    if not amps:
        amps[(occ_a[0], occ_b[0])] = 1.0
    return FieldState(part, amps, statistics=statistics, truncation=TruncationPolicy(max_quanta)).normalized()


def _occupations(n_modes: int, max_total: int, statistics: Statistics) -> list[tuple[int, ...]]:
    cap = 1 if statistics is Statistics.FERMION else max_total
    out = []

    def rec(prefix: list[int], left: int):
        if len(prefix) == n_modes:
            out.append(tuple(prefix))
            return
        for c in range(min(cap, left) + 1):
            rec(prefix + [c], left - c)

    rec([], max_total)
    return out


__all__ = [
    "a_mode",
    "b_mode",
    "attach_coherent_ancillas",
    "beamsplit_single_photon",
    "bghz",
    "bsv",
    "coherent_state",
    "photon_subtract",
    "random_state",
    "tmsv",
]
