"""Particle-number sector analysis of Bell tests.

Measurements that never project onto superpositions of different particle
numbers act block-diagonally on the sectors ``(n, m)`` (n quanta in the A
modes, m in the B modes).  If every populated sector of a state is a product
state, such measurements only ever see a separable mixture; conversely a CH
functional built inside one sector may or may not survive on the full state,
depending on how much weight sits in the neighbouring sectors that share one
of its particle numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bell import (
    EffectiveQubitPair,
    SettingAngles,
    measurement_vectors,
    ch_probabilities,
    effective_pair_from_schmidt,
    numeric_optimal_settings,
)
from .errors import ContractViolation, EmptySectorError, SeparableStateError
from .fock import (
    FieldState,
    Operator,
    Party,
    inner_product,
    partial_overlap,
    project_fixed_numbers,
    sector_of,
)
from .schmidt import DEFAULT_RANK_TOL, schmidt_decompose, schmidt_rank

DEFAULT_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SectorRecord:
    n: int
    m: int
    weight: float
    rank: int
    projected: FieldState | None


@dataclass(frozen=True, eq=False)
class SectorTable:
    records: tuple[SectorRecord, ...]
    rank_tolerance: float
    weight_tolerance: float

    def populated(self) -> list[SectorRecord]:
        return [r for r in self.records if r.weight > self.weight_tolerance]

    def record(self, n: int, m: int) -> SectorRecord:
        for r in self.records:
            if (r.n, r.m) == (n, m):
                return r
        raise EmptySectorError(f"sector ({n}, {m}) is empty")

    @property
    def total_weight(self) -> float:
        return math.fsum(r.weight for r in self.records)

    def to_dict(self) -> dict:
        return {
            "rank_tolerance": self.rank_tolerance,
            "weight_tolerance": self.weight_tolerance,
            "sectors": [{"n": r.n, "m": r.m, "weight": r.weight, "rank": r.rank} for r in self.records],
        }


def sector_table(
    s: FieldState, rank_tol: float = DEFAULT_RANK_TOL, weight_tol: float = DEFAULT_WEIGHT_TOL
) -> SectorTable:
    records = []
    for n, m in s.sectors():
        projected, weight = project_fixed_numbers(s, n, m)
        records.append(
            SectorRecord(n, m, weight, schmidt_rank(projected, rank_tol), projected if weight > weight_tol else None)
        )
    return SectorTable(tuple(records), rank_tol, weight_tol)


def theorem1_holds(t: SectorTable) -> bool:
    """True when every populated sector is a product state.

    Then particle-number-non-mixing projective measurements cannot reveal
    nonclassicality without ancillary resources.
    """
    return all(r.rank <= 1 for r in t.populated())


def corollary1_holds(t: SectorTable) -> bool:
    """True when some populated sector is entangled (necessary, not sufficient)."""
    return any(r.rank > 1 for r in t.populated())


def sector_blocked(op: Operator) -> Operator:
    """``sum_nm Pi_nm op Pi_nm``: the sector-diagonal part of ``op``."""

    def apply(phi: FieldState) -> FieldState:
        out = phi.zero()
        for sector in phi.sectors():
            block = phi.restrict(lambda k, sec=sector: sector_of(k) == sec)
            out = out + op(block).restrict(lambda k, sec=sector: sector_of(k) == sec)
        return out

    return apply


def separable_mixture_expectation(s: FieldState, op: Operator, leak_tol: float = 1e-12) -> float:
    """``<op>`` as ``sum_nm <Pi_nm> <op>_{psi_nm}`` for a sector-diagonal ``op``.

    Raises :class:`ContractViolation` if ``op`` maps some sector component of
    ``s`` outside that sector.
    """
    terms = []
    for n, m in s.sectors():
        psi_nm, weight = project_fixed_numbers(s, n, m)
        image = op(psi_nm)
        stray = image.restrict(lambda k: sector_of(k) != (n, m))
        if stray.norm() > leak_tol:
            raise ContractViolation(f"operator mixes sector ({n}, {m}) with others")
        terms.append(weight * inner_product(psi_nm, image).real)
    return math.fsum(terms)


@dataclass(frozen=True, eq=False)
class ViolationConditionReport:
    sector: tuple[int, int]
    rank: int
    weight: float
    projected_ch: float
    leakage_a: float
    leakage_b: float
    mismatched_weight_a: float
    mismatched_weight_b: float
    full_ch: float
    ns_condition_holds: bool
    simple_sufficient_holds: bool
    settings: SettingAngles
    branch: int

    @property
    def predicted_full_ch(self) -> float:
        return self.weight * self.projected_ch - self.leakage_a - self.leakage_b

    def to_dict(self) -> dict:
        return {
            "sector": list(self.sector),
            "rank": self.rank,
            "weight": self.weight,
            "projected_ch": self.projected_ch,
            "leakage_a": self.leakage_a,
            "leakage_b": self.leakage_b,
            "mismatched_weight_a": self.mismatched_weight_a,
            "mismatched_weight_b": self.mismatched_weight_b,
            "full_ch": self.full_ch,
            "predicted_full_ch": self.predicted_full_ch,
            "ns_condition_holds": self.ns_condition_holds,
            "simple_sufficient_holds": self.simple_sufficient_holds,
            "settings": self.settings.to_dict(),
            "branch": self.branch,
        }


def _mismatched(s: FieldState, n: int, m: int, party: Party) -> FieldState:
    """Component with A count n and B count != m (party A), or the mirror image."""
    if party is Party.A:
        return s.restrict(lambda k: sum(k[0]) == n and sum(k[1]) != m)
    return s.restrict(lambda k: sum(k[1]) == m and sum(k[0]) != n)


def sector_pair(
    s: FieldState, sector: tuple[int, int], rank_tol: float = DEFAULT_RANK_TOL
) -> tuple[FieldState, float, EffectiveQubitPair]:
    """Projected state, its weight and its top Schmidt pair."""
    n, m = sector
    projected, weight = project_fixed_numbers(s, n, m)
    d = schmidt_decompose(projected, rank_tol)
    if d.rank < 2:
        raise SeparableStateError(f"sector ({n}, {m}) has rank 1: construction inapplicable")
    return projected, weight, effective_pair_from_schmidt(d)


def violation_from_projection(
    s: FieldState,
    sector: tuple[int, int],
    settings: SettingAngles | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
    weight_tol: float = DEFAULT_WEIGHT_TOL,
) -> ViolationConditionReport:
    """Build the CH operator inside ``sector`` and test it on the full state.

    Without explicit ``settings`` the numerically optimal ones for the
    sector's Schmidt pair are used.  The branch is fixed on the projected
    state and reused on ``s``.
    """
    n, m = sector
    projected, weight, pair = sector_pair(s, sector, rank_tol)
    if settings is None:
        settings = numeric_optimal_settings(pair)[0]
    on_proj = ch_probabilities(projected, pair, settings)
    branch = on_proj.selected_branch
    on_full = ch_probabilities(s, pair, settings, branch=branch)

    u, v = measurement_vectors(pair, settings)
    mis_a = _mismatched(s, n, m, Party.A)
    mis_b = _mismatched(s, n, m, Party.B)
    loc_b = v["b"] if branch == 1 else v["b'"]
    leak_a = partial_overlap(mis_a, u["a'"], Party.A).norm_squared()
    leak_b = partial_overlap(mis_b, loc_b, Party.B).norm_squared()
    w_a, w_b = mis_a.norm_squared(), mis_b.norm_squared()
    rank = schmidt_rank(projected, rank_tol)
    return ViolationConditionReport(
        sector=(n, m),
        rank=rank,
        weight=weight,
        projected_ch=on_proj.selected_ch,
        leakage_a=leak_a,
        leakage_b=leak_b,
        mismatched_weight_a=w_a,
        mismatched_weight_b=w_b,
        full_ch=on_full.selected_ch,
        ns_condition_holds=rank > 1 and leak_a + leak_b < weight * on_proj.selected_ch,
        simple_sufficient_holds=rank > 1 and w_a <= weight_tol and w_b <= weight_tol,
        settings=settings,
        branch=branch,
    )


def detect_identifiable_schmidt_form(
    s: FieldState,
    sector: tuple[int, int],
    tol: float = DEFAULT_WEIGHT_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> bool:
    """True when ``sector`` holds an entangled block and no weight shares exactly one of its numbers."""
    n, m = sector
    try:
        projected, _ = project_fixed_numbers(s, n, m)
    except EmptySectorError:
        return False
    if schmidt_rank(projected, rank_tol) < 2:
        return False
    return (
        _mismatched(s, n, m, Party.A).norm_squared() <= tol
        and _mismatched(s, n, m, Party.B).norm_squared() <= tol
    )
