"""Sparse pure states on a truncated two-party Fock space.

A state is stored as a map from basis keys to complex amplitudes.  A basis key
is a pair ``(a_occ, b_occ)`` of occupation tuples aligned with the (sorted)
mode lists of a :class:`ModePartition`, i.e. the occupation-number vector
``|n_1, n_2, ...; m_1, m_2, ...>`` split between the two parties.

Vectors living on one party only (Schmidt vectors, local measurement vectors)
are ordinary :class:`FieldState` objects whose partition has an empty mode
list on the other side; their keys carry an empty tuple there.

Fermionic phases follow the ascending-mode convention: a basis vector is
``prod_k (c_k^dagger)^{n_k} |vacuum>`` with modes taken in ascending
:class:`ModeId` order (all A modes precede all B modes).  Cross-party
operations (``partial_overlap``, ``tensor``) work in the tensor-product picture
of the occupation basis and attach no extra reordering sign.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping

from .errors import (
    EmptySectorError,
    PartitionMismatchError,
    ZeroStateError,
)

Occupation = tuple[int, ...]
BasisKey = tuple[Occupation, Occupation]
Operator = Callable[["FieldState"], "FieldState"]


class Party(str, Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Party":
        return Party.B if self is Party.A else Party.A


class Statistics(str, Enum):
    BOSON = "boson"
    FERMION = "fermion"


_LABEL_RE = re.compile(r"^([abAB])(\d+)(?:@(\d+))?$")


@dataclass(frozen=True)
class ModeId:
    """A single field mode, owned by one party.

    ``field_tag`` distinguishes modes of different (mutually commuting) fields.
    """

    party: Party
    index: int
    field_tag: int = 0

    def __post_init__(self):
        object.__setattr__(self, "party", Party(self.party))
        if self.index < 0 or self.field_tag < 0:
            raise ValueError(f"negative mode index or field tag: {self!r}")

    @property
    def sort_key(self) -> tuple[str, int, int]:
        return (self.party.value, self.field_tag, self.index)

    def __lt__(self, other: "ModeId") -> bool:
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        label = f"{self.party.value.lower()}{self.index}"
        return label if self.field_tag == 0 else f"{label}@{self.field_tag}"

    @classmethod
    def parse(cls, label: str) -> "ModeId":
        """Parse labels such as ``"a1"``, ``"B2"`` or ``"a3@1"``."""
        match = _LABEL_RE.match(label.strip())
        if match is None:
            raise ValueError(f"cannot parse mode label {label!r}")
        party, index, tag = match.groups()
        return cls(Party(party.upper()), int(index), int(tag or 0))


def a_mode(index: int, field_tag: int = 0) -> ModeId:
    return ModeId(Party.A, index, field_tag)


def b_mode(index: int, field_tag: int = 0) -> ModeId:
    return ModeId(Party.B, index, field_tag)


@dataclass(frozen=True)
class ModePartition:
    """Disjoint, sorted mode lists for parties A and B."""

    a_modes: tuple[ModeId, ...] = ()
    b_modes: tuple[ModeId, ...] = ()

    def __post_init__(self):
        a = tuple(sorted(self.a_modes))
        b = tuple(sorted(self.b_modes))
        if any(m.party is not Party.A for m in a) or any(m.party is not Party.B for m in b):
            raise ValueError("mode listed under the wrong party")
        if len(set(a)) != len(a) or len(set(b)) != len(b):
            raise ValueError("duplicate mode in partition")
        object.__setattr__(self, "a_modes", a)
        object.__setattr__(self, "b_modes", b)

    @classmethod
    def simple(cls, n_a: int, n_b: int) -> "ModePartition":
        """Modes ``a1..a{n_a}`` and ``b1..b{n_b}`` of a single field."""
        return cls(
            tuple(a_mode(i) for i in range(1, n_a + 1)),
            tuple(b_mode(i) for i in range(1, n_b + 1)),
        )

    def modes(self, party: Party) -> tuple[ModeId, ...]:
        return self.a_modes if Party(party) is Party.A else self.b_modes

    @property
    def all_modes(self) -> tuple[ModeId, ...]:
        return self.a_modes + self.b_modes

    @property
    def is_bipartite(self) -> bool:
        return bool(self.a_modes) and bool(self.b_modes)

    def locate(self, mode: ModeId) -> tuple[int, int]:
        """Return ``(side, position)`` with side 0 for A and 1 for B."""
        modes = self.a_modes if mode.party is Party.A else self.b_modes
        try:
            return (0 if mode.party is Party.A else 1), modes.index(mode)
        except ValueError:
            raise PartitionMismatchError(f"mode {mode} not in partition") from None

    def restrict(self, party: Party) -> "ModePartition":
        if Party(party) is Party.A:
            return ModePartition(self.a_modes, ())
        return ModePartition((), self.b_modes)

    def union(self, other: "ModePartition") -> "ModePartition":
        if set(self.all_modes) & set(other.all_modes):
            raise PartitionMismatchError("mode collision between partitions")
        return ModePartition(self.a_modes + other.a_modes, self.b_modes + other.b_modes)


@dataclass(frozen=True)
class TruncationPolicy:
    """Per-party cap on total quanta, plus the modulus below which amplitudes are dropped."""

    max_quanta_per_side: int = 10
    amplitude_floor: float = 1e-12

    def __post_init__(self):
        if self.max_quanta_per_side < 0:
            raise ValueError("max_quanta_per_side must be non-negative")
        if self.amplitude_floor < 0:
            raise ValueError("amplitude_floor must be non-negative")

    def admits(self, key: BasisKey) -> bool:
        return sum(key[0]) <= self.max_quanta_per_side and sum(key[1]) <= self.max_quanta_per_side


def occupation_order(occ: Occupation) -> tuple[int, Occupation]:
    """Graded lexicographic order: total count first, then the counts."""
    return (sum(occ), occ)


def key_order(key: BasisKey) -> tuple:
    return (sum(key[0]), key[0], sum(key[1]), key[1])


def sector_of(key: BasisKey) -> tuple[int, int]:
    return sum(key[0]), sum(key[1])


@dataclass(frozen=True, eq=False)
class FieldState:
    """Pure state as a sparse amplitude map over the occupation basis.

    ``pruned_weight`` records squared norm discarded by truncation while the
    state was built; it is informational and never re-added.
    """

    partition: ModePartition
    amplitudes: Mapping[BasisKey, complex]
    statistics: Statistics = Statistics.BOSON
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    pruned_weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        n_a, n_b = len(self.partition.a_modes), len(self.partition.b_modes)
        floor = self.truncation.amplitude_floor
        fermion = self.statistics is Statistics.FERMION
        clean: dict[BasisKey, complex] = {}
        for (a_occ, b_occ), amp in self.amplitudes.items():
            key = (tuple(int(c) for c in a_occ), tuple(int(c) for c in b_occ))
            if len(key[0]) != n_a or len(key[1]) != n_b:
                raise PartitionMismatchError(f"key {key} does not match partition")
            if any(c < 0 for c in key[0] + key[1]):
                raise ValueError(f"negative occupation in {key}")
            if fermion and any(c > 1 for c in key[0] + key[1]):
                raise ValueError(f"fermionic occupation above one in {key}")
            if not self.truncation.admits(key):
                raise ValueError(f"key {key} exceeds truncation {self.truncation.max_quanta_per_side}")
            amp = complex(amp)
            if abs(amp) < floor or amp == 0:
                continue
            clean[key] = clean.get(key, 0j) + amp
        ordered = {k: clean[k] for k in sorted(clean, key=key_order)}
        object.__setattr__(self, "amplitudes", MappingProxyType(ordered))

    # construction helpers

    @classmethod
    def from_terms(
        cls,
        partition: ModePartition,
        terms: Iterable[tuple[Occupation, Occupation, complex]],
        **kwargs,
    ) -> "FieldState":
        amps: dict[BasisKey, complex] = {}
        for a_occ, b_occ, amp in terms:
            key = (tuple(a_occ), tuple(b_occ))
            amps[key] = amps.get(key, 0j) + amp
        return cls(partition, amps, **kwargs)

    @classmethod
    def basis(cls, partition: ModePartition, a_occ: Occupation, b_occ: Occupation, **kwargs) -> "FieldState":
        return cls(partition, {(tuple(a_occ), tuple(b_occ)): 1.0}, **kwargs)

    @classmethod
    def vacuum(cls, partition: ModePartition, **kwargs) -> "FieldState":
        zero = ((0,) * len(partition.a_modes), (0,) * len(partition.b_modes))
        return cls(partition, {zero: 1.0}, **kwargs)

    def zero(self) -> "FieldState":
        return replace(self, amplitudes={})

    def with_amplitudes(self, amplitudes: Mapping[BasisKey, complex], **changes) -> "FieldState":
        return replace(self, amplitudes=amplitudes, **changes)

    # basic queries

    def __len__(self) -> int:
        return len(self.amplitudes)

    def __iter__(self) -> Iterator[tuple[BasisKey, complex]]:
        return iter(self.amplitudes.items())

    def amplitude(self, a_occ: Occupation, b_occ: Occupation) -> complex:
        return self.amplitudes.get((tuple(a_occ), tuple(b_occ)), 0j)

    def norm_squared(self) -> float:
        return math.fsum(abs(v) ** 2 for v in self.amplitudes.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    @property
    def is_zero(self) -> bool:
        return not self.amplitudes

    def normalized(self) -> "FieldState":
        nrm = self.norm()
        if nrm == 0.0:
            raise ZeroStateError("cannot normalize the zero state")
        return self.with_amplitudes({k: v / nrm for k, v in self.amplitudes.items()})

    def sectors(self) -> list[tuple[int, int]]:
        """Occupied (n, m) sectors, ordered by (n + m, n)."""
        found = {sector_of(k) for k in self.amplitudes}
        return sorted(found, key=lambda s: (s[0] + s[1], s[0]))

    def restrict(self, predicate: Callable[[BasisKey], bool]) -> "FieldState":
        """Unnormalized component on the keys accepted by ``predicate``."""
        return self.with_amplitudes({k: v for k, v in self.amplitudes.items() if predicate(k)})

    def allclose(self, other: "FieldState", atol: float = 1e-12) -> bool:
        _check_compatible(self, other)
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self.amplitude(*k) - other.amplitude(*k)) <= atol for k in keys)

    # linear structure

    def _combine(self, other: "FieldState", sign: float) -> "FieldState":
        _check_compatible(self, other)
        out = dict(self.amplitudes)
        for k, v in other.amplitudes.items():
            out[k] = out.get(k, 0j) + sign * v
        cap = max(self.truncation.max_quanta_per_side, other.truncation.max_quanta_per_side)
        return self.with_amplitudes(
            out,
            truncation=replace(self.truncation, max_quanta_per_side=cap),
            pruned_weight=max(self.pruned_weight, other.pruned_weight),
        )

    def __add__(self, other: "FieldState") -> "FieldState":
        return self._combine(other, 1.0)

    def __sub__(self, other: "FieldState") -> "FieldState":
        return self._combine(other, -1.0)

    def __mul__(self, scalar: complex) -> "FieldState":
        return self.with_amplitudes({k: scalar * v for k, v in self.amplitudes.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "FieldState":
        return self * -1.0

    def __repr__(self) -> str:
        head = ", ".join(f"{k}: {v:.6g}" for k, v in list(self.amplitudes.items())[:4])
        more = ", ..." if len(self.amplitudes) > 4 else ""
        return f"FieldState({self.statistics.value}, {len(self)} terms: {{{head}{more}}})"


def _check_compatible(x: FieldState, y: FieldState) -> None:
    if x.partition != y.partition:
        raise PartitionMismatchError("states live on different partitions")
    if x.statistics is not y.statistics:
        raise PartitionMismatchError("states have different statistics")


def inner_product(x: FieldState, y: FieldState) -> complex:
    """<x|y> in the orthonormal occupation basis."""
    _check_compatible(x, y)
    small, large = (x, y) if len(x) <= len(y) else (y, x)
    terms = [
        x.amplitudes[k].conjugate() * y.amplitudes[k]
        for k in small.amplitudes
        if k in large.amplitudes
    ]
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def expectation(s: FieldState, op: Operator) -> float:
    """Real part of <s|op|s>; ``op`` is assumed Hermitian."""
    return inner_product(s, op(s)).real


def _fermion_sign(key: BasisKey, side: int, pos: int) -> int:
    # number of occupied modes preceding the target in ascending mode order
    preceding = sum(key[0][:pos]) if side == 0 else sum(key[0]) + sum(key[1][:pos])
    return -1 if preceding % 2 else 1


def _ladder(s: FieldState, mode: ModeId, step: int) -> FieldState:
    side, pos = s.partition.locate(mode)
    fermion = s.statistics is Statistics.FERMION
    cap = s.truncation.max_quanta_per_side
    out: dict[BasisKey, complex] = {}
    lost = []
    for key, amp in s.amplitudes.items():
        occ = list(key[side])
        n = occ[pos]
        if step > 0:
            if fermion and n >= 1:
                continue
            factor = math.sqrt(n + 1)
        else:
            if n == 0:
                continue
            factor = math.sqrt(n)
        if fermion:
            factor *= _fermion_sign(key, side, pos)
        occ[pos] = n + step
        new_key = (tuple(occ), key[1]) if side == 0 else (key[0], tuple(occ))
        value = factor * amp
        if sum(new_key[side]) > cap:
            lost.append(abs(value) ** 2)
            continue
        out[new_key] = value
    return s.with_amplitudes(out, pruned_weight=s.pruned_weight + math.fsum(lost))


def apply_creation(s: FieldState, mode: ModeId) -> FieldState:
    """Apply the creation operator of ``mode``.

    Terms pushed beyond the per-side quanta cap are dropped; their squared
    norm is added to ``pruned_weight`` of the result.
    """
    return _ladder(s, mode, +1)


def apply_annihilation(s: FieldState, mode: ModeId) -> FieldState:
    """Apply the annihilation operator of ``mode``; check ``is_zero`` on the result."""
    return _ladder(s, mode, -1)


def project_fixed_numbers(s: FieldState, n: int, m: int) -> tuple[FieldState, float]:
    """Project onto n quanta in the A modes and m in the B modes.

    Returns the renormalized projection and its weight ``<s|Pi_nm|s>``.
    """
    if n < 0 or m < 0:
        raise ValueError("particle numbers must be non-negative")
    block = s.restrict(lambda k: sector_of(k) == (n, m))
    weight = block.norm_squared()
    if weight == 0.0:
        raise EmptySectorError(f"sector ({n}, {m}) is empty")
    return block.normalized(), weight


def party_projector(party: Party, count: int) -> Operator:
    """Projector onto exactly ``count`` quanta in the modes of ``party``."""
    side = 0 if Party(party) is Party.A else 1
    return lambda s: s.restrict(lambda k: sum(k[side]) == count)


def sector_projector(n: int, m: int) -> Operator:
    return lambda s: s.restrict(lambda k: sector_of(k) == (n, m))


def number_operator(party: Party) -> Operator:
    """Total quanta in the modes of ``party``."""
    side = 0 if Party(party) is Party.A else 1
    return lambda s: s.with_amplitudes({k: sum(k[side]) * v for k, v in s.amplitudes.items()})


def _local_side(v: FieldState) -> Party:
    if v.partition.b_modes and not v.partition.a_modes:
        return Party.B
    if v.partition.a_modes and not v.partition.b_modes:
        return Party.A
    raise PartitionMismatchError("vector is not supported on a single party")


def partial_overlap(s: FieldState, v: FieldState, side: Party) -> FieldState:
    """Contract ``s`` with the one-party vector ``v`` on ``side``.

    Returns ``w`` on the other party with ``w(k') = sum_k conj(v(k)) s(k, k')``,
    so that ``<w|w> = <s|(|v><v| (x) Id)|s>``.
    """
    side = Party(side)
    if _local_side(v) is not side or v.partition.modes(side) != s.partition.modes(side):
        raise PartitionMismatchError(f"vector is not a party-{side.value} vector of this state")
    if v.statistics is not s.statistics:
        raise PartitionMismatchError("statistics differ")
    idx = 0 if side is Party.A else 1
    coeffs = {k[idx]: c.conjugate() for k, c in v.amplitudes.items()}
    acc: dict[Occupation, list[complex]] = {}
    for key, amp in s.amplitudes.items():
        c = coeffs.get(key[idx])
        if c is not None:
            acc.setdefault(key[1 - idx], []).append(c * amp)
    out = {}
    for occ, terms in acc.items():
        value = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
        out[(occ, ()) if side is Party.B else ((), occ)] = value
    return FieldState(
        s.partition.restrict(side.other),
        out,
        statistics=s.statistics,
        truncation=s.truncation,
    )


def tensor(x: FieldState, y: FieldState) -> FieldState:
    """Product state on the union of two disjoint mode sets."""
    if x.statistics is not y.statistics:
        raise PartitionMismatchError("statistics differ")
    part = x.partition.union(y.partition)
    maps = []
    for src in (x.partition, y.partition):
        maps.append(
            (
                [part.a_modes.index(m) for m in src.a_modes],
                [part.b_modes.index(m) for m in src.b_modes],
            )
        )
    n_a, n_b = len(part.a_modes), len(part.b_modes)

    def place(key: BasisKey, where, into_a: list[int], into_b: list[int]):
        for count, slot in zip(key[0], where[0]):
            into_a[slot] = count
        for count, slot in zip(key[1], where[1]):
            into_b[slot] = count

    out: dict[BasisKey, complex] = {}
    for kx, vx in x.amplitudes.items():
        for ky, vy in y.amplitudes.items():
            occ_a, occ_b = [0] * n_a, [0] * n_b
            place(kx, maps[0], occ_a, occ_b)
            place(ky, maps[1], occ_a, occ_b)
            out[(tuple(occ_a), tuple(occ_b))] = vx * vy
    policy = TruncationPolicy(
        x.truncation.max_quanta_per_side + y.truncation.max_quanta_per_side,
        min(x.truncation.amplitude_floor, y.truncation.amplitude_floor),
    )
    return FieldState(
        part,
        out,
        statistics=x.statistics,
        truncation=policy,
        pruned_weight=x.pruned_weight + y.pruned_weight,
    )


def tensor_with_ancilla(s: FieldState, anc: FieldState) -> FieldState:
    """Attach an ancilla state living on fresh modes of a single party."""
    _local_side(anc)
    return tensor(s, anc)


def embed(s: FieldState, partition: ModePartition) -> FieldState:
    """Re-express ``s`` on a larger partition, with vacuum in the added modes."""
    if not set(s.partition.all_modes) <= set(partition.all_modes):
        raise PartitionMismatchError("target partition lacks some modes of the state")
    pos_a = [partition.a_modes.index(m) for m in s.partition.a_modes]
    pos_b = [partition.b_modes.index(m) for m in s.partition.b_modes]
    out = {}
    for (ka, kb), v in s.amplitudes.items():
        occ_a, occ_b = [0] * len(partition.a_modes), [0] * len(partition.b_modes)
        for c, p in zip(ka, pos_a):
            occ_a[p] = c
        for c, p in zip(kb, pos_b):
            occ_b[p] = c
        out[(tuple(occ_a), tuple(occ_b))] = v
    return replace(s, partition=partition, amplitudes=out)
