"""State-specific Clauser-Horne functionals built from two Schmidt terms.

Two Schmidt terms ``lambda_1 F_1 G_1 + lambda_2 F_2 G_2`` define an effective
two-qubit system.  The qubit encoding is fixed as

    A:  F_1 -> |0>,  F_2 -> |1>
    B:  G_2 -> |0>,  G_1 -> |1>

so the pair reads ``lambda_1 |01> + lambda_2 |10>``.  Field Pauli operators act
as ordinary Pauli matrices on ``span{F_1, F_2}`` (tensored with the identity on
the whole of party B) and annihilate everything else; the same holds with the
roles of the parties swapped.

Measurement directions lie in the x-z plane of the Bloch sphere,
``(sin t, 0, cos t)``.  Outcome "0" is the +1 eigenvalue of the measured field
Pauli observable on both sides, so that on the pair's subspace
``E = 4 p(0,0) - 2 p(0|a) - 2 p(0|b) + 1`` and ``CH = (CHSH - 2) / 4`` per
branch.  All probabilities are exact expectation values of projectors on the
input state, never sampled.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import minimize

from .errors import ContractViolation, SeparableStateError
from .fock import (
    FieldState,
    Operator,
    Party,
    inner_product,
    partial_overlap,
    tensor,
)
from .schmidt import SchmidtDecomposition, reconstruct

SETTING_NAMES = ("a", "a'", "b", "b'")
VIOLATION_TOL = 1e-12
SETTINGS_FLAG_TOL = 1e-6

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def _wrap(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def bloch_observable(theta: float) -> np.ndarray:
    """``(sin t, 0, cos t) . sigma`` as a 2x2 matrix."""
    return np.array([[math.cos(theta), math.sin(theta)], [math.sin(theta), -math.cos(theta)]])


def plus_vector(theta: float) -> np.ndarray:
    return np.array([math.cos(theta / 2), math.sin(theta / 2)])


@dataclass(frozen=True, eq=False)
class EffectiveQubitPair:
    lambda1: float
    lambda2: float
    F1: FieldState
    F2: FieldState
    G1: FieldState
    G2: FieldState

    def __post_init__(self):
        if not self.lambda1 >= self.lambda2 >= 0.0:
            raise ValueError("need lambda1 >= lambda2 >= 0")
        for u, v in ((self.F1, self.F2), (self.G1, self.G2)):
            gram = np.array([[inner_product(x, y) for y in (u, v)] for x in (u, v)])
            if np.max(np.abs(gram - np.eye(2))) > 1e-10:
                raise ValueError("pair vectors are not orthonormal")

    @property
    def weight(self) -> float:
        """``lambda_1^2 + lambda_2^2``, the weight of the pair inside the state."""
        return self.lambda1**2 + self.lambda2**2

    @property
    def normalized_lambdas(self) -> tuple[float, float]:
        n = math.sqrt(self.weight)
        return self.lambda1 / n, self.lambda2 / n

    def local_vector(self, party: Party, qubit: np.ndarray) -> FieldState:
        """Fock vector for qubit amplitudes ``(c_0, c_1)`` in the fixed encoding."""
        if Party(party) is Party.A:
            return qubit[0] * self.F1 + qubit[1] * self.F2
        return qubit[0] * self.G2 + qubit[1] * self.G1

    def phi12(self) -> FieldState:
        """The normalized two-term state ``(l1 F1 G1 + l2 F2 G2) / sqrt(l1^2 + l2^2)``."""
        l1, l2 = self.normalized_lambdas
        return l1 * tensor(self.F1, self.G1) + l2 * tensor(self.F2, self.G2)

    def qubit_amplitudes(self) -> np.ndarray:
        l1, l2 = self.normalized_lambdas
        return np.array([[0.0, l1], [l2, 0.0]], dtype=complex)


@dataclass(frozen=True)
class SettingAngles:
    alpha: float
    alpha_prime: float
    beta: float
    beta_prime: float

    def __post_init__(self):
        for name in ("alpha", "alpha_prime", "beta", "beta_prime"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, _wrap(value))

    def by_name(self) -> dict[str, float]:
        return dict(zip(SETTING_NAMES, (self.alpha, self.alpha_prime, self.beta, self.beta_prime)))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "alpha_prime": self.alpha_prime, "beta": self.beta, "beta_prime": self.beta_prime}


def effective_pair_from_schmidt(d: SchmidtDecomposition, terms: tuple[int, int] = (0, 1)) -> EffectiveQubitPair:
    """Two Schmidt terms of ``d`` as an effective qubit pair (coefficients not renormalized)."""
    if d.rank < 2:
        raise SeparableStateError("state is separable: Schmidt rank below two")
    i, j = terms
    if not (0 <= i < d.rank and 0 <= j < d.rank and i < j):
        raise ValueError(f"invalid Schmidt term indices {terms}")
    c = d.coefficients
    return EffectiveQubitPair(float(c[i]), float(c[j]), d.a_vectors[i], d.a_vectors[j], d.b_vectors[i], d.b_vectors[j])


def effective_amplitudes(s: FieldState, pair: EffectiveQubitPair) -> np.ndarray:
    """``c[k, n] = <F_k (x) G_n | s>`` for k, n in {1, 2}."""
    out = np.zeros((2, 2), dtype=complex)
    for k, f in enumerate((pair.F1, pair.F2)):
        w = partial_overlap(s, f, Party.A)
        for n, g in enumerate((pair.G1, pair.G2)):
            out[k, n] = inner_product(g, w)
    return out


def _to_qubit(c: np.ndarray) -> np.ndarray:
    # columns G1, G2 -> qubit |1>, |0>
    return c[:, ::-1]


def _qubit_correlation(q: np.ndarray, alpha: float, beta: float) -> float:
    a, b = bloch_observable(alpha), bloch_observable(beta)
    return float(np.einsum("ij,ik,jl,kl->", q.conj(), a, b, q).real)


def correlation(s: FieldState, pair: EffectiveQubitPair, alpha: float, beta: float) -> float:
    """Field correlation ``<(alpha.Sigma_A)(beta.Sigma_B)>`` on ``s``."""
    return _qubit_correlation(_to_qubit(effective_amplitudes(s, pair)), alpha, beta)


def field_pauli_matrices(party: Party) -> dict[str, np.ndarray]:
    """Field Pauli operators on the pair's 2-d subspace, in the basis (F1, F2) or (G1, G2)."""
    # P^{kk'} -> E_{kk'} in the F/G basis
    e = [[np.zeros((2, 2), dtype=complex) for _ in range(2)] for _ in range(2)]
    for k, kk in itertools.product(range(2), repeat=2):
        e[k][kk][k, kk] = 1.0
    if Party(party) is Party.A:
        return {
            "x": e[0][1] + e[1][0],
            "y": -1j * (e[0][1] - e[1][0]),
            "z": e[0][0] - e[1][1],
        }
    return {
        "x": e[0][1] + e[1][0],
        "y": -1j * (e[1][0] - e[0][1]),
        "z": e[1][1] - e[0][0],
    }


def _joint(x: str, y: str) -> str:
    return f"p(0,0|{x},{y})"


def _marg(x: str) -> str:
    return f"p(0|{x})"


def ch_functional(branch: int) -> dict[str, int]:
    """Coefficients of the CH expression (classical bound 0) over the probability table."""
    if branch == 1:
        return {
            _joint("a", "b"): 1, _joint("a'", "b"): 1, _joint("a'", "b'"): 1, _joint("a", "b'"): -1,
            _marg("a'"): -1, _marg("b"): -1,
        }
    if branch == 2:
        return {
            _joint("a", "b'"): 1, _joint("a'", "b"): 1, _joint("a'", "b'"): 1, _joint("a", "b"): -1,
            _marg("a'"): -1, _marg("b'"): -1,
        }
    raise ValueError("branch must be 1 or 2")


def chsh_functional(branch: int) -> dict[str, int]:
    """Coefficients of the CHSH expression (classical bound 2) over the correlators."""
    if branch == 1:
        return {"E(a,b)": 1, "E(a,b')": -1, "E(a',b)": 1, "E(a',b')": 1}
    if branch == 2:
        return {"E(a,b')": 1, "E(a,b)": -1, "E(a',b)": 1, "E(a',b')": 1}
    raise ValueError("branch must be 1 or 2")


def evaluate_functional(coeffs: Mapping[str, float], table: Mapping[str, float]) -> float:
    return math.fsum(c * table[k] for k, c in coeffs.items())


@dataclass(frozen=True, eq=False)
class CHReport:
    settings: SettingAngles
    probabilities: dict[str, float]
    correlations: dict[str, float]
    ch_branch1: float
    ch_branch2: float
    chsh_branch1: float
    chsh_branch2: float
    selected_branch: int
    violation: bool
    effective_amplitudes: np.ndarray

    @property
    def selected_ch(self) -> float:
        return self.ch_branch1 if self.selected_branch == 1 else self.ch_branch2

    @property
    def selected_chsh(self) -> float:
        return self.chsh_branch1 if self.selected_branch == 1 else self.chsh_branch2

    def to_dict(self) -> dict:
        c = self.effective_amplitudes
        return {
            "settings": self.settings.to_dict(),
            "probabilities": dict(self.probabilities),
            "correlations": dict(self.correlations),
            "ch_branch1": self.ch_branch1,
            "ch_branch2": self.ch_branch2,
            "chsh_branch1": self.chsh_branch1,
            "chsh_branch2": self.chsh_branch2,
            "selected_branch": self.selected_branch,
            "selected_ch": self.selected_ch,
            "violation": self.violation,
            "effective_amplitudes": [[{"re": z.real, "im": z.imag} for z in row] for row in c.tolist()],
        }


def measurement_vectors(pair: EffectiveQubitPair, settings: SettingAngles) -> tuple[dict, dict]:
    angles = settings.by_name()
    u = {x: pair.local_vector(Party.A, plus_vector(angles[x])) for x in ("a", "a'")}
    v = {y: pair.local_vector(Party.B, plus_vector(angles[y])) for y in ("b", "b'")}
    return u, v


def ch_probabilities(
    s: FieldState,
    pair: EffectiveQubitPair,
    settings: SettingAngles,
    branch: int | None = None,
    violation_tol: float = VIOLATION_TOL,
) -> CHReport:
    """Evaluate both CH inequalities on ``s`` with the operators of ``pair``.

    Marginals are computed with one-sided projectors (identity on the whole of
    the other party), so weight outside the pair's subspace is accounted for.
    ``branch`` overrides the choice made from the correlators.
    """
    u, v = measurement_vectors(pair, settings)
    w = {x: partial_overlap(s, u[x], Party.A) for x in u}
    table: dict[str, float] = {}
    for x, y in itertools.product(("a", "a'"), ("b", "b'")):
        table[_joint(x, y)] = abs(inner_product(v[y], w[x])) ** 2
    for x in ("a", "a'"):
        table[_marg(x)] = w[x].norm_squared()
    for y in ("b", "b'"):
        table[_marg(y)] = partial_overlap(s, v[y], Party.B).norm_squared()

    c = effective_amplitudes(s, pair)
    q = _to_qubit(c)
    angles = settings.by_name()
    corr = {
        f"E({x},{y})": _qubit_correlation(q, angles[x], angles[y])
        for x, y in itertools.product(("a", "a'"), ("b", "b'"))
    }
    if branch is None:
        branch = 1 if corr["E(a,b)"] >= corr["E(a,b')"] else 2
    ch1 = evaluate_functional(ch_functional(1), table)
    ch2 = evaluate_functional(ch_functional(2), table)
    selected = ch1 if branch == 1 else ch2
    return CHReport(
        settings=settings,
        probabilities=table,
        correlations=corr,
        ch_branch1=ch1,
        ch_branch2=ch2,
        chsh_branch1=evaluate_functional(chsh_functional(1), corr),
        chsh_branch2=evaluate_functional(chsh_functional(2), corr),
        selected_branch=branch,
        violation=selected > violation_tol,
        effective_amplitudes=c,
    )


def ch_operator(pair: EffectiveQubitPair, settings: SettingAngles, branch: int) -> Operator:
    """The CH Bell operator as a linear map on states."""
    u, v = measurement_vectors(pair, settings)
    coeffs = ch_functional(branch)
    joints = []
    for x, y in itertools.product(("a", "a'"), ("b", "b'")):
        joints.append((coeffs.get(_joint(x, y), 0), tensor(u[x], v[y])))
    loc_a = u["a'"]
    loc_b = v["b"] if branch == 1 else v["b'"]

    def apply(phi: FieldState) -> FieldState:
        out = phi.zero()
        for coeff, uv in joints:
            if coeff:
                out = out + (coeff * inner_product(uv, phi)) * uv
        out = out - tensor(loc_a, partial_overlap(phi, loc_a, Party.A))
        out = out - tensor(partial_overlap(phi, loc_b, Party.B), loc_b)
        return out

    return apply


@dataclass(frozen=True)
class BellOperatorDecomposition:
    """CH value split as ``nl - loc_a - loc_b``.

    ``leakage_a`` is the part of ``loc_a`` carried by components of the state
    whose B side lies outside ``span{G_1, G_2}`` (symmetrically for B).  It
    vanishes when the pair comes from the state's own Schmidt decomposition.
    """

    nl_expectation: float
    loc_a_expectation: float
    loc_b_expectation: float
    leakage_a: float
    leakage_b: float
    branch: int

    @property
    def ch_total(self) -> float:
        return self.nl_expectation - self.loc_a_expectation - self.loc_b_expectation


def decompose_bell_operator(
    s: FieldState, pair: EffectiveQubitPair, settings: SettingAngles, branch: int | None = None
) -> BellOperatorDecomposition:
    report = ch_probabilities(s, pair, settings, branch)
    coeffs = ch_functional(report.selected_branch)
    p = report.probabilities
    nl = math.fsum(c * p[k] for k, c in coeffs.items() if k.startswith("p(0,0"))
    y_loc = "b" if report.selected_branch == 1 else "b'"
    u, v = measurement_vectors(pair, settings)

    w_a = partial_overlap(s, u["a'"], Party.A)
    inside_a = math.fsum(abs(inner_product(g, w_a)) ** 2 for g in (pair.G1, pair.G2))
    w_b = partial_overlap(s, v[y_loc], Party.B)
    inside_b = math.fsum(abs(inner_product(f, w_b)) ** 2 for f in (pair.F1, pair.F2))
    return BellOperatorDecomposition(
        nl_expectation=nl,
        loc_a_expectation=p[_marg("a'")],
        loc_b_expectation=p[_marg(y_loc)],
        leakage_a=w_a.norm_squared() - inside_a,
        leakage_b=w_b.norm_squared() - inside_b,
        branch=report.selected_branch,
    )


def closed_form_settings(lambda1: float, lambda2: float) -> SettingAngles:
    """Closed-form settings for ``lambda_1 |01> + lambda_2 |10>``.

    ``cos(beta) = -cos(beta') = (1 + 4|lambda_1 lambda_2|)^(-1/2)`` is used
    exactly as written; both beta angles are taken with negative sine, the
    choice that makes the second CHSH branch positive.  Compare with
    :func:`numeric_optimal_settings`, which maximizes directly.
    """
    prod = lambda1 * lambda2
    cos_b = (1.0 + 4.0 * abs(prod)) ** -0.5
    return SettingAngles(
        alpha=0.0,
        alpha_prime=-float(np.sign(prod)) * math.pi / 2,
        beta=-math.acos(cos_b),
        beta_prime=-math.acos(-cos_b),
    )


def _xz_correlation_tensor(q: np.ndarray) -> np.ndarray:
    """``T[p, r] = <sigma_p (x) sigma_r>`` for p, r in (x, z)."""
    ops = (_SX, _SZ)
    return np.array(
        [[np.einsum("ij,ik,jl,kl->", q.conj(), op1, op2, q).real for op2 in ops] for op1 in ops]
    )


def _chsh_branch1(x: np.ndarray, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Branch-1 CHSH value and gradient for angles x = (a, a', b, b')."""
    a, ap, b, bp = x
    vec = lambda th: np.array([math.sin(th), math.cos(th)])
    dvec = lambda th: np.array([math.cos(th), -math.sin(th)])
    va, vap, vb, vbp = vec(a), vec(ap), vec(b), vec(bp)
    value = va @ t @ vb - va @ t @ vbp + vap @ t @ vb + vap @ t @ vbp
    grad = np.array([
        dvec(a) @ t @ (vb - vbp),
        dvec(ap) @ t @ (vb + vbp),
        (va + vap) @ t @ dvec(b),
        (vap - va) @ t @ dvec(bp),
    ])
    return float(value), grad


def chsh_max_over_branches(q: np.ndarray, settings: SettingAngles) -> float:
    ang = settings.by_name()
    e = {f"E({x},{y})": _qubit_correlation(q, ang[x], ang[y]) for x in ("a", "a'") for y in ("b", "b'")}
    return max(evaluate_functional(chsh_functional(1), e), evaluate_functional(chsh_functional(2), e))


def numeric_optimal_settings(
    pair: EffectiveQubitPair, grid_step_deg: float = 2.0, refine: bool = True
) -> tuple[SettingAngles, float]:
    """Maximize the CHSH expression of the pair over four x-z plane angles.

    A full grid over all four angles is searched (for fixed ``a, a'`` the
    maxima over ``b`` and ``b'`` decouple, which keeps it cheap), the best
    grid point is refined with BFGS, and the closed-form settings are used as
    a fallback seed.  Ties resolve to the lexicographically smallest angles.
    """
    if not 0 < grid_step_deg <= 2.0:
        raise ValueError("grid step must lie in (0, 2] degrees")
    q = pair.qubit_amplitudes()
    t = _xz_correlation_tensor(q)
    n = int(round(360.0 / grid_step_deg))
    grid = -math.pi + 2 * math.pi * np.arange(1, n + 1) / n  # (-pi, pi]
    unit = np.stack([np.sin(grid), np.cos(grid)], axis=1)
    ta = unit @ t  # row i: a_i^T T
    best_b = np.empty((n, n))
    best_bp = np.empty((n, n))
    arg_b = np.empty((n, n), dtype=int)
    arg_bp = np.empty((n, n), dtype=int)
    for i in range(n):
        s_vec = (ta[i][None, :] + ta) @ unit.T  # [k, j] -> (t_a + t_a'_k) . b_j
        d_vec = (ta - ta[i][None, :]) @ unit.T
        arg_b[i] = np.argmax(s_vec, axis=1)
        arg_bp[i] = np.argmax(d_vec, axis=1)
        best_b[i] = s_vec[np.arange(n), arg_b[i]]
        best_bp[i] = d_vec[np.arange(n), arg_bp[i]]
    total = best_b + best_bp
    i, k = np.unravel_index(int(np.argmax(total)), total.shape)
    x0 = np.array([grid[i], grid[k], grid[arg_b[i, k]], grid[arg_bp[i, k]]])

    candidates = [x0]
    closed = closed_form_settings(*pair.normalized_lambdas)
    px = np.array([closed.alpha, closed.alpha_prime, closed.beta, closed.beta_prime])
    # the closed form targets branch 2; swap b and b' to express it in branch-1 form
    candidates.append(px[[0, 1, 3, 2]])
    if refine:
        refined = []
        for c in candidates:
            res = minimize(
                lambda x: tuple(-v for v in _chsh_branch1(x, t)),
                c,
                jac=True,
                method="BFGS",
                options={"gtol": 1e-13},
            )
            refined.append(res.x if -res.fun >= _chsh_branch1(c, t)[0] else c)
        candidates = refined + candidates
    values = [_chsh_branch1(c, t)[0] for c in candidates]
    best = candidates[int(np.argmax(values))]
    settings = SettingAngles(*best)
    return settings, chsh_max_over_branches(q, settings)


def settings_for_pair(pair: EffectiveQubitPair, source: str = "numeric") -> SettingAngles:
    """Settings from ``"closed_form"`` (on normalized lambdas) or ``"numeric"``."""
    if source == "closed_form":
        return closed_form_settings(*pair.normalized_lambdas)
    if source == "numeric":
        return numeric_optimal_settings(pair)[0]
    raise ValueError(f"unknown settings source {source!r}")


@dataclass(frozen=True, eq=False)
class SettingsComparison:
    closed_form: CHReport
    numeric: CHReport
    numeric_chsh_max: float
    flag_tol: float = SETTINGS_FLAG_TOL

    @property
    def shortfall(self) -> float:
        """How far the closed-form CH value falls below the numeric optimum."""
        return self.numeric.selected_ch - self.closed_form.selected_ch

    @property
    def closed_form_suboptimal(self) -> bool:
        return self.shortfall > self.flag_tol

    def to_dict(self) -> dict:
        return {
            "closed_form": {"settings": self.closed_form.settings.to_dict(), "ch": self.closed_form.selected_ch,
                              "chsh": self.closed_form.selected_chsh},
            "numeric_search": {"settings": self.numeric.settings.to_dict(), "ch": self.numeric.selected_ch,
                               "chsh": self.numeric.selected_chsh, "chsh_max_on_pair": self.numeric_chsh_max},
            "shortfall": self.shortfall,
            "closed_form_suboptimal": self.closed_form_suboptimal,
        }


def compare_settings(s: FieldState, pair: EffectiveQubitPair) -> SettingsComparison:
    numeric, chsh_max = numeric_optimal_settings(pair)
    return SettingsComparison(
        closed_form=ch_probabilities(s, pair, closed_form_settings(*pair.normalized_lambdas)),
        numeric=ch_probabilities(s, pair, numeric),
        numeric_chsh_max=chsh_max,
    )


def verify_scaling_law(
    s: FieldState, d: SchmidtDecomposition, settings: SettingAngles, check_tol: float = 1e-8
) -> tuple[float, float]:
    """Return ``(<CH>_s, (l1^2 + l2^2) <CH>_phi12)`` for the top Schmidt pair of ``d``.

    The branch is chosen on ``phi12`` and reused on ``s``.
    """
    if d.partition != s.partition or (s - reconstruct(d)).norm() > check_tol:
        raise ContractViolation("decomposition does not belong to this state")
    pair = effective_pair_from_schmidt(d)
    phi = pair.phi12()
    on_phi = ch_probabilities(phi, pair, settings)
    on_s = ch_probabilities(s, pair, settings, branch=on_phi.selected_branch)
    return on_s.selected_ch, pair.weight * on_phi.selected_ch


_KEY_RE = re.compile(r"^(p\(0,0\||p\(0\||E\()([^,)]+)(?:,([^)]+))?\)$")


def lhv_bound_oracle(functional: Mapping[str, float]) -> float:
    """Maximum of a two-setting functional over the 16 deterministic local strategies.

    Keys follow the probability-table names (``p(0,0|x,y)``, ``p(0|x)``) or
    correlator names (``E(x,y)``), with x in {a, a'} and y in {b, b'}.
    """
    parsed = []
    for key, coeff in functional.items():
        m = _KEY_RE.match(key)
        if m is None:
            raise ValueError(f"unrecognized functional key {key!r}")
        parsed.append((m.group(1), m.group(2), m.group(3), coeff))
    best = -math.inf
    for oa, oap, ob, obp in itertools.product((0, 1), repeat=4):
        out = {"a": oa, "a'": oap, "b": ob, "b'": obp}
        total = 0.0
        for kind, x, y, coeff in parsed:
            if kind == "E(":
                total += coeff * (-1) ** (out[x] + out[y])
            elif kind == "p(0,0|":
                total += coeff * (out[x] == 0 and out[y] == 0)
            else:
                total += coeff * (out[x] == 0)
        best = max(best, total)
    return best
