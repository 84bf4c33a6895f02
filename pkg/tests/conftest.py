"""Shared fixtures, independent oracles, and the per-criterion summary."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fockbell.fock import FieldState, ModePartition, Party, Statistics, TruncationPolicy, partial_overlap
from fockbell.states import _occupations, random_state

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
CH_SINGLET = (math.sqrt(2) - 1) / 2


# oracles


def reduced_gram_eigenvalues(s: FieldState) -> np.ndarray:
    """Eigenvalues of the A-side reduced Gram matrix, built from partial overlaps only."""
    part_a = s.partition.restrict(Party.A)
    rows = sorted({k[0] for k in s.amplitudes})
    ws = []
    for occ in rows:
        e = FieldState(part_a, {(occ, ()): 1.0}, statistics=s.statistics, truncation=s.truncation)
        ws.append(partial_overlap(s, e, Party.A))
    rho = np.array([[sum(np.conj(wj.amplitudes.get(k, 0)) * v for k, v in wi.amplitudes.items()) for wj in ws]
                    for wi in ws])
    return np.sort(np.linalg.eigvalsh(rho))[::-1]


def horodecki_chsh_max(q: np.ndarray) -> float:
    """Maximal CHSH value of the two-qubit state ``q[i, j] |ij>`` over all settings."""
    psi = q.reshape(4)
    paulis = (SX, SY, SZ)
    t = np.array([[np.vdot(psi, np.kron(p, r) @ psi).real for r in paulis] for p in paulis])
    ev = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return 2 * math.sqrt(ev[0] + ev[1])


def horodecki_xz_chsh_max(q: np.ndarray) -> float:
    """Same, but with both parties restricted to the x-z plane of the Bloch sphere."""
    psi = q.reshape(4)
    paulis = (SX, SZ)
    t = np.array([[np.vdot(psi, np.kron(p, r) @ psi).real for r in paulis] for p in paulis])
    sv = np.linalg.svd(t, compute_uv=False)
    return 2 * math.sqrt(sv[0] ** 2 + sv[1] ** 2)


def random_schmidt_form(rng: np.random.Generator, n_a: int, n_b: int, q: int, rank: int) -> FieldState:
    """``sum_t lambda_t a_t b_t`` from random orthonormal local vectors (QR), descending lambdas."""
    occ_a = _occupations(n_a, q, Statistics.BOSON)
    occ_b = _occupations(n_b, q, Statistics.BOSON)
    rank = min(rank, len(occ_a), len(occ_b))

    def frame(dim):
        m = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
        return np.linalg.qr(m)[0]

    ua, ub = frame(len(occ_a)), frame(len(occ_b))
    lam = np.sort(rng.uniform(0.1, 1.0, size=rank))[::-1]
    lam /= np.linalg.norm(lam)
    c = (ua * lam) @ ub.T
    amps = {(occ_a[i], occ_b[j]): c[i, j] for i in range(len(occ_a)) for j in range(len(occ_b))}
    return FieldState(ModePartition.simple(n_a, n_b), amps, truncation=TruncationPolicy(q, 0.0))


def random_small_state(rng: np.random.Generator, statistics=Statistics.BOSON) -> FieldState:
    n_a, n_b = rng.integers(1, 4, size=2)
    q = int(rng.integers(1, 4))
    density = float(rng.choice([1.0, 0.6]))
    return random_state(int(n_a), int(n_b), q, rng, statistics=statistics, density=density)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# per-criterion summary

_RESULTS_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    results = item.config.stash[_RESULTS_KEY]
    number = marker.args[0]
    entry = results.setdefault(number, {"passed": True, "ran": False, "tests": []})
    if report.when == "call":
        entry["ran"] = True
        entry["tests"].append(item.name)
    if report.failed or (report.when == "call" and report.skipped):
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        entry = results[number]
        verdict = "PASS" if entry["passed"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  tests={len(entry['tests'])}")
