"""Command-line front end.

Subcommands read and write JSON: ``generate`` emits a state file, the analysis
commands (``schmidt``, ``bell``, ``feasibility``, ``pipeline``) read one and
emit a report.  Exit codes: 0 success, 2 parse or validation failure, 3 a
separable input where a Bell functional is required, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import states
from .bell import (
    SettingAngles,
    ch_probabilities,
    closed_form_settings,
    compare_settings,
    effective_pair_from_schmidt,
    numeric_optimal_settings,
)
from .errors import EmptySectorError, SeparableStateError, ZeroStateError
from .feasibility import (
    DEFAULT_WEIGHT_TOL,
    corollary1_holds,
    sector_pair,
    sector_table,
    theorem1_holds,
    violation_from_projection,
)
from .fock import FieldState, ModeId
from .schmidt import DEFAULT_RANK_TOL, schmidt_decompose
from .serialization import StateFormatError, dumps, load_state, state_to_dict

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SEPARABLE = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    """Bad flag values that argparse cannot catch on its own."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: Path | None
    output_path: Path | None
    rank_tol: float = DEFAULT_RANK_TOL
    weight_tol: float = DEFAULT_WEIGHT_TOL
    settings_source: str = "numeric"
    explicit_angles: SettingAngles | None = None
    sector: tuple[int, int] | None = None


def parse_settings(text: str) -> tuple[str, SettingAngles | None]:
    if text == "numeric":
        return text, None
    if text in ("paper", "closed-form"):
        return "closed_form", None
    if text.startswith("explicit:"):
        parts = text[len("explicit:"):].split(",")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise UsageError(f"explicit angles must be numbers: {text!r}") from None
        if len(values) != 4 or not all(math.isfinite(v) for v in values):
            raise UsageError("explicit settings need four finite angles a,a',b,b' in radians")
        return "explicit", SettingAngles(*values)
    raise UsageError(f"unknown settings source {text!r}")


def parse_sector(text: str) -> tuple[int, int]:
    try:
        n, m = (int(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"sector must look like n,m: {text!r}") from None
    if n < 0 or m < 0:
        raise UsageError("sector numbers must be non-negative")
    return n, m


def _angles_for(source: str, explicit: SettingAngles | None, pair) -> SettingAngles:
    if source == "explicit":
        return explicit
    if source == "closed_form":
        return closed_form_settings(*pair.normalized_lambdas)
    return numeric_optimal_settings(pair)[0]


# reports


def schmidt_report(s: FieldState, cfg: RunConfig) -> dict:
    d = schmidt_decompose(s, cfg.rank_tol)
    return {"schmidt": d.to_dict(), "entangled": d.rank >= 2}


def bell_report(s: FieldState, cfg: RunConfig) -> dict:
    d = schmidt_decompose(s, cfg.rank_tol)
    pair = effective_pair_from_schmidt(d)
    comparison = compare_settings(s, pair)
    if cfg.settings_source == "explicit":
        chosen = ch_probabilities(s, pair, cfg.explicit_angles)
    elif cfg.settings_source == "closed_form":
        chosen = comparison.closed_form
    else:
        chosen = comparison.numeric
    return {
        "pair": {"lambda1": pair.lambda1, "lambda2": pair.lambda2, "weight": pair.weight},
        "settings_source": cfg.settings_source,
        "ch_report": chosen.to_dict(),
        "settings_comparison": comparison.to_dict(),
    }


def feasibility_report(s: FieldState, cfg: RunConfig) -> dict:
    table = sector_table(s, cfg.rank_tol, cfg.weight_tol)
    if cfg.sector is not None:
        table.record(*cfg.sector)  # raises for an empty sector
        targets = [cfg.sector]
    else:
        targets = [(r.n, r.m) for r in table.populated() if r.rank >= 2]
    conditions = []
    for sector in targets:
        try:
            _, _, pair = sector_pair(s, sector, cfg.rank_tol)
        except SeparableStateError:
            conditions.append({"sector": list(sector), "applicable": False, "reason": "rank 1"})
            continue
        angles = _angles_for(cfg.settings_source, cfg.explicit_angles, pair)
        rep = violation_from_projection(s, sector, angles, cfg.rank_tol, cfg.weight_tol)
        conditions.append({"applicable": True, **rep.to_dict()})
    return {
        "sector_table": table.to_dict(),
        "pruned_weight": s.pruned_weight,
        "theorem1": theorem1_holds(table),
        "corollary1": corollary1_holds(table),
        "settings_source": cfg.settings_source,
        "conditions": conditions,
    }


def pipeline_report(s: FieldState, cfg: RunConfig) -> dict:
    schmidt = schmidt_report(s, cfg)
    bell = bell_report(s, cfg) if schmidt["entangled"] else None
    feas = feasibility_report(s, cfg)
    verdict = {
        "entangled": schmidt["entangled"],
        "ch_value": bell["ch_report"]["selected_ch"] if bell else None,
        "violated": bell["ch_report"]["violation"] if bell else False,
        "theorem1": feas["theorem1"],
        "corollary1": feas["corollary1"],
        "sector_ns_conditions": [
            {"sector": c["sector"], "ns_condition_holds": c.get("ns_condition_holds", False)}
            for c in feas["conditions"]
        ],
    }
    return {"verdict": verdict, "schmidt": schmidt, "bell": bell, "feasibility": feas}


# generators


def _floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers: {text!r}") from None


def _read_coeffs(path: Path) -> list[complex]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read coefficients: {exc}") from None
    if not isinstance(data, list) or not data:
        raise UsageError("coefficient file must hold a nonempty JSON list")
    out = []
    for item in data:
        if isinstance(item, (int, float)):
            out.append(complex(item))
        elif isinstance(item, list) and len(item) == 2:
            out.append(complex(float(item[0]), float(item[1])))
        else:
            raise UsageError(f"bad coefficient entry {item!r}")
    return out


def generate_state(args: argparse.Namespace) -> FieldState:
    kind = args.kind
    if kind == "tmsv":
        if (args.lambdas is None) == (args.gamma is None):
            raise UsageError("tmsv needs exactly one of --gamma or --lambdas")
        if args.lambdas is not None:
            s = states.tmsv(lambdas=_floats(args.lambdas))
        else:
            s = states.tmsv(gamma=args.gamma, cutoff=args.cutoff)
    elif kind == "bsv":
        if args.gamma is None:
            raise UsageError("bsv needs --gamma")
        s = states.bsv(args.gamma, args.cutoff)
    elif kind == "bghz":
        if args.coeffs_file is None:
            raise UsageError("bghz needs --coeffs-file")
        s = states.bghz(_read_coeffs(args.coeffs_file), cutoff=args.bghz_cutoff)
    else:
        s = states.beamsplit_single_photon()
    if args.z is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            s = states.attach_coherent_ancillas(s, complex(args.z), args.cutoff)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    if args.subtract:
        try:
            modes = [ModeId.parse(label.strip()) for label in args.subtract.split(",")]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        s = states.photon_subtract(s, modes)
    return s


# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockbell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write an example state file")
    gen.add_argument("kind", choices=("tmsv", "bsv", "bghz", "beamsplit"))
    gen.add_argument("--gamma", type=float)
    gen.add_argument("--lambdas", help="comma-separated Schmidt spectrum for tmsv")
    gen.add_argument("--cutoff", type=int, default=10, help="quanta cutoff (also used for coherent ancillas)")
    gen.add_argument("--bghz-cutoff", type=int, default=None, help="total-order cutoff for bghz")
    gen.add_argument("--coeffs-file", type=Path, help="JSON list of bghz coefficients (numbers or [re, im])")
    gen.add_argument("--z", type=float, help="attach coherent ancillas with this real amplitude")
    gen.add_argument("--subtract", help="comma-separated mode labels for photon subtraction, e.g. a2,a4")
    gen.add_argument("--output", type=Path)

    for name, help_text in (
        ("schmidt", "Schmidt decomposition report"),
        ("bell", "CH/CHSH evaluation with the state's top Schmidt pair"),
        ("feasibility", "sector table and projection-based violation conditions"),
        ("pipeline", "schmidt, bell and feasibility with a combined verdict"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", type=Path, required=True)
        p.add_argument("--output", type=Path)
        p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
        p.add_argument("--weight-tol", type=float, default=DEFAULT_WEIGHT_TOL)
        p.add_argument("--settings", default="numeric", help="paper (closed-form angles) | numeric | explicit:a,a',b,b'")
        p.add_argument("--sector", help="restrict feasibility analysis to sector n,m")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    source, angles = parse_settings(args.settings)
    for name in ("rank_tol", "weight_tol"):
        value = getattr(args, name)
        if not (math.isfinite(value) and value >= 0):
            raise UsageError(f"--{name.replace('_', '-')} must be a non-negative number")
    return RunConfig(
        command=args.command,
        input_path=args.input,
        output_path=args.output,
        rank_tol=args.rank_tol,
        weight_tol=args.weight_tol,
        settings_source=source,
        explicit_angles=angles,
        sector=parse_sector(args.sector) if args.sector else None,
    )


_REPORTS = {
    "schmidt": schmidt_report,
    "bell": bell_report,
    "feasibility": feasibility_report,
    "pipeline": pipeline_report,
}


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def run(args: argparse.Namespace) -> int:
    if args.command == "generate":
        _emit(dumps(state_to_dict(generate_state(args))), args.output)
        return EXIT_OK
    cfg = _config(args)
    s = load_state(cfg.input_path)
    _emit(dumps(_REPORTS[cfg.command](s, cfg)), cfg.output_path)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except SeparableStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEPARABLE
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, StateFormatError, EmptySectorError, ZeroStateError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
