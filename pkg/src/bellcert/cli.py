"""Command-line front end: ``bellcert protocols | curve | simulate | samples | oracle-check``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import ghz as gz
from . import guessing as gs
from . import planner as pl
from . import simulator as sim
from . import strategy as st
from .errors import InvalidArgument, NumericFailure, Unsupported

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

CATALOG = (
    ("XY", "(1,1,0)/√2"),
    ("XYZ", "(1,1,1)/√3"),
    ("Isotropic", "any direction"),
    ("Equator", "any direction in the xy plane"),
    ("Polygon(3)", "(1,0,0)"),
    ("EquatorPlusZ(opt)", "(π,0,2)/√(4+π²)"),
    ("EquatorPlusZII", None),
    ("PolygonPlusZ(3,opt)", None),
    ("Tetrahedron", "±x, ±y or ±z"),
    ("Octahedron", "(1,1,1)/√3"),
    ("Cube", "±x, ±y or ±z"),
    ("Icosahedron", "a vertex"),
    ("Dodecahedron", "a vertex"),
)


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return "" if x is None else str(x)


def _vec(v) -> str:
    return "(" + ",".join(format(float(c) + 0.0, ".4f") for c in v) + ")"


def _emit(rows: list[dict], fmt: str, out: str | None, title: str | None = None) -> None:
    if fmt == "json":
        text = json.dumps(rows, indent=2, default=float) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        text = buf.getvalue()
    else:
        text = _pretty(rows, title)
    _write(text, out)


def _pretty(rows: list[dict], title: str | None) -> str:
    if not rows:
        return (title + "\n" if title else "") + "(no rows)\n"
    cols = list(rows[0])

    def cell(v):
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".6g")
        return _fmt(v)

    table = [[cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(t[i]) for t in table)) for i, c in enumerate(cols)]
    lines = [title] if title else []
    lines.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    lines.extend("  ".join(t[i].ljust(widths[i]) for i in range(len(cols))) for t in table)
    return "\n".join(lines) + "\n"


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror}") from exc


def parse_grid(text: str, lo: float = 0.0, hi: float = 1.0) -> list[float]:
    """``"a:b:n"`` for n evenly spaced points, or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid {text!r} must look like start:stop:count")
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1 or (n == 1 and a != b):
                raise UsageError("grid count must be at least 2 unless start equals stop")
            grid = list(np.linspace(a, b, n)) if n > 1 else [a]
        else:
            grid = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None
    if not grid:
        raise UsageError("empty grid")
    if any(not lo <= g <= hi for g in grid):
        raise UsageError(f"grid points must lie in [{lo}, {hi}]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("grid must be strictly increasing")
    return [float(g) for g in grid]


def _protocol(text: str) -> st.Strategy:
    if text.endswith(".json") or os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            return st.from_json(fh.read())
    return st.parse_protocol(text)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BELLCERT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BELLCERT_SEED must be an integer, got {env!r}") from None


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


# ---------------------------------------------------------------------------
# Verbs


def cmd_protocols(args) -> int:
    rows = []
    for spec, shown in CATALOG:
        mu = st.parse_protocol(spec)
        rep = gs.g_value(mu, 0.0)
        gstar = rep.gamma
        try:
            tag = gs.g_closed(mu, 0.5).method
        except Unsupported:
            tag = "oracle"
        direction = shown or (_vec(rep.directions[0]) if rep.directions.size else "any direction")
        rows.append({
            "protocol": mu.label(), "gamma_star": gstar,
            "gamma_c": tag, "gamma_hat_c": "(1-C)*gamma_star+C",
            "direction_C0": direction,
            "direction_vector": _vec(rep.directions[0]) if rep.directions.size else "",
        })
    _emit(rows, args.format, args.out, "Named protocols (threshold gamma_star, intelligent direction at C=0)")
    return EXIT_OK


def _closed_or_none(fn):
    try:
        return fn()
    except Unsupported:
        return None


def cmd_curve(args) -> int:
    mu = _protocol(args.protocol)
    grid = parse_grid(args.grid)
    rows = []
    if args.kind == "gamma_c":
        for C in grid:
            rep = _closed_or_none(lambda: gs.g_closed(mu, C))
            rows.append({"C": C, "closed": rep.gamma if rep else None,
                         "method": rep.method if rep else "", "oracle": gs.g_oracle(mu, C).gamma})
    elif args.kind == "gamma_hat_c":
        closed_star = _closed_or_none(lambda: gs.g_closed(mu, 0.0))
        oracle_star = gs.g_oracle(mu, 0.0).gamma
        for C in grid:
            rows.append({"C": C,
                         "closed": gs.gamma_hat(mu, C, closed_star.gamma) if closed_star else None,
                         "oracle": gs.gamma_hat(mu, C, oracle_star)})
    else:
        closed_star = _closed_or_none(lambda: gs.g_closed(mu, 0.0))
        oracle_star = gs.g_oracle(mu, 0.0).gamma
        for F in grid:
            if F <= 0.5:
                closed = 2 * closed_star.gamma * F if closed_star else None
                oracle = 2 * oracle_star * F
            else:
                rep = _closed_or_none(lambda: gs.g_closed(mu, 2 * F - 1))
                closed = rep.gamma if rep else None
                oracle = gs.g_oracle(mu, 2 * F - 1).gamma
            rows.append({"F": F, "closed": closed, "oracle": oracle})
    _emit(rows, args.format, args.out, f"{args.kind} for {mu.label()}")
    return EXIT_OK


def _load_state(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        re_, im = np.array(data["real"], dtype=float), np.array(data.get("imag", 0.0), dtype=float)
        return re_ + 1j * im
    return np.array(data, dtype=complex)


def _adversary(args) -> sim.AdversaryModel:
    kind = args.adversary
    if kind == "mixture":
        if args.C is None:
            raise UsageError("--adversary mixture needs --C")
        return sim.AdversaryModel.mixture(args.C)
    if args.C is not None:
        raise UsageError("--C only applies to --adversary mixture")
    if kind == "fixed":
        if not args.state:
            raise UsageError("--adversary fixed needs --state PATH")
        return sim.AdversaryModel.fixed(_load_state(args.state))
    if args.state:
        raise UsageError("--state only applies to --adversary fixed")
    return sim.AdversaryModel(kind)


def _parse_parties(text: str, n: int) -> tuple:
    try:
        idx = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"--dishonest expects party numbers, got {text!r}") from None
    if any(not 1 <= i <= n for i in idx):
        raise UsageError(f"party numbers must lie in 1..{n}")
    return tuple(i - 1 for i in idx)


def cmd_simulate(args) -> int:
    seed = _seed(args)
    adversary = _adversary(args)
    transcript = [] if args.transcript else None
    if args.target == "bell":
        if args.n is not None or args.dishonest is not None or args.pz is not None:
            raise UsageError("--n, --dishonest and --pz apply to the ghz target only")
        mu = _protocol(args.protocol or "XY")
        record = sim.play_bell(mu, adversary, args.trials, seed, threads=args.threads, transcript=transcript)
        threshold_of = mu
        label = mu.label()
    else:
        if args.protocol is not None:
            raise UsageError("--protocol applies to the bell target; use --pz and --phases for ghz")
        n = args.n or 3
        layout = gz.PartyLayout(n, _parse_parties(args.dishonest or str(n), n))
        law = args.phases if args.phases == "continuous" else int(args.phases)
        strategy = gz.GhzStrategy(args.pz if args.pz is not None else st.optimal_pz_equator(), law)
        record = sim.play_ghz(strategy, layout, adversary, args.trials, seed, threads=args.threads,
                              transcript=transcript)
        threshold_of = gz.effective_strategy(strategy)
        label = f"GHZ n={n} dishonest={[d + 1 for d in layout.dishonest]} pz={strategy.pz:.6g} phases={law}"
    report = sim.verdict(record, threshold_of, args.k_sigma)
    if transcript is not None:
        sim.write_transcript(args.transcript, transcript)
    payload = {"protocol": label, "adversary": adversary.describe(), **record.to_json(), **report.to_json()}
    if args.format == "json":
        payload["strategy"] = threshold_of.to_json()
        _write(json.dumps(payload, indent=2) + "\n", args.out)
    elif args.format == "csv":
        payload["adversary"] = json.dumps(payload["adversary"])
        _emit([payload], "csv", args.out)
    else:
        lines = [f"{k:24s} {json.dumps(v) if isinstance(v, dict) else _fmt(v)}" for k, v in payload.items()]
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_samples(args) -> int:
    if args.scenario == "fig4":
        grid = parse_grid(args.eps_grid, 0.0, 1.0)
        if any(e <= 0.0 or e >= 1.0 for e in grid):
            raise UsageError("epsilon grid points must lie strictly between 0 and 1")
        rows = pl.fig4_table(grid, args.delta)
        if args.format == "json":
            _emit([vars(r) for r in rows], "json", args.out)
        else:
            _write(pl.fig4_csv(rows), args.out)
        return EXIT_OK
    if args.eps is None:
        raise UsageError("--eps is required")
    if args.scenario == "sdi":
        if (args.gamma_star is None) == (args.protocol is None):
            raise UsageError("sdi needs exactly one of --gamma-star or --protocol")
        g = args.gamma_star if args.gamma_star is not None else gs.gamma_star(_protocol(args.protocol))
        plan = pl.samples_sdi(g, args.eps, args.delta)
    elif args.scenario == "standard":
        plan = pl.samples_standard(args.nu, args.eps, args.delta)
    elif args.scenario == "di-mermin":
        plan = pl.samples_di_mermin(args.eps, args.delta)
    else:
        if args.c is None:
            raise UsageError("di-quadratic needs --c")
        plan = pl.samples_di_quadratic(args.c, args.eps, args.delta)
    row = {"scenario": plan.formula_tag, "epsilon": plan.epsilon, "delta": plan.delta, "N": plan.N,
           "asymptotic": plan.asymptotic,
           **{k: v for k, v in plan.inputs.items() if k not in ("asymptotic",)}}
    if plan.note:
        row["note"] = plan.note
    _emit([row], args.format, args.out)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    mu = _protocol(args.protocol)
    grid = parse_grid(args.grid)
    rows, worst = [], 0.0
    for C in grid:
        closed = gs.g_closed(mu, C)
        oracle = gs.g_oracle(mu, C)
        diff = abs(closed.value - oracle.value)
        worst = max(worst, diff)
        rows.append({"C": C, "closed": closed.value, "oracle": oracle.value, "abs_diff": diff,
                     "tag": "conjecture" if closed.method == "conjectured" else "proven",
                     "status": "pass" if diff <= args.tol else "FAIL"})
    _emit(rows, args.format, args.out, f"closed form vs oracle for {mu.label()} (tol {args.tol:g})")
    if args.format == "pretty" and args.out is None:
        sys.stdout.write(f"max deviation {worst:.3e}\n")
    return EXIT_OK if worst <= args.tol else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")
    common.add_argument("--format", choices=("csv", "json", "pretty"), default="pretty", help="output format")
    common.add_argument("--seed", type=_u64, help="random seed (falls back to $BELLCERT_SEED, then 0)")
    common.add_argument("--trials", type=_positive_int, default=100_000, help="Monte Carlo trials")
    common.add_argument("--threads", type=_positive_int, default=1, help="maximum worker threads")

    p = argparse.ArgumentParser(prog="bellcert", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("protocols", parents=[common], help="list named protocols with thresholds",
                   description="List the named protocols with their entanglement thresholds.")

    c = sub.add_parser("curve", parents=[common], help="guessing-probability curves",
                       description="Tabulate a guessing-probability curve with closed-form and oracle columns.")
    c.add_argument("kind", choices=("gamma_c", "gamma_hat_c", "gamma_f"),
                   help="gamma_c: pure states vs C; gamma_hat_c: mixed states vs C; gamma_f: vs reduced fidelity F")
    c.add_argument("--protocol", required=True, help='protocol name such as "XY", "Polygon(5)", or a JSON file')
    c.add_argument("--grid", default="0:1:21", help="start:stop:count or comma list in [0, 1]")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo verification game",
                       description="Play the verification game and report the pass rate and verdict.")
    s.add_argument("target", choices=("bell", "ghz"), help="two-qubit Bell game or n-party GHZ game")
    s.add_argument("--protocol", help="bell only: protocol name or JSON file (default XY)")
    s.add_argument("--adversary", choices=sim.ADVERSARIES, default="product", help="adversary model")
    s.add_argument("--C", type=float, help="concurrence for the mixture adversary")
    s.add_argument("--state", help="density matrix (.npy, or JSON nested list / {real, imag}) for fixed")
    s.add_argument("--n", type=int, help="ghz only: number of parties (default 3)")
    s.add_argument("--dishonest", help="ghz only: 1-based dishonest party numbers, e.g. '2,3' (default n)")
    s.add_argument("--pz", type=float, help="ghz only: Z-test probability (default 4/(4+π²))")
    s.add_argument("--phases", default="continuous", help="ghz only: 'continuous' or an integer M >= 3")
    s.add_argument("--k-sigma", type=float, default=4.0, help="statistical margin for the verdict")
    s.add_argument("--transcript", metavar="PATH", help="write one JSON line per trial")

    m = sub.add_parser("samples", parents=[common], help="sample-size planning",
                       description="Number of tests to reach infidelity eps at significance delta.")
    m.add_argument("scenario", choices=("sdi", "standard", "di-mermin", "di-quadratic", "fig4"))
    m.add_argument("--eps", type=float, help="target infidelity")
    m.add_argument("--delta", type=float, default=0.01, help="significance level")
    m.add_argument("--gamma-star", type=float, help="sdi: threshold guessing probability")
    m.add_argument("--protocol", help="sdi: take the threshold from this protocol")
    m.add_argument("--nu", type=float, default=pl.NU_OPTIMAL, help="standard: spectral gap")
    m.add_argument("--c", type=float, help="di-quadratic: robustness constant")
    m.add_argument("--eps-grid", default="0.001,0.002,0.005,0.01,0.02,0.05,0.1",
                   help="fig4: epsilon grid (start:stop:count or comma list)")

    o = sub.add_parser("oracle-check", parents=[common], help="closed forms against the numeric oracle",
                       description="Compare closed-form g(C) with the numeric oracle; exit 1 if any point exceeds tol.")
    o.add_argument("--protocol", required=True, help="protocol with a closed form")
    o.add_argument("--grid", default="0:1:11", help="C grid")
    o.add_argument("--tol", type=float, default=1e-5, help="allowed absolute deviation")
    return p


COMMANDS = {
    "protocols": cmd_protocols, "curve": cmd_curve, "simulate": cmd_simulate,
    "samples": cmd_samples, "oracle-check": cmd_oracle_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidArgument, Unsupported) as exc:
        print(f"bellcert {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"bellcert {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"bellcert {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
