"""Command-line driver: every computation is a subcommand writing CSV/JSON
artifacts into a run directory (config echo + manifest + data files).

Exit codes: 0 success, 1 error, 2 validation-threshold failure, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bose_hubbard import BoseHubbardParams, effective_couplings, validate_perturbation
from .correlations import two_point_connected
from .free_fermion import (
    CorrelationSeries,
    QuadratureError,
    correlation_length,
    czz_analytic,
)
from .localizable import (
    AnnealConfig,
    branch_average,
    cluster_scheme_plan,
    entanglement_length,
    optimize_plan,
    lower_bound_plan,
    scheme_seed_plans,
)
from .spin_core import (
    cluster_hamiltonian,
    dense_spectrum,
    ground_state,
    lowest_eigenvalues,
    spectral_gap,
    triangle_chain_hamiltonian,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_USAGE = 64

_ANALYTIC_L_RANGE = (4, 40)


class _Parser(argparse.ArgumentParser):
    """argparse with the conventional 64 exit code for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        if np.isinf(x):
            return "inf"
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_dir(args, name: str) -> Path:
    out = Path(args.out) if args.out else Path(f"{name}_out")
    out.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    _write_json(out / "config.json", resolved)
    return out


def _manifest(out: Path, timings: dict, seeds: dict) -> None:
    _write_json(
        out / "manifest.json",
        {
            "package": "trispin",
            "version": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "seeds": seeds,
            "timings_s": {k: round(v, 3) for k, v in timings.items()},
        },
    )


def _parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(tok) for tok in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"bad grid {text!r}; expected start:stop:step") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid {text!r}")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def _params_from_args(args) -> BoseHubbardParams:
    ja = args.ja if args.ja is not None else args.j
    jb = args.jb if args.jb is not None else args.j
    uaa = args.uaa if args.uaa is not None else args.u
    ubb = args.ubb if args.ubb is not None else args.u
    uab = args.uab if args.uab is not None else args.u
    if None in (ja, jb, uaa, ubb, uab):
        raise ValueError("tunneling/collision couplings missing (use --j/--u or per-species flags)")
    return BoseHubbardParams(ja, jb, uaa, ubb, uab)


def _add_bh_flags(p) -> None:
    p.add_argument("--j", type=float, default=None, help="tunneling for both species")
    p.add_argument("--ja", type=float, default=None)
    p.add_argument("--jb", type=float, default=None)
    p.add_argument("--u", type=float, default=None, help="all three collisional couplings")
    p.add_argument("--uaa", type=float, default=None)
    p.add_argument("--ubb", type=float, default=None)
    p.add_argument("--uab", type=float, default=None)


# --- subcommands -----------------------------------------------------------------

def _cmd_couplings(args) -> int:
    t0 = time.time()
    params = _params_from_args(args)
    coup = effective_couplings(params)
    out = _run_dir(args, "couplings")
    payload = json.loads(coup.to_json())
    payload["perturbative_ratio"] = params.perturbative_ratio
    payload["perturbative_ok"] = params.perturbative_ok
    _write_json(out / "couplings.json", payload)
    _manifest(out, {"total": time.time() - t0}, {})
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_validate(args) -> int:
    t0 = time.time()
    params = _params_from_args(args)
    report = validate_perturbation(params)
    out = _run_dir(args, "validate")
    (out / "validation.json").write_text(report.to_json() + "\n")
    _manifest(out, {"total": time.time() - t0}, {})
    print(f"max relative deviation: {report.max_rel_dev:.6g} (threshold {args.max_rel_dev})")
    return EXIT_OK if report.max_rel_dev <= args.max_rel_dev else EXIT_VALIDATION


def _cmd_spectrum(args) -> int:
    t0 = time.time()
    if args.model == "cluster":
        spec = cluster_hamiltonian(args.n, args.b)
    else:
        from .bose_hubbard import EffectiveCouplings

        coup = EffectiveCouplings(args.lambda1, args.lambda2, args.lambda3, args.lambda4, 0.0)
        spec = triangle_chain_hamiltonian(coup, (args.bx, args.by, args.b), args.n)
    if args.n <= 12:
        energies = dense_spectrum(spec)
    else:
        energies = lowest_eigenvalues(spec, k=min(16, (1 << args.n) - 2), seed=args.seed)
    e0 = float(energies[0])
    gap = spectral_gap(spec, seed=args.seed)
    out = _run_dir(args, "spectrum")
    _write_json(
        out / "spectrum.json",
        {
            "model": args.model,
            "n": args.n,
            "b": args.b,
            "ground_energy": e0,
            "gap": gap,
            "dense": bool(args.n <= 12),
            "energies": [float(e) for e in energies[: args.max_levels]],
        },
    )
    _manifest(out, {"total": time.time() - t0}, {"solver": args.seed})
    print(f"ground energy {e0:.12g}, min gap {gap:.12g}")
    return EXIT_OK


def _cmd_corr(args) -> int:
    t0 = time.time()
    out = _run_dir(args, "corr")
    rows = []
    if args.channel == "analytic":
        if (args.alpha, args.beta) != ("z", "z"):
            raise ValueError("the analytic channel provides zz correlators only")
        for L in range(args.l_min, args.l_max + 1):
            rows.append([args.b, L, "z", "z", czz_analytic(args.b, L)])
    else:
        _, gs = ground_state(cluster_hamiltonian(args.n, args.b), seed=args.seed)
        for L in range(args.l_min, args.l_max + 1):
            val = two_point_connected(gs, args.alpha, args.beta, 0, L - 1)
            rows.append([args.b, L, args.alpha, args.beta, val])
    _write_csv(out / "corr.csv", ["B", "L", "alpha", "beta", "value"], rows)
    _manifest(out, {"total": time.time() - t0}, {"solver": args.seed})
    print(f"wrote {len(rows)} correlator rows to {out / 'corr.csv'}")
    return EXIT_OK


def _cmd_locent(args) -> int:
    t0 = time.time()
    p, q = (int(tok) for tok in args.pair.split(","))
    _, gs = ground_state(cluster_hamiltonian(args.n, args.b), seed=args.seed)
    if args.scheme == "cluster":
        result = branch_average(gs, cluster_scheme_plan(args.n, (p, q)))
    elif args.scheme == "lower-bound":
        if p != 0:
            raise ValueError("the lower-bound scheme is anchored at spin 1 (site 0); use --pair 0,L-1")
        result = branch_average(gs, lower_bound_plan(args.n, q + 1))
    else:
        cfg = AnnealConfig(
            n_temps=args.anneal_temps,
            proposals_per_temp=args.anneal_proposals,
            restarts=args.anneal_restarts,
            seed=args.seed,
        )
        result = optimize_plan(gs, (p, q), cfg)
    out = _run_dir(args, "locent")
    (out / "locent.json").write_text(result.to_json(b_field=args.b) + "\n")
    _manifest(out, {"total": time.time() - t0}, {"solver": args.seed, "anneal": args.seed})
    print(f"E_loc = {result.value:.12g} over {result.branch_count} branches")
    return EXIT_OK


def _correlation_row(b: float) -> tuple[list, list[list]]:
    lo, hi = _ANALYTIC_L_RANGE
    lengths, values = [], []
    for L in range(lo, hi + 1):
        values.append(czz_analytic(b, L))
        lengths.append(L)
    series = CorrelationSeries(lengths, values, kind="zz_analytic")
    detail = [[b, L, v] for L, v in zip(lengths, values)]
    try:
        est = correlation_length(series)
        return [b, est.xi, est.model, int(est.diverges)], detail
    except ValueError as exc:
        msg = str(exc)
        if "numerically zero" in msg:
            return [b, 0.0, "zero", 0], detail
        # too few points above the noise floor: two-point fallback slope
        pts = [(L, abs(v)) for L, v in zip(lengths, values) if abs(v) > 1e-13]
        if len(pts) >= 2:
            (l1, v1), (l2, v2) = pts[-2], pts[-1]
            slope = (np.log(v2) - np.log(v1)) / (l2 - l1)
            xi = -1.0 / slope if slope < 0 else float("inf")
            return [b, xi, "short_range", int(np.isinf(xi))], detail
        return [b, 0.0, "zero", 0], detail


def _entanglement_row(
    b: float, n: int, seed: int, anneal: AnnealConfig | None
) -> tuple[list, list[list]]:
    _, gs = ground_state(cluster_hamiltonian(n, b), seed=seed)
    seps = list(range(2, n // 2 + 1))
    vals = []
    for s in seps:
        pair = (0, s)
        if anneal is not None:
            vals.append(optimize_plan(gs, pair, anneal).value)
        else:
            vals.append(max(branch_average(gs, pl).value for pl in scheme_seed_plans(n, pair)))
    series = CorrelationSeries(seps, vals, kind="generic")
    try:
        est = entanglement_length(series)
        row = [b, est.xi, est.model, int(est.diverges)]
    except ValueError as exc:
        if "numerically zero" not in str(exc):
            raise
        row = [b, 0.0, "zero", 0]
    detail = [[b, s, v, row[3]] for s, v in zip(seps, vals)]
    return row, detail


def _cmd_figure2(args) -> int:
    t0 = time.time()
    grid = _parse_grid(args.b_grid)
    n = 17 if args.large else args.n
    anneal = None
    if not args.no_anneal:
        anneal = AnnealConfig(
            n_temps=args.anneal_temps,
            proposals_per_temp=args.anneal_proposals,
            restarts=args.anneal_restarts,
            seed=args.seed,
        )
    out = _run_dir(args, "figure2")
    failures: list[str] = []

    def corr_point(b):
        try:
            return _correlation_row(b)
        except (QuadratureError, ValueError) as exc:
            failures.append(f"correlation B={b}: {exc}")
            return None, []

    def ent_point(b):
        try:
            return _entanglement_row(b, n, args.seed, anneal)
        except Exception as exc:  # partial failures logged, run continues
            failures.append(f"entanglement B={b}: {exc}")
            return None, []

    t_corr = time.time()
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            corr_results = list(pool.map(corr_point, grid))
    else:
        corr_results = [corr_point(b) for b in grid]
    t_corr = time.time() - t_corr

    t_ent = time.time()
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            ent_results = list(pool.map(ent_point, grid))
    else:
        ent_results = [ent_point(b) for b in grid]
    t_ent = time.time() - t_ent

    corr_rows = [row for row, _ in corr_results if row is not None]
    corr_detail = [r for _, d in corr_results for r in d]
    ent_rows = [row for row, _ in ent_results if row is not None]
    ent_detail = [r for _, d in ent_results for r in d]

    _write_csv(out / "correlation_length.csv", ["B", "xi", "model", "diverges"], corr_rows)
    _write_csv(out / "entanglement_length.csv", ["B", "xi_E", "model", "diverges"], ent_rows)
    _write_csv(out / "czz_series.csv", ["B", "L", "value"], corr_detail)
    _write_csv(out / "e_loc_series.csv", ["B", "L", "E_loc", "xi_flag"], ent_detail)
    if failures:
        (out / "failures.log").write_text("\n".join(failures) + "\n")
        for msg in failures:
            print(f"warning: {msg}", file=sys.stderr)
    _manifest(
        out,
        {"correlation": t_corr, "entanglement": t_ent, "total": time.time() - t0},
        {"solver": args.seed, "anneal": args.seed},
    )
    print(
        f"figure2 grid of {len(grid)} fields done in {time.time() - t0:.1f}s "
        f"({len(failures)} partial failures); outputs in {out}"
    )
    return EXIT_OK


# --- parser ----------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="trispin", description=__doc__)
    parser.add_argument("--version", action="version", version=f"trispin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("couplings", parents=[], help="effective couplings from Bose-Hubbard parameters")
    _add_bh_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_couplings)

    p = sub.add_parser("validate", help="third-order truncation check against the full triangle")
    _add_bh_flags(p)
    p.add_argument("--max-rel-dev", type=float, default=0.08)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("spectrum", help="exact spectrum / gap of a chain model")
    p.add_argument("--model", choices=("cluster", "triangle"), default="cluster")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--bx", type=float, default=0.0)
    p.add_argument("--by", type=float, default=0.0)
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=0.0)
    p.add_argument("--lambda3", type=float, default=0.0)
    p.add_argument("--lambda4", type=float, default=0.0)
    p.add_argument("--max-levels", type=int, default=64)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("corr", help="connected two-point correlator sweep")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--alpha", default="z")
    p.add_argument("--beta", default="z")
    p.add_argument("--l-min", type=int, default=3)
    p.add_argument("--l-max", type=int, default=8)
    p.add_argument("--channel", choices=("ed", "analytic"), default="ed")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_corr)

    p = sub.add_parser("locent", help="localizable entanglement of one pair")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--pair", default="0,4", help="comma-separated 0-based sites")
    p.add_argument("--scheme", choices=("cluster", "lower-bound", "anneal"), default="cluster")
    p.add_argument("--anneal-temps", type=int, default=200)
    p.add_argument("--anneal-proposals", type=int, default=50)
    p.add_argument("--anneal-restarts", type=int, default=2)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_locent)

    p = sub.add_parser("figure2", help="correlation vs entanglement length over a field grid")
    p.add_argument("--b-grid", default="0:2:0.1", help="start:stop:step")
    p.add_argument("--n", type=int, default=13,
                   help="ring for the entanglement channel (odd recommended)")
    p.add_argument("--large", action="store_true", help="use the large ring (n=17)")
    p.add_argument("--no-anneal", action="store_true",
                   help="scheme ensemble only (skip basis annealing)")
    p.add_argument("--anneal-temps", type=int, default=50)
    p.add_argument("--anneal-proposals", type=int, default=16)
    p.add_argument("--anneal-restarts", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_figure2)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entry() -> None:  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
