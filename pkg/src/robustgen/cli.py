"""Command-line entry point: robustgen <command> [flags].

Every command writes its table to --out-dir as CSV (or JSON with --format
json).  The exit status is 0 when every requested check passes, 1 when a
check fails (a JSON summary goes to stderr) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import datagen, experiments
from .bounds import (
    BoundReport,
    DecaySpec,
    LossProfile,
    proposition1_bound,
    proposition3_ts_bound,
    reports_to_csv,
    theorem1_bound,
    theorem2_bound,
    theorem5_bound,
    theorem6_bound,
    uniform_stability_bound,
)
from .concentration import DomainError, MultinomialSpec
from .partition import CellId, Partition, PartitionConfig, box_grid_bins
from .robustness import lasso_certificate, lipschitz_certificate, pca_certificate
from .simulate import (
    STATISTICS,
    TrialPlan,
    default_k_max,
    empirical_quantile,
    probability_profile,
    results_to_csv,
    run_coverage,
    simulate_occupancy_decay,
    simulated_constant,
)
from .svg import cover_sweep_svg

SEED_ENV = "ROBUSTGEN_SEED"
ALL_BOUNDS = ("prop1", "thm1", "thm2", "thm5", "thm6", "stability")


class UsageError(Exception):
    pass


# --- helpers ----------------------------------------------------------------

def _rows_to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _csv_to_json(text: str) -> str:
    rows = list(csv.DictReader(io.StringIO(text)))
    return json.dumps(rows, indent=1) + "\n"


def _emit(args, stem: str, csv_text: str) -> Path:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        path = out_dir / f"{stem}.json"
        path.write_text(_csv_to_json(csv_text))
    else:
        path = out_dir / f"{stem}.csv"
        path.write_text(csv_text)
    if not args.quiet:
        sys.stdout.write(csv_text)
    return path


def _note(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _parse_params(text: Optional[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    if not text:
        return out
    for part in text.split(","):
        key, sep, val = part.partition("=")
        if not sep:
            raise UsageError(f"bad parameter {part!r}; expected key=value")
        out[key.strip()] = float(val)
    return out


def _parse_ints(text: str) -> List[int]:
    vals: List[int] = []
    for part in str(text).split(","):
        if "-" in part:
            a, b = part.split("-")
            vals.extend(range(int(a), int(b) + 1))
        elif part.strip():
            vals.append(int(part))
    if not vals:
        raise UsageError("empty integer list")
    return vals


def _sub_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1)[0])


# --- cover-sweep ------------------------------------------------------------

COVER_COLUMNS = ("d", "ln_K", "mean_t_size", "std_t_size")


def cmd_cover_sweep(args) -> List[str]:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.preset:
        if args.preset not in datagen.FIGURE_FAMILIES:
            raise UsageError(f"unknown preset {args.preset!r}")
        family, params = datagen.FIGURE_FAMILIES[args.preset]
    else:
        family, params = args.family, _parse_params(args.params)
    d_values = _parse_ints(args.d_values)

    def one_d(d):
        if args.scheme == "clustering":
            raise UsageError("cover-sweep supports epsilon_cover and random_projection")
        part = Partition(PartitionConfig(args.scheme, d, width=args.width,
                                         proj_dim=args.proj_dim, seed=args.seed))
        sizes = []
        for trial in range(args.trials):
            cfg = datagen.GeneratorConfig(family, params, dim=d, n=args.n,
                                          seed=_sub_seed(args.seed, d, trial))
            sizes.append(part.occupancy(datagen.generate(cfg)).t_size)
        return [d, part.ln_K, float(np.mean(sizes)), float(np.std(sizes))]

    if args.workers > 1:
        with ThreadPoolExecutor(args.workers) as ex:
            rows = list(ex.map(one_d, d_values))
    else:
        rows = [one_d(d) for d in d_values]
    text = _rows_to_csv(COVER_COLUMNS, rows)
    stem = args.name or f"cover_sweep_{args.preset or family}_{args.scheme}"
    _emit(args, stem, text)
    out_dir = Path(args.out_dir)
    (out_dir / f"{stem}.svg").write_text(cover_sweep_svg(text, title=stem))
    failures = []
    for d, ln_K, mean_t, _ in rows:
        if mean_t > args.n:
            failures.append(f"d={d}: mean |T_S| {mean_t} exceeds n")
        if args.scheme == "epsilon_cover" and abs(ln_K - d * math.log(round(1 / args.width))) > 1e-9:
            failures.append(f"d={d}: ln K {ln_K} differs from d ln(1/width)")
    return failures


# --- mc-verify ----------------------------------------------------------------

def _weights_arg(text: str, K: int):
    if text in ("adversarial", "ones"):
        return text
    if text == "first":
        a = np.zeros(K)
        a[0] = 1.0
        return tuple(a)
    vals = [float(v) for v in text.split(",")]
    if len(vals) != K:
        raise UsageError(f"--weights needs {K} values")
    return tuple(vals)


def cmd_mc_verify(args) -> List[str]:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.stat not in STATISTICS and args.stat not in ("prop2",):
        raise UsageError(f"unknown statistic {args.stat!r}")
    p = probability_profile(args.p, args.k)
    spec = MultinomialSpec.from_probs(args.n, p)
    tail = args.stat in ("lemma3", "lemma4")
    if tail and args.M is None:
        raise UsageError(f"{args.stat} needs --M")
    weights = args.weights or ("first" if tail else "adversarial")
    plan = TrialPlan(args.trials, args.seed, spec, args.stat,
                     args.M if tail else args.delta, _weights_arg(weights, args.k))
    res = run_coverage(plan, workers=args.workers)
    _emit(args, args.name or f"mc_verify_{plan.statistic}", results_to_csv([res]))
    if res.passed:
        return []
    return [f"{plan.statistic}: violation rate {res.empirical_rate} with Wilson lower "
            f"{res.wilson_lower} exceeds {res.bound_delta}"]


# --- bound-eval ---------------------------------------------------------------

def _oracle_alphas(args, inst, zeta: float):
    """Per-cell conditional mean loss from a large fresh sample of the same distribution."""
    rng = np.random.default_rng(_sub_seed(args.seed, 7))
    if args.learner == "rls":
        cfg = _rls_config(args)
        cfg.n = args.oracle_n
        x, y = experiments.rls_sample(cfg, rng)
        losses = (inst.w * x - y) ** 2
        lower, upper = experiments.rls_box(cfg)
        Z = np.column_stack([x, y])
        side = cfg.nu
    else:
        g = _lasso_geometry(args)
        g.n = args.oracle_n
        X, y = experiments.lasso_sample(g, rng)
        losses = np.abs(y - X @ inst.weights)
        Z = np.column_stack([X, y])
        lower, upper = [-1.0] * Z.shape[1], [1.0] * Z.shape[1]
        side = g.nu
    cells = [CellId("box", tuple(int(v) for v in b)) for b in box_grid_bins(Z, lower, upper, side)]
    means = experiments.cell_conditional_means(losses, cells)
    occupied = set(inst.occupancy.counts)
    alphas = {c: min(zeta, means.get(c, zeta)) for c in occupied}
    outside = [v for c, v in means.items() if c not in occupied]
    return alphas, (min(zeta, max(outside)) if outside else 0.0)


def _rls_config(args) -> experiments.RLSConfig:
    return experiments.RLSConfig(n=args.n, sigma=args.sigma, B=args.B, lam=args.lam,
                                 nu=args.nu, delta=args.delta)


def _lasso_geometry(args) -> experiments.LassoGeometry:
    return experiments.LassoGeometry(d=args.d, p=args.p_active, n=args.n, nu=args.nu,
                                     sigma=args.sigma, c=args.c, delta=args.delta)


def cmd_bound_eval(args) -> List[str]:
    wanted = [b.strip() for b in args.bounds.split(",")] if args.bounds else None
    for b in wanted or []:
        if b not in ALL_BOUNDS:
            raise UsageError(f"unknown bound {b!r}")
    if wanted and args.alpha_source == "none" and {"thm2", "thm6"} & set(wanted):
        raise UsageError("thm2/thm6 need per-cell losses: pass --alpha-source zeta or oracle")
    if args.learner == "rls":
        if args.data:
            raise UsageError("--data is only supported with --learner lasso")
        cfg = _rls_config(args)
        inst = experiments.rls_instance(cfg, args.seed)
        n = cfg.n
        # ridge: lam w^2 <= mean(y^2) <= y_max^2, so every candidate loss is below this
        B = inst.y_bound**2 * (1.0 + 1.0 / math.sqrt(cfg.lam)) ** 2
        loss = LossProfile(inst.losses, zeta=inst.zeta, B=max(B, inst.zeta))
        eps, occupancy, ln_K = inst.eps_S, inst.occupancy, inst.ln_K
    else:
        if args.data:
            X, labels = datagen.load_csv(args.data, label_column=True)
            if labels is None or np.any(labels < 0) or np.any(labels > 1):
                raise UsageError("lasso on a CSV needs a last label column inside [0,1]")
            if args.alpha_source == "oracle":
                raise UsageError("--alpha-source oracle needs a synthetic learner")
            inst = experiments.lasso_instance_from_data(X, labels, args.c, args.nu, 0.0, 1.0)
            n = len(labels)
        else:
            inst = experiments.lasso_instance(_lasso_geometry(args), args.seed)
            n = args.n
        loss = inst.loss_profile()
        eps, occupancy, ln_K = inst.eps_S, inst.occupancy, inst.ln_K
    if wanted is None:
        wanted = [b for b in ALL_BOUNDS
                  if not (b in ("thm2", "thm6") and args.alpha_source == "none")
                  and not (b == "stability" and args.learner != "rls")]
    if "stability" in wanted and args.learner != "rls":
        raise UsageError("the stability baseline is only defined for --learner rls")
    if args.alpha_source == "zeta":
        loss.alpha_occupied = [loss.zeta] * occupancy.t_size
        loss.alpha_unoccupied_max = loss.zeta
    elif args.alpha_source == "oracle":
        loss.alpha_occupied, loss.alpha_unoccupied_max = _oracle_alphas(args, inst, loss.zeta)
    n_hat = args.n_hat if args.n_hat is not None else n
    zeta_hat = args.zeta_hat if args.zeta_hat is not None else loss.zeta
    reports: List[BoundReport] = []
    for b in wanted:
        if b == "prop1":
            reports.append(proposition1_bound(loss, eps, ln_K, args.delta, n))
        elif b == "thm1":
            reports.append(theorem1_bound(loss, eps, occupancy, ln_K, args.delta, n))
        elif b == "thm2":
            reports.append(theorem2_bound(loss, eps, occupancy, ln_K, args.delta, n))
        elif b == "thm5":
            reports.append(theorem5_bound(loss, eps, n_hat, zeta_hat, occupancy, ln_K, args.delta, n))
        elif b == "thm6":
            reports.append(theorem6_bound(loss, eps, n_hat, zeta_hat, occupancy, ln_K, args.delta, n))
        else:
            reports.append(uniform_stability_bound(loss.mean_loss, inst.y_bound, args.lam, args.delta, n))
    _emit(args, args.name or f"bound_eval_{args.learner}", reports_to_csv(reports))
    _note(args, f"|T_S| = {occupancy.t_size}, ln K = {ln_K:.4g}, eps(S) = {eps:.4g}, zeta = {loss.zeta:.4g}")
    failures = []
    totals = {r.name: r.total for r in reports}
    for expect in args.expect or []:
        left, sep, right = expect.partition("<")
        if not sep or left not in totals or right not in totals:
            raise UsageError(f"--expect needs A<B over evaluated bounds, got {expect!r}")
        if not totals[left] < totals[right]:
            failures.append(f"{left} total {totals[left]} is not below {right} total {totals[right]}")
    return failures


# --- prop3 ----------------------------------------------------------------------

PROP3_COLUMNS = ("alpha", "beta", "C", "n", "delta", "bound", "hypothesis_holds",
                 "trials", "empirical_quantile", "empirical_max", "bound_checked")


def cmd_prop3(args) -> List[str]:
    spec = DecaySpec(args.alpha, args.beta, args.C)
    res = proposition3_ts_bound(spec, args.n, args.delta)
    if not res.hypothesis_holds:
        print(f"warning: ln n = {math.log(args.n):.4g} is below max(1, 2/alpha) = "
              f"{max(1.0, 2.0 / args.alpha):.4g}; the bound's hypothesis does not hold",
              file=sys.stderr)
    q = mx = checked = ""
    failures = []
    if args.simulate > 0:
        K_max = args.k_max or default_k_max(spec)
        # the simulated masses are normalised, so they satisfy the decay hypothesis only for C >= 1/Z
        c_sim = simulated_constant(spec, K_max)
        if args.C < c_sim:
            _note(args, f"simulated masses need C >= {c_sim:.6g}; checking against that constant")
        checked = proposition3_ts_bound(DecaySpec(args.alpha, args.beta, max(args.C, c_sim)),
                                        args.n, args.delta).value
        t = simulate_occupancy_decay(spec, K_max, args.n, args.simulate, args.seed)
        q = empirical_quantile(t, 1.0 - args.delta)
        mx = int(t.max())
        if res.hypothesis_holds and q > checked:
            failures.append(f"empirical quantile {q} exceeds bound {checked}")
    row = [args.alpha, args.beta, args.C, args.n, args.delta, res.value, res.hypothesis_holds,
           args.simulate, q, mx, checked]
    _emit(args, args.name or "prop3", _rows_to_csv(PROP3_COLUMNS, [row]))
    return failures


# --- robustness-cert ------------------------------------------------------------

CERT_COLUMNS = ("kind", "ln_K", "eps_S", "n_hat", "scheme_note")


def _ln_cube_cover(dim: int, side: float) -> float:
    return dim * math.log(math.ceil(1.0 / side - 1e-12))


def cmd_robustness_cert(args) -> List[str]:
    if args.kind == "lipschitz":
        ln_cover = args.ln_cover if args.ln_cover is not None else _ln_cube_cover(args.dim, args.gamma)
        cert = lipschitz_certificate(args.c_s, args.gamma, ln_cover)
    elif args.kind == "lasso":
        if args.data:
            X, y = datagen.load_csv(args.data, label_column=True)
            dim = X.shape[1] + 1
        else:
            y = np.full(1, math.sqrt(args.y_ms))
            dim = args.dim + 1
        ln_cover = args.ln_cover if args.ln_cover is not None else _ln_cube_cover(dim, args.nu)
        cert = lasso_certificate(y, args.c, args.nu, ln_cover)
    else:
        # l2 balls of radius gamma/2 contain cubes of side gamma / sqrt(dim)
        ln_cover = (args.ln_cover if args.ln_cover is not None
                    else _ln_cube_cover(args.dim, args.gamma / math.sqrt(args.dim)))
        cert = pca_certificate(args.d, args.gamma, args.b_norm, ln_cover)
    row = [args.kind, cert.ln_K, cert.eps_S, "" if cert.n_hat is None else cert.n_hat, cert.scheme_note]
    _emit(args, args.name or f"cert_{args.kind}", _rows_to_csv(CERT_COLUMNS, [row]))
    return []


# --- datagen --------------------------------------------------------------------

def cmd_datagen(args) -> List[str]:
    cfg = datagen.GeneratorConfig(args.family, _parse_params(args.params), dim=args.dim,
                                  n=args.n, seed=args.seed)
    X = datagen.generate(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{args.name or 'samples'}.csv"
    datagen.save_csv(path, X)
    _note(args, f"wrote {len(X)} x {X.shape[1]} samples to {path}")
    return []


# --- parser ---------------------------------------------------------------------

COMMANDS = {
    "cover-sweep": cmd_cover_sweep,
    "mc-verify": cmd_mc_verify,
    "bound-eval": cmd_bound_eval,
    "prop3": cmd_prop3,
    "robustness-cert": cmd_robustness_cert,
    "datagen": cmd_datagen,
}


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help=f"base seed (default: ${SEED_ENV} or 0)")
    common.add_argument("--out-dir", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of flag values")
    common.add_argument("--name", default=argparse.SUPPRESS, help="output file stem")

    parser = argparse.ArgumentParser(prog="robustgen", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cover-sweep", parents=[common], help="K and |T_S| against dimension")
    p.add_argument("--family", default="beta", choices=datagen.FAMILIES)
    p.add_argument("--params", default="a=0.1,b=0.1")
    p.add_argument("--preset", default=None, help="one of " + ", ".join(datagen.FIGURE_FAMILIES))
    p.add_argument("--scheme", default="epsilon_cover", choices=("epsilon_cover", "random_projection"))
    p.add_argument("--width", type=float, default=0.1)
    p.add_argument("--proj-dim", type=int, default=3)
    p.add_argument("--d-values", default="1-10")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=10)

    p = sub.add_parser("mc-verify", parents=[common], help="Monte Carlo coverage of one inequality")
    p.add_argument("--stat", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--M", type=float, default=None)
    p.add_argument("--p", default="uniform", choices=("uniform", "geometric", "spike"))
    p.add_argument("--weights", default=None,
                   help="adversarial, ones, first, or K comma-separated values")
    p.add_argument("--trials", type=int, default=100000)

    p = sub.add_parser("bound-eval", parents=[common], help="evaluate all bounds on one instance")
    p.add_argument("--learner", choices=("rls", "lasso"), default="rls")
    p.add_argument("--data", default=None, help="CSV with features and a last label column")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--nu", type=float, default=None, help="cell side (rls 0.1, lasso 0.2)")
    p.add_argument("--sigma", type=float, default=None, help="noise scale (rls 0.1, lasso 0.01)")
    p.add_argument("--B", type=float, default=2.0, help="rls noise truncation")
    p.add_argument("--lam", type=float, default=0.01)
    p.add_argument("--d", type=int, default=30)
    p.add_argument("--p-active", type=int, default=2)
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--alpha-source", choices=("none", "zeta", "oracle"), default="zeta")
    p.add_argument("--oracle-n", type=int, default=200000)
    p.add_argument("--n-hat", type=int, default=None)
    p.add_argument("--zeta-hat", type=float, default=None)
    p.add_argument("--bounds", default=None, help="comma list from " + ",".join(ALL_BOUNDS))
    p.add_argument("--expect", action="append", help="check such as thm1<prop1 (repeatable)")

    p = sub.add_parser("prop3", parents=[common], help="occupied-cell bound under decaying masses")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--simulate", type=int, default=0, help="number of occupancy simulations")
    p.add_argument("--k-max", type=int, default=None)

    p = sub.add_parser("robustness-cert", parents=[common], help="robustness certificate")
    p.add_argument("--kind", choices=("lipschitz", "lasso", "pca"), required=True)
    p.add_argument("--c-s", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--ln-cover", type=float, default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--y-ms", type=float, default=1.0, help="mean square response when no data")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--b-norm", type=float, default=1.0)

    p = sub.add_parser("datagen", parents=[common], help="write synthetic samples")
    p.add_argument("--family", choices=datagen.FAMILIES, default="beta")
    p.add_argument("--params", default="a=0.1,b=0.1")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, default=1000)
    return parser


GLOBAL_DEFAULTS = {"out_dir": ".", "format": "csv", "quiet": False, "workers": 1,
                   "config": None, "name": None}


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    first = parser.parse_args(argv)
    config_path = getattr(first, "config", None)
    if config_path:
        with open(config_path) as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a JSON object")
        file_values = {k.replace("-", "_"): v for k, v in file_values.items()}
        sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sub_action.choices[first.command].set_defaults(**file_values)
        args = parser.parse_args(argv)
        for k, v in file_values.items():
            if not hasattr(args, k):
                setattr(args, k, v)
    else:
        args = first
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if not hasattr(args, "seed"):
        args.seed = _env_seed()
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if args.command == "bound-eval":
        if args.nu is None:
            args.nu = 0.1 if args.learner == "rls" else 0.2
        if args.sigma is None:
            args.sigma = 0.1 if args.learner == "rls" else 0.01
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        failures = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"robustgen: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, OSError) as exc:
        print(json.dumps({"status": "error", "error": str(exc)}), file=sys.stderr)
        return 2
    if failures:
        print(json.dumps({"status": "fail", "command": args.command, "failures": failures}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
