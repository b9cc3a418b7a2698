"""Command-line front end with deterministic CSV/JSON artifacts.

Subcommands mirror the library layout: ``sample`` draws permutations or
trees, ``exact`` evaluates closed forms and the enumeration oracle,
``bound`` evaluates tail bounds, and ``experiment`` runs the Monte Carlo
drivers. Identical argv (plus environment) always produces byte-identical
output; every artifact carries the command, its parameters, and the seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields

from .analytics import (
    TailBoundParams,
    c_star,
    chernoff_record_tail,
    conditional_height_tail_bound,
    enumerate_exact,
    left_profile_tail_bound,
    mu,
    records_mgf,
    root_split_distribution,
    root_split_pmf,
)
from .experiments import (
    ExperimentConfig,
    TrialSummary,
    height_normalizer,
    log_to_stderr,
    parse_theta_value,
    run_dominance_check,
    run_height_ratio,
    run_record_concentration,
)
from .model import RbParams, build_bst, height, record_count_tree
from .samplers import RandomSource, sample_height_only, sample_sequential, sample_tree_recursive

SEED_ENV_VAR = "RBL_SEED"
DEFAULT_THETA = "1.0"
MAX_PERM_TABLE_N = 8


class UsageError(ValueError):
    """Flag combinations that argparse's declarative checks cannot express."""


@dataclass(frozen=True)
class PermRow:
    n: int
    theta: float
    trials: int
    perm: str
    count: int
    frequency: float
    seed: int


@dataclass(frozen=True)
class TreeRow:
    n: int
    theta: float
    trials: int
    method: str
    height: int
    records: int
    root_label: int
    count: int
    frequency: float
    seed: int


@dataclass(frozen=True)
class ValueRow:
    n: int
    theta: float
    quantity: str
    value: float
    seed: int


@dataclass(frozen=True)
class SplitPmfRow:
    n: int
    theta: float
    k: int
    probability: float
    seed: int


@dataclass(frozen=True)
class MgfRow:
    n: int
    theta: float
    t: float
    value: float
    seed: int


@dataclass(frozen=True)
class EnumerateRow:
    n: int
    theta: float
    law: str
    outcome: str
    probability: float
    seed: int


@dataclass(frozen=True)
class ChernoffRow:
    n: int
    theta: float
    epsilon: float
    side: str
    value: float
    seed: int


@dataclass(frozen=True)
class ProfileTailRow:
    n: int
    theta: float
    epsilon: float
    M: float
    k: int
    C: float
    lam: float
    value: float
    seed: int


@dataclass(frozen=True)
class HeightTailRow:
    n: int
    theta: float
    eta: int
    t: float
    records: int
    value: float
    seed: int


@dataclass
class OutputTable:
    command: str
    params: dict
    seed: int
    rows: list


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(table: OutputTable) -> str:
    names = [f.name for f in fields(table.rows[0])]
    lines = [",".join(["command"] + names)]
    for row in table.rows:
        cells = [table.command] + [_format_cell(getattr(row, name)) for name in names]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_json(table: OutputTable) -> str:
    names = [f.name for f in fields(table.rows[0])]
    payload = {
        "command": table.command,
        "params": table.params,
        "seed": table.seed,
        "rows": [{name: getattr(row, name) for name in names} for row in table.rows],
    }
    return json.dumps(payload) + "\n"


def emit(table: OutputTable, fmt: str, out_path: str | None = None) -> None:
    """Serialize a table deterministically and write it out.

    CSV gets a header row, LF endings, and shortest-round-trip floats; JSON
    is a single object {command, params, seed, rows}. Raises on an empty
    table; file errors are rethrown with the path attached.
    """
    if not table.rows:
        raise ValueError("refusing to emit an empty table")
    if fmt == "csv":
        text = render_csv(table)
    elif fmt == "json":
        text = render_json(table)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out_path is None:
        sys.stdout.write(text)
        return
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise ValueError(f"cannot write {out_path}: {exc}") from exc


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _theta(text: str) -> float:
    try:
        value = parse_theta_value(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad theta {text!r}: {exc}") from exc
    if not math.isfinite(value) or value < 0.0:
        raise argparse.ArgumentTypeError("theta must be finite and >= 0")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV_VAR)
    if env is None:
        return 0
    try:
        return _u64(env)
    except (ValueError, argparse.ArgumentTypeError):
        print(f"rbtrees: error: bad {SEED_ENV_VAR} value {env!r}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbtrees",
        description="Sample record-biased permutations/trees and evaluate their exact laws and bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("--seed", type=_u64, default=None, help="u64 seed (default: $RBL_SEED or 0)")
        p.add_argument("--out", default=None, help="output file path (default: stdout)")
        p.add_argument("--format", choices=["csv", "json"], default=None)

    p_sample = sub.add_parser("sample", help="draw permutations, trees, or height statistics")
    p_sample.add_argument("what", choices=["perm", "tree", "height"])
    p_sample.add_argument("--n", type=int, required=True)
    p_sample.add_argument("--theta", type=_theta, default=_theta(DEFAULT_THETA))
    p_sample.add_argument("--trials", type=int, default=1)
    p_sample.add_argument("--method", choices=["sequential", "recursive"], default=None)
    add_io(p_sample)

    p_exact = sub.add_parser("exact", help="closed-form quantities and the enumeration oracle")
    p_exact.add_argument("what", choices=["mu", "cstar", "split-pmf", "records-mgf", "enumerate"])
    p_exact.add_argument("--n", type=int, default=None)
    p_exact.add_argument("--theta", type=_theta, default=_theta(DEFAULT_THETA))
    p_exact.add_argument("--t", type=float, default=0.0)
    p_exact.add_argument("--k", type=int, default=None)
    add_io(p_exact)

    p_bound = sub.add_parser("bound", help="tail bound evaluators")
    p_bound.add_argument("what", choices=["chernoff", "profile-tail", "height-tail"])
    p_bound.add_argument("--n", type=int, required=True)
    p_bound.add_argument("--theta", type=_theta, default=_theta(DEFAULT_THETA))
    p_bound.add_argument("--epsilon", type=float, default=None)
    p_bound.add_argument("--M", type=float, default=None)
    p_bound.add_argument("--k", type=int, default=None)
    p_bound.add_argument("--eta", type=int, default=None)
    p_bound.add_argument("--t", type=float, default=math.log(2.0 * math.e))
    add_io(p_bound)

    p_exp = sub.add_parser("experiment", help="Monte Carlo experiment drivers")
    p_exp.add_argument("what", choices=["height-ratio", "record-concentration", "dominance"])
    p_exp.add_argument("--config", default=None, help="JSON config mirroring ExperimentConfig")
    p_exp.add_argument("--n-values", type=_int_list, default=None)
    p_exp.add_argument("--theta-spec", default=None)
    p_exp.add_argument("--trials", type=int, default=None)
    p_exp.add_argument("--epsilon", type=float, default=None)
    p_exp.add_argument("--j-values", type=_int_list, default=None)
    p_exp.add_argument("--threads", type=int, default=None)
    add_io(p_exp)

    return parser


def _sample_perm_table(n, theta, trials, seed) -> list[PermRow]:
    if n > MAX_PERM_TABLE_N:
        raise ValueError(
            f"sample perm tabulates distinct permutations and requires n <= {MAX_PERM_TABLE_N}; "
            "use 'sample height' for large n"
        )
    params = RbParams(n, theta)
    rng = RandomSource(seed, 0)
    counts: dict[tuple, int] = {}
    for _ in range(trials):
        values = sample_sequential(params, rng).values
        counts[values] = counts.get(values, 0) + 1
    return [
        PermRow(
            n=n,
            theta=theta,
            trials=trials,
            perm="-".join(str(v) for v in values),
            count=count,
            frequency=count / trials,
            seed=seed,
        )
        for values, count in sorted(counts.items())
    ]


def _sample_tree_table(n, theta, trials, seed, method) -> list[TreeRow]:
    params = RbParams(n, theta)
    rng = RandomSource(seed, 0)
    counts: dict[tuple, int] = {}
    for _ in range(trials):
        if method == "sequential":
            tree = build_bst(sample_sequential(params, rng))
        else:
            tree = sample_tree_recursive(params, rng)
        root_label = tree.labels[tree.root] if not tree.is_empty else 0
        key = (height(tree), record_count_tree(tree), root_label)
        counts[key] = counts.get(key, 0) + 1
    return [
        TreeRow(
            n=n,
            theta=theta,
            trials=trials,
            method=method,
            height=h,
            records=r,
            root_label=root,
            count=count,
            frequency=count / trials,
            seed=seed,
        )
        for (h, r, root), count in sorted(counts.items())
    ]


def _sample_height_table(n, theta, trials, seed, method) -> list[TrialSummary]:
    if method == "recursive":
        config = ExperimentConfig(n_values=(n,), theta_spec=theta, trials=trials, seed=seed)
        return run_height_ratio(config)
    params = RbParams(n, theta)
    rng = RandomSource(seed, 0)
    heights = []
    records = []
    for _ in range(trials):
        tree = build_bst(sample_sequential(params, rng))
        h = height(tree)
        r = record_count_tree(tree)
        if h < r - 1:
            raise AssertionError("height below records - 1")
        heights.append(h)
        records.append(r)
    mean_h = math.fsum(heights) / trials
    mean_r = math.fsum(records) / trials
    if trials > 1:
        sd_h = math.sqrt(math.fsum((h - mean_h) ** 2 for h in heights) / (trials - 1))
        sd_r = math.sqrt(math.fsum((r - mean_r) ** 2 for r in records) / (trials - 1))
    else:
        sd_h = sd_r = 0.0
    norm = height_normalizer(n, theta) if n >= 1 else 0.0
    m = mu(n, theta)
    return [
        TrialSummary(
            n=n,
            theta=theta,
            trials=trials,
            mean_height=mean_h,
            sd_height=sd_h,
            mean_records=mean_r,
            sd_records=sd_r,
            ratio_height_norm=mean_h / norm if norm > 0.0 else math.nan,
            ratio_records_mu=mean_r / m if m > 0.0 else math.nan,
            seed=seed,
        )
    ]


def _cmd_sample(args, seed) -> tuple[OutputTable, float | None]:
    if args.n < 0:
        raise UsageError("n must be non-negative")
    if args.trials < 1:
        raise UsageError("trials must be at least 1")
    what = args.what
    method = args.method
    if method is None:
        method = "sequential" if what == "perm" else "recursive"
    if what == "perm":
        if method != "sequential":
            raise UsageError("sample perm supports only the sequential method")
        rows = _sample_perm_table(args.n, args.theta, args.trials, seed)
    elif what == "tree":
        rows = _sample_tree_table(args.n, args.theta, args.trials, seed, method)
    else:
        rows = _sample_height_table(args.n, args.theta, args.trials, seed, method)
    params = {
        "what": what,
        "n": args.n,
        "theta": args.theta,
        "trials": args.trials,
        "method": method,
    }
    return OutputTable(f"sample {what}", params, seed, rows), None


def _cmd_exact(args, seed) -> tuple[OutputTable, float | None]:
    what = args.what
    if what == "cstar":
        value = c_star()
        rows = [ValueRow(n=0, theta=0.0, quantity="c_star", value=value, seed=seed)]
        return OutputTable("exact cstar", {"what": what}, seed, rows), value
    if args.n is None:
        raise UsageError(f"exact {what} requires --n")
    n, theta = args.n, args.theta
    params = {"what": what, "n": n, "theta": theta}
    if what == "mu":
        value = mu(n, theta)
        rows = [ValueRow(n=n, theta=theta, quantity="mu", value=value, seed=seed)]
        return OutputTable("exact mu", params, seed, rows), value
    if what == "records-mgf":
        value = records_mgf(RbParams(n, theta), args.t)
        params["t"] = args.t
        rows = [MgfRow(n=n, theta=theta, t=args.t, value=value, seed=seed)]
        return OutputTable("exact records-mgf", params, seed, rows), value
    if what == "split-pmf":
        rb = RbParams(n, theta)
        if args.k is not None:
            rows = [
                SplitPmfRow(n=n, theta=theta, k=args.k, probability=root_split_pmf(rb, args.k), seed=seed)
            ]
            params["k"] = args.k
        else:
            pmf = root_split_distribution(rb)
            rows = [
                SplitPmfRow(n=n, theta=theta, k=k, probability=p, seed=seed)
                for k, p in enumerate(pmf, start=1)
            ]
        return OutputTable("exact split-pmf", params, seed, rows), None
    laws = enumerate_exact(RbParams(n, theta))
    rows = []
    for law_name, dist in (
        ("record", laws.record),
        ("first_value", laws.first_value),
        ("left_subtree_size", laws.left_subtree_size),
        ("height", laws.height),
        ("profile", laws.profile),
    ):
        for key, prob in zip(dist.support, dist.probs):
            outcome = "|".join(str(v) for v in key) if isinstance(key, tuple) else str(key)
            rows.append(
                EnumerateRow(n=n, theta=theta, law=law_name, outcome=outcome, probability=prob, seed=seed)
            )
    return OutputTable("exact enumerate", params, seed, rows), None


def _cmd_bound(args, seed) -> tuple[OutputTable, float | None]:
    what = args.what
    n, theta = args.n, args.theta
    rb = RbParams(n, theta)
    if what == "chernoff":
        if args.epsilon is None:
            raise UsageError("bound chernoff requires --epsilon")
        upper = chernoff_record_tail(rb, args.epsilon, "upper")
        lower = chernoff_record_tail(rb, args.epsilon, "lower")
        rows = [
            ChernoffRow(n=n, theta=theta, epsilon=args.epsilon, side="upper", value=upper, seed=seed),
            ChernoffRow(n=n, theta=theta, epsilon=args.epsilon, side="lower", value=lower, seed=seed),
            ChernoffRow(
                n=n,
                theta=theta,
                epsilon=args.epsilon,
                side="two_sided",
                value=min(1.0, upper + lower),
                seed=seed,
            ),
        ]
        params = {"what": what, "n": n, "theta": theta, "epsilon": args.epsilon}
        return OutputTable("bound chernoff", params, seed, rows), None
    if what == "profile-tail":
        if args.epsilon is None or args.M is None or args.k is None:
            raise UsageError("bound profile-tail requires --epsilon, --M, and --k")
        bp = TailBoundParams.from_model(theta, args.epsilon, args.M, args.k)
        value = left_profile_tail_bound(rb, bp)
        rows = [
            ProfileTailRow(
                n=n,
                theta=theta,
                epsilon=args.epsilon,
                M=args.M,
                k=args.k,
                C=bp.C,
                lam=bp.lam,
                value=value,
                seed=seed,
            )
        ]
        params = {"what": what, "n": n, "theta": theta, "epsilon": args.epsilon, "M": args.M, "k": args.k}
        return OutputTable("bound profile-tail", params, seed, rows), None
    if args.eta is None:
        raise UsageError("bound height-tail requires --eta")
    sample = sample_height_only(rb, RandomSource(seed, 0))
    value = conditional_height_tail_bound(sample.profile, args.eta, args.t)
    rows = [
        HeightTailRow(
            n=n,
            theta=theta,
            eta=args.eta,
            t=args.t,
            records=sample.records,
            value=value,
            seed=seed,
        )
    ]
    params = {"what": what, "n": n, "theta": theta, "eta": args.eta, "t": args.t}
    return OutputTable("bound height-tail", params, seed, rows), None


_EXPERIMENT_CONFIG_KEYS = {
    "n_values",
    "theta_spec",
    "trials",
    "seed",
    "tolerances",
    "epsilon",
    "j_values",
}


def _load_experiment_settings(args) -> dict:
    settings: dict = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ValueError(f"cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad JSON in {args.config}: {exc}") from exc
        unknown = set(data) - _EXPERIMENT_CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        settings.update(data)
    if args.n_values is not None:
        settings["n_values"] = args.n_values
    if args.theta_spec is not None:
        settings["theta_spec"] = args.theta_spec
    if args.trials is not None:
        settings["trials"] = args.trials
    if args.epsilon is not None:
        settings["epsilon"] = args.epsilon
    if args.j_values is not None:
        settings["j_values"] = args.j_values
    if args.seed is not None:
        settings["seed"] = args.seed
    if "n_values" not in settings or "theta_spec" not in settings or "trials" not in settings:
        raise UsageError("experiment requires n_values, theta_spec, and trials (flags or config)")
    return settings


def _cmd_experiment(args, seed) -> tuple[OutputTable, float | None]:
    settings = _load_experiment_settings(args)
    seed = _resolve_seed(settings.get("seed"))
    config = ExperimentConfig(
        n_values=tuple(settings["n_values"]),
        theta_spec=settings["theta_spec"],
        trials=int(settings["trials"]),
        seed=seed,
        tolerances=settings.get("tolerances"),
    )
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    what = args.what
    if what == "height-ratio":
        rows = run_height_ratio(config, threads=threads, progress=log_to_stderr)
    elif what == "record-concentration":
        epsilon = settings.get("epsilon")
        if epsilon is None:
            raise UsageError("record-concentration requires --epsilon (or config epsilon)")
        rows = run_record_concentration(config, float(epsilon), progress=log_to_stderr)
    else:
        j_values = settings.get("j_values") or tuple(range(21))
        rows = []
        for n in config.n_values:
            theta = config.theta_for(n)
            rows.extend(
                run_dominance_check(
                    RbParams(n, theta),
                    j_values,
                    config.trials,
                    seed,
                    progress=log_to_stderr,
                )
            )
    params = {
        "what": what,
        "n_values": list(config.n_values),
        "theta_spec": str(config.theta_spec),
        "trials": config.trials,
    }
    if settings.get("epsilon") is not None:
        params["epsilon"] = float(settings["epsilon"])
    if settings.get("j_values") is not None:
        params["j_values"] = [int(j) for j in settings["j_values"]]
    return OutputTable(f"experiment {what}", params, seed, rows), None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        seed = _resolve_seed(getattr(args, "seed", None))
        if args.command == "sample":
            table, scalar = _cmd_sample(args, seed)
        elif args.command == "exact":
            table, scalar = _cmd_exact(args, seed)
        elif args.command == "bound":
            table, scalar = _cmd_bound(args, seed)
        else:
            table, scalar = _cmd_experiment(args, seed)
        if scalar is not None and args.out is None and args.format is None:
            sys.stdout.write(repr(scalar) + "\n")
            return 0
        emit(table, args.format or "csv", args.out)
        return 0
    except UsageError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
