"""Experiment runner and report emitter.

Subcommands:

* ``decompose``: collect a prediction tensor for the configured learner
  and data, sweep ensemble size (or tree depth), and write per-size
  decomposition rows as CSV plus a JSON summary with standard errors.
* ``theory``: tabulate the independent-voter diversity-effect curve or
  run the plurality-vote simulation.
* ``verify``: run the randomized identity suites; the CI gate.
* ``scatter``: the error/diversity protocol: diversity estimated on a
  validation split against the 0-1 gain on a test split, with Pearson r^2.

All outputs are plain CSV/JSON (floats in shortest round-trip form) and
are byte-for-byte determined by (config, seed).  ``ENSDECOMP_THREADS``
caps trial parallelism without affecting results.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .bregman import KLMinimal, extend_probs, generator_for
from .errors import ConfigError, EnsdecompError, SplitError
from .estimators import PredictionTensor, TrialPlan, collect_predictions, sweep_ensemble_size
from .learners import (
    Dataset,
    TreeParams,
    TreeMemberFactory,
    adaboost_member_factory,
    load_csv,
    logitboost_member_factory,
    make_synthetic,
    random_forest_member_factory,
    take,
)
from .seeding import derive_seed
from .theory import diversity_effect_independent, simulate_diversity_effect
from .verify import run_identity_suite, BREGMAN_TOL, EFFECT_TOL

BREGMAN_COLUMNS = (
    "expected_loss", "noise", "average_bias", "average_variance", "diversity", "residual",
)
EFFECT_COLUMNS = (
    "expected_loss", "noise", "bias_effect", "variance_effect", "diversity_effect", "residual",
)

_TASKS = ("regression", "classification-probabilistic", "classification-vote")
_LOSSES = {"squared", "poisson", "itakura_saito", "kl", "zero_one"}
_LEARNERS = ("tree", "stump", "bagging", "random_forest", "adaboost", "logitboost")

_KNOWN_KEYS = {
    "task": None,
    "loss": None,
    "learner": None,
    "max_depth": None,
    "min_samples_split": 2,
    "laplace_alpha": 1.0,
    "n_trials": 5,
    "m_max": 10,
    "subsample_fraction": 0.9,
    "bootstrap": True,
    "seed": 0,
    "dataset": None,
    "csv_path": None,
    "target_column": None,
    "n_samples": 500,
    "n_test": 200,
    "n_classes": 3,
    "p_noise": 0.1,
    "separation": 6.0,
    "noise_sd": 1.0,
    "m_values": None,
    "depth_values": None,
    "split_fractions": None,
    "out_dir": ".",
    # theory-only keys
    "mode": "curve",
    "epsilons": None,
    "sim_k": 2,
    "sim_p_correct": 0.7,
    "sim_m": 11,
    "sim_replicates": 10000,
}


def load_config(path: str) -> dict:
    """Read a flat JSON config; unknown keys are errors."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in raw:
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key: {key!r}")
    config = dict(_KNOWN_KEYS)
    config.update(raw)
    return config


def _require(config: dict, key: str):
    if config.get(key) in (None, ""):
        raise ConfigError(f"missing required config key: {key!r}")
    return config[key]


def _float_str(x: float) -> str:
    return repr(float(x))


def _tree_params(config: dict, seed: int) -> TreeParams:
    max_depth = config["max_depth"]
    return TreeParams(
        max_depth=None if max_depth is None else int(max_depth),
        min_samples_split=int(config["min_samples_split"]),
        laplace_alpha=float(config["laplace_alpha"]),
        seed=seed,
    )


def _build_factory(config: dict, task: str, params: TreeParams):
    learner = _require(config, "learner")
    kind = {"regression": "regression", "classification-probabilistic": "proba",
            "classification-vote": "label"}[task]
    if learner == "mlp":
        raise ConfigError(
            "learner 'mlp' is not supported; use tree-based learners "
            "(tree, stump, bagging, random_forest, adaboost, logitboost)"
        )
    if learner not in _LEARNERS:
        raise ConfigError(f"unknown learner {config['learner']!r}")
    if learner in ("tree", "bagging"):
        tree_task = "regression" if task == "regression" else kind
        return TreeMemberFactory(params, tree_task), kind
    if learner == "stump":
        if task == "regression":
            return TreeMemberFactory(replace(params, max_depth=1), "regression"), kind
        return TreeMemberFactory(replace(params, max_depth=1), kind), kind
    if learner == "random_forest":
        tree_task = "regression" if task == "regression" else kind
        return random_forest_member_factory(params, tree_task), kind
    if task != "classification-vote":
        raise ConfigError(f"learner {learner!r} requires the classification-vote task")
    stump_params = replace(params, max_depth=1)
    if learner == "adaboost":
        return adaboost_member_factory(stump_params), kind
    return logitboost_member_factory(stump_params), kind


def _build_data(config: dict, seed: int, n_parts: int) -> tuple[Dataset, ...]:
    """Materialise the configured dataset as train(+val)+test parts."""
    dataset = _require(config, "dataset")
    if dataset == "csv":
        path = _require(config, "csv_path")
        target = _require(config, "target_column")
        task = "regression" if config["task"] == "regression" else "classification"
        data = load_csv(path, target, task)
        fractions = config["split_fractions"]
        if fractions is None or len(fractions) != n_parts:
            raise ConfigError(f"csv datasets need 'split_fractions' with {n_parts} entries")
        order = np.random.default_rng(derive_seed(seed, 7)).permutation(len(data))
        parts = []
        start = 0
        for frac in fractions:
            count = int(round(float(frac) * len(data)))
            part = order[start : start + count]
            if part.size == 0:
                raise SplitError("a requested data split is empty")
            parts.append(take(data, part))
            start += count
        return tuple(parts)
    sizes = [int(config["n_samples"])] + [int(config["n_test"])] * (n_parts - 1)
    kwargs = {}
    if dataset == "mease_binary":
        kwargs["p_noise"] = float(config["p_noise"])
    elif dataset.startswith("gaussian_blobs"):
        kwargs["k"] = int(config["n_classes"])
        kwargs["separation"] = float(config["separation"])
    elif dataset == "friedman_regression":
        kwargs["noise_sd"] = float(config["noise_sd"])
    parts = []
    for part_no, size in enumerate(sizes):
        if size < 1:
            raise SplitError("a requested data split is empty")
        parts.append(make_synthetic(dataset, size, derive_seed(seed, 11, part_no), **kwargs))
    return tuple(parts)


def _check_task_loss(config: dict) -> tuple[str, str]:
    task = _require(config, "task")
    loss = _require(config, "loss")
    if task not in _TASKS:
        raise ConfigError(f"unknown task {task!r}")
    if loss not in _LOSSES:
        raise ConfigError(f"unknown loss {loss!r}")
    compatible = {
        "regression": {"squared", "poisson", "itakura_saito"},
        "classification-probabilistic": {"kl"},
        "classification-vote": {"zero_one"},
    }
    if loss not in compatible[task]:
        raise ConfigError(f"loss {loss!r} is incompatible with task {task!r}")
    return task, loss


def _residual_ok(report, loss: str) -> bool:
    if loss == "zero_one":
        return abs(report.residual) <= EFFECT_TOL
    return abs(report.residual) <= BREGMAN_TOL * (1.0 + abs(report.expected_loss))


def _entry_row(label, entry, columns) -> list[str]:
    row = [str(label)]
    for name in columns:
        value = entry.report.residual if name == "residual" else getattr(entry.report, name)
        row.append(_float_str(value))
    return row


def _write_rows(path, first_column: str, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join([first_column, *columns]) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _sweep_rows(tensor, gen, targets, m_values, loss, seed):
    entries = sweep_ensemble_size(
        tensor, gen, targets, m_values, rng=np.random.default_rng(derive_seed(seed, 23))
    )
    columns = EFFECT_COLUMNS if loss == "zero_one" else BREGMAN_COLUMNS
    rows = [_entry_row(entry.m, entry, columns) for entry in entries]
    ok = all(_residual_ok(entry.report, loss) for entry in entries)
    summary = [
        {
            "m": entry.m,
            **{name: getattr(entry.report, name) for name in columns if name != "residual"},
            "residual": entry.report.residual,
            "std_errors": {k: v for k, v in sorted(entry.std_errors.items())},
        }
        for entry in entries
    ]
    return rows, summary, ok, columns


def cmd_decompose(args) -> int:
    config = load_config(args.config)
    task, loss = _check_task_loss(config)
    seed = int(args.seed if args.seed is not None else config["seed"])
    out_dir = args.out or config["out_dir"]
    train, test = _build_data(config, seed, 2)
    params = _tree_params(config, derive_seed(seed, 3))
    m_max = int(config["m_max"])
    plan = TrialPlan(
        n_trials=int(config["n_trials"]),
        ensemble_size=m_max,
        subsample_fraction=float(config["subsample_fraction"]),
        bootstrap=bool(config["bootstrap"]),
        master_seed=seed,
    )
    if loss == "kl":
        k = train.n_classes or int(np.max(train.targets)) + 1
        gen = KLMinimal(k)
    elif loss == "zero_one":
        gen = None
    else:
        gen = generator_for(loss)
    targets = test.targets

    depth_values = config["depth_values"]
    if depth_values:
        rows, summary, all_ok, columns = [], [], True, None
        for depth in [int(v) for v in depth_values]:
            factory, kind = _build_factory(config, task, replace(params, max_depth=depth))
            tensor = collect_predictions(factory, train, test, plan, kind)
            drows, dsummary, ok, columns = _sweep_rows(tensor, gen, targets, [m_max], loss, seed)
            rows.append([str(depth), *drows[0][1:]])
            summary.append({"depth": depth, **dsummary[0]})
            all_ok = all_ok and ok
        first_column = "depth"
    else:
        factory, kind = _build_factory(config, task, params)
        tensor = collect_predictions(factory, train, test, plan, kind)
        m_values = [int(v) for v in config["m_values"]] if config["m_values"] else list(
            range(1, m_max + 1)
        )
        rows, summary, all_ok, columns = _sweep_rows(tensor, gen, targets, m_values, loss, seed)
        first_column = "M"

    csv_path = f"{out_dir}/decompose.csv"
    _write_rows(csv_path, first_column, columns, rows)
    _write_json(f"{out_dir}/decompose.json", {
        "config": {k: config[k] for k in sorted(config) if config[k] is not None},
        "seed": seed,
        "rows": summary,
        "residuals_ok": all_ok,
    })
    if not all_ok:
        print("decompose: identity residual beyond tolerance", file=sys.stderr)
        return 1
    print(f"decompose: wrote {csv_path}")
    return 0


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_theory(args) -> int:
    config = load_config(args.config) if args.config else dict(_KNOWN_KEYS)
    seed = int(args.seed if args.seed is not None else config["seed"])
    out_dir = args.out or config["out_dir"]
    mode = config["mode"]
    if mode == "simulate":
        k = int(config["sim_k"])
        p = float(config["sim_p_correct"])
        m = int(config["sim_m"])
        reps = int(config["sim_replicates"])
        result = simulate_diversity_effect(k, p, m, reps, seed)
        path = f"{out_dir}/theory.csv"
        with open(path, "w", newline="") as fh:
            fh.write("k,p_correct,M,replicates,mean_de,se\n")
            fh.write(
                ",".join([str(k), _float_str(p), str(m), str(reps),
                          _float_str(result["mean"]), _float_str(result["se"])]) + "\n"
            )
        print(f"theory: wrote {path}")
        return 0
    if mode != "curve":
        raise ConfigError(f"unknown theory mode {mode!r}")
    epsilons = config["epsilons"] or [i / 50.0 for i in range(51)]
    m_values = config["m_values"] or [1, 3, 11, 51]
    path = f"{out_dir}/theory.csv"
    series = {}
    with open(path, "w", newline="") as fh:
        fh.write("epsilon,M,diversity_effect\n")
        for m in m_values:
            de_values = [diversity_effect_independent(float(e), int(m)) for e in epsilons]
            series[int(m)] = de_values
            for e, de in zip(epsilons, de_values):
                fh.write(f"{_float_str(e)},{int(m)},{_float_str(de)}\n")
    if args.svg:
        svg_path = f"{out_dir}/theory.svg"
        xs = [float(e) for e in epsilons]
        write_line_svg(
            svg_path,
            [(f"M={m}", xs, ys) for m, ys in series.items()],
            x_label="error probability",
            y_label="diversity effect",
        )
        print(f"theory: wrote {svg_path}")
    print(f"theory: wrote {path}")
    return 0


def cmd_verify(args) -> int:
    results = run_identity_suite(
        seed=args.seed or 0, count=args.counts, inject_fault=args.inject_fault
    )
    for result in results:
        print(result.line())
    if all(r.passed for r in results):
        print("verify: all identities within tolerance")
        return 0
    print("verify: FAILED identities present", file=sys.stderr)
    return 1


def cmd_scatter(args) -> int:
    config = load_config(args.config)
    task, loss = _check_task_loss(config)
    if task != "classification-probabilistic":
        raise ConfigError("scatter requires the classification-probabilistic task")
    seed = int(args.seed if args.seed is not None else config["seed"])
    out_dir = args.out or config["out_dir"]
    if config["dataset"] == "csv":
        train, val, test = _build_data(config, seed, 3)
    else:
        fractions = config["split_fractions"] or [0.6, 0.2, 0.2]
        if len(fractions) != 3:
            raise ConfigError("scatter needs 3 split fractions (train, val, test)")
        total = int(config["n_samples"])
        sizes = [int(round(total * float(f))) for f in fractions]
        if any(s < 1 for s in sizes):
            raise SplitError("a requested data split is empty")
        whole = _build_data({**config, "n_samples": sum(sizes)}, seed, 1)[0]
        order = np.random.default_rng(derive_seed(seed, 7)).permutation(len(whole))
        train = take(whole, order[: sizes[0]])
        val = take(whole, order[sizes[0] : sizes[0] + sizes[1]])
        test = take(whole, order[sizes[0] + sizes[1] : sum(sizes)])
    k = train.n_classes or int(np.max(train.targets)) + 1
    gen = KLMinimal(k)
    params = _tree_params(config, derive_seed(seed, 3))
    factory, kind = _build_factory(config, task, params)
    m_max = int(config["m_max"])
    plan = TrialPlan(
        n_trials=int(config["n_trials"]),
        ensemble_size=m_max,
        subsample_fraction=float(config["subsample_fraction"]),
        bootstrap=bool(config["bootstrap"]),
        master_seed=seed,
    )
    joint = Dataset(
        np.vstack([val.features, test.features]),
        np.concatenate([val.targets, test.targets]),
        n_classes=k,
    )
    tensor = collect_predictions(factory, train, joint, plan, kind)
    n_val = len(val)
    val_tensor = PredictionTensor(tensor.values[:, :, :n_val], "proba", k=k)
    test_values = tensor.values[:, :, n_val:]
    m_values = [int(v) for v in config["m_values"]] if config["m_values"] else list(
        range(1, m_max + 1)
    )
    entries = sweep_ensemble_size(val_tensor, gen, val.targets, m_values)
    diversities = [entry.report.diversity for entry in entries]
    gains = [
        _zero_one_gain(gen, test_values[:, :m], np.asarray(test.targets, dtype=int))
        for m in m_values
    ]
    r2 = _pearson_r2(diversities, gains)
    csv_path = f"{out_dir}/scatter.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write("M,diversity,gain\n")
        for m, div, gain in zip(m_values, diversities, gains):
            fh.write(f"{m},{_float_str(div)},{_float_str(gain)}\n")
    _write_json(f"{out_dir}/scatter.json", {
        "seed": seed,
        "r_squared": r2,
        "rows": [
            {"m": m, "diversity": d, "gain": g}
            for m, d, g in zip(m_values, diversities, gains)
        ],
    })
    print(f"scatter: wrote {csv_path} (r^2 = {r2:.6f})")
    return 0


def _zero_one_gain(gen: KLMinimal, values: np.ndarray, labels: np.ndarray) -> float:
    """Average individual 0-1 error minus ensemble 0-1 error.

    ``values`` is (D, m, N, k-1); members and the centroid-combined
    ensemble predict by the most probable class.
    """
    member_preds = np.argmax(extend_probs(values), axis=-1)  # (D, m, N)
    individual_err = float(np.mean(member_preds != labels))
    combined = gen.grad_inverse(np.mean(gen.grad(values), axis=1))  # (D, N, k-1)
    ens_preds = np.argmax(extend_probs(combined), axis=-1)
    ensemble_err = float(np.mean(ens_preds != labels))
    return individual_err - ensemble_err


def _pearson_r2(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or float(np.std(xs)) == 0.0 or float(np.std(ys)) == 0.0:
        return 0.0
    return float(np.corrcoef(xs, ys)[0, 1] ** 2)


def write_line_svg(path, series, x_label="", y_label="", width=640, height=420) -> None:
    """Write a minimal deterministic line chart (no external processes).

    ``series`` is a list of (label, xs, ys) triples.
    """
    pad = 50.0
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]

    def sx(x):
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / y_span * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.1f})">{y_label}</text>',
    ]
    for idx, (label, xs, ys) in enumerate(series):
        color = colors[idx % len(colors)]
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        parts.append(
            f'<text x="{width - pad + 4}" y="{pad + 14 * idx + 10}" font-size="11" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ensdecomp",
        description="Bias-variance-diversity decompositions of ensemble losses",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dec = sub.add_parser("decompose", help="run a decomposition sweep and write reports")
    p_dec.add_argument("--config", required=True, help="path to a flat JSON config")
    p_dec.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_dec.add_argument("--out", default=None, help="output directory")
    p_dec.add_argument("--svg", action="store_true", help="also write SVG plots")
    p_dec.set_defaults(func=cmd_decompose)

    p_theory = sub.add_parser("theory", help="independent-voter diversity-effect tables")
    p_theory.add_argument("--config", default=None)
    p_theory.add_argument("--seed", type=int, default=None)
    p_theory.add_argument("--out", default=None)
    p_theory.add_argument("--svg", action="store_true")
    p_theory.set_defaults(func=cmd_theory)

    p_verify = sub.add_parser("verify", help="run the randomized identity suites")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--counts", type=int, default=1000, help="instances per identity")
    p_verify.add_argument(
        "--inject-fault", action="store_true",
        help="negative control: corrupt one identity and expect failure",
    )
    p_verify.set_defaults(func=cmd_verify)

    p_scatter = sub.add_parser("scatter", help="diversity vs 0-1 gain scatter protocol")
    p_scatter.add_argument("--config", required=True)
    p_scatter.add_argument("--seed", type=int, default=None)
    p_scatter.add_argument("--out", default=None)
    p_scatter.add_argument("--svg", action="store_true")
    p_scatter.set_defaults(func=cmd_scatter)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EnsdecompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
