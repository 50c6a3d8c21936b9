"""Command-line entry point.

Exit codes: 0 on success, 1 on a validation error, 2 on any other failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from .attack import SanityConfig, adaptive_pgd, adaptive_spec, cam_mask, pgd, pixel_ag, sanity_suite
from .attack.results import predictions
from .base.exceptions import PartException
from .base.loggable import configure_logging
from .bench import (
    RegionalBudget,
    export_heatmaps,
    load_cifar10_binary,
    run_epslow_sweep,
    run_quadrant_experiment,
    synth_dataset,
    write_table,
)
from .bench.experiments import DEFAULT_EPS_LOW_GRID, default_architecture
from .bench.manifest import RunManifest, tensor_digest
from .core import AttackSpec, MaskMode, TrainSpec, load_config, parse_fraction, replace_spec
from .nn import LossFn, ModelBackend, build_model, load_model
from .theory import ToyInstance, grid_oracle, kkt_analysis, solve_toy_attack, unequal_budget_effect
from .train import evaluate, train
from .utils import ensure_valid_model_backend

logger = logging.getLogger("pixelpart.cli")

ATTACK_COLUMNS = ("image_index", "true_label", "pred_natural", "pred_adv", "linf_norm", "success")
TOY_COLUMNS = ("case", "delta1", "delta2", "loss", "feasible", "kkt_consistent")
SWEEP_TOY_COLUMNS = ("eps1", "eps2", "loss")
EXIT_VALIDATION = 1
EXIT_FAILURE = 2


def fraction(text: str) -> float:
    try:
        return float(parse_fraction(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def fraction_list(text: str) -> List[float]:
    return [fraction(part) for part in text.split(",") if part.strip()]


class UsageErrorParser(argparse.ArgumentParser):
    """Reports malformed arguments with the validation exit code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out-dir", type=Path, default=Path("runs"), help="output directory")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument(
        "--dataset", default="synthetic",
        help="'synthetic' or a CIFAR-10 binary batch file / directory",
    )
    data.add_argument("--n-train", type=int, default=2000, help="synthetic training examples")
    data.add_argument("--n-test", type=int, default=500, help="synthetic test examples")
    data.add_argument("--size", type=int, default=16, help="synthetic image side")
    data.add_argument("--limit", type=int, help="use only the first N examples")

    parser = UsageErrorParser(
        prog="pixelpart", description="Pixel-reweighted adversarial training toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common, data], help="train a model")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("attack", parents=[common, data], help="attack a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--attack", choices=("pgd", "pixel_ag", "adaptive"), default="pgd")
    p.add_argument("--eps", type=fraction)
    p.add_argument("--eps-low", type=fraction)
    p.add_argument("--alpha", type=fraction)
    p.add_argument("--iters", type=int)
    p.add_argument("--out", type=Path, help="CSV path (default OUT_DIR/attack.csv)")
    p.set_defaults(handler=cmd_attack)

    p = sub.add_parser("eval", parents=[common, data], help="natural and robust accuracy")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--attacks", default="pgd", help="comma-separated: pgd, pixel_ag, adaptive")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("cam", parents=[common, data], help="export overlay heatmaps")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--no-blend", action="store_true", help="write the bare color ramp")
    p.set_defaults(handler=cmd_cam)

    p = sub.add_parser("toy", parents=[common], help="two-pixel KKT analysis")
    for name in ("w1", "w2", "b", "x1", "x2", "y"):
        p.add_argument(f"--{name}", type=fraction, required=name in ("w1", "w2"), default=0.0)
    p.add_argument("--eps1", type=fraction, required=True)
    p.add_argument("--eps2", type=fraction, required=True)
    p.add_argument("--sweep", type=int, help="sweep N budget splits at fixed total")
    p.add_argument("--grid", type=int, help="cross-check with a grid oracle of this resolution")
    p.add_argument("--out", type=Path, help="write the candidate table as CSV")
    p.set_defaults(handler=cmd_toy)

    p = sub.add_parser("quadrant", parents=[common, data], help="regional budget study")
    p.add_argument("--eps-ref", type=fraction, default=12 / 255)
    p.add_argument("--eps-small", type=fraction, default=6 / 255)
    p.add_argument(
        "--allocations",
        help="';'-separated ul,ur,bl,br budgets (default: the small budget in each quadrant)",
    )
    p.set_defaults(handler=cmd_quadrant)

    p = sub.add_parser("sweep", parents=[common, data], help="eps_low sweep")
    p.add_argument("--eps", type=fraction)
    p.add_argument("--eps-lows", type=fraction_list, default=list(DEFAULT_EPS_LOW_GRID))
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("sanity", parents=[common, data], help="obfuscated-gradient checklist")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--surrogate", type=Path)
    p.add_argument("--count", type=int, default=200)
    p.set_defaults(handler=cmd_sanity)
    return parser


def load_spec(args) -> TrainSpec:
    spec = load_config(args.config) if args.config else TrainSpec()
    if args.seed is not None:
        spec = replace_spec(spec, seed=args.seed)
    return spec


def load_checked_model(path: Path, require_cam_layer: bool = False) -> ModelBackend:
    """Load a checkpoint and reject models that fail the structural checks."""
    return ensure_valid_model_backend(load_model(path), require_cam_layer)


def load_datasets(args, seed: int):
    if args.dataset == "synthetic":
        train_data = synth_dataset(args.n_train, args.size, args.size, seed, "train")
        test_data = synth_dataset(args.n_test, args.size, args.size, seed + 1, "test")
    else:
        train_data = load_cifar10_binary(args.dataset, "train")
        test_data = load_cifar10_binary(args.dataset, "test")
    if args.limit:
        train_data, test_data = train_data.subset(args.limit), test_data.subset(args.limit)
    return train_data, test_data


def cmd_train(args) -> None:
    spec = load_spec(args)
    train_data, test_data = load_datasets(args, spec.seed)
    architecture = default_architecture(train_data, spec)
    model = build_model(architecture, seed=spec.seed, dtype=train_data.images.dtype)
    state = train(train_data, spec, model, out_dir=args.out_dir)
    evaluation = evaluate(state.model, test_data, {"pgd20": spec.eval_attack}, seed=spec.seed)
    RunManifest(
        runner="train",
        seed=spec.seed,
        config=spec.model_dump(mode="json", by_alias=True),
        inputs_sha256={"train": tensor_digest(train_data.images, train_data.labels)},
        parameters={
            "architecture": architecture.model_dump(mode="json"),
            "evaluation": evaluation.model_dump(),
        },
    ).write(args.out_dir)


def attack_spec_from_args(args, spec: TrainSpec) -> AttackSpec:
    base = spec.eval_attack
    changes = {
        key: value
        for key, value in (
            ("eps", args.eps), ("eps_low", args.eps_low), ("alpha", args.alpha), ("iterations", args.iters)
        )
        if value is not None
    }
    if args.attack == "adaptive":
        adaptive = adaptive_spec()
        return replace_spec(adaptive, **changes)
    if args.attack == "pixel_ag":
        changes["mask_mode"] = MaskMode.PIXEL_AG.value
    return replace_spec(base, **changes)


def cmd_attack(args) -> None:
    spec = load_spec(args)
    model = load_checked_model(args.checkpoint, require_cam_layer=args.attack != "pgd")
    _, test_data = load_datasets(args, spec.seed)
    attack = attack_spec_from_args(args, spec)
    x, labels = test_data.images, test_data.labels
    loss = LossFn()

    if args.attack == "pgd":
        result = pgd(model, loss, x, labels, attack, spec.seed)
    elif args.attack == "pixel_ag":
        mask = cam_mask(model, x, labels, attack.eps, attack.eps_low, spec.cam_method, spec.cam_layer, spec.scaling)
        result = pixel_ag(model, loss, x, labels, attack, mask, spec.seed)
    else:
        result = adaptive_pgd(
            model, loss, x, labels, attack.eps_low, attack.eps, attack.iterations, attack.alpha,
            spec.cam_method, spec.cam_layer, spec.scaling, spec.seed,
        )

    natural = predictions(model, x)
    adversarial = predictions(model, result.adversarial)
    linf = result.perturbation.linf()
    rows = [
        {
            "image_index": i,
            "true_label": int(labels[i]),
            "pred_natural": int(natural[i]),
            "pred_adv": int(adversarial[i]),
            "linf_norm": float(linf[i]),
            "success": bool(result.success[i]),
        }
        for i in range(len(test_data))
    ]
    out = args.out or args.out_dir / "attack.csv"
    write_table(out, ATTACK_COLUMNS, rows)
    logger.info("%s success rate %.4f, results in %s", args.attack, result.success_rate, out)


def named_attacks(names: Sequence[str], spec: TrainSpec) -> Dict[str, AttackSpec]:
    builders: Dict[str, Callable[[], AttackSpec]] = {
        "pgd": lambda: spec.eval_attack,
        "pixel_ag": lambda: replace_spec(spec.eval_attack, mask_mode=MaskMode.PIXEL_AG.value),
        "adaptive": adaptive_spec,
    }
    unknown = [name for name in names if name not in builders]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown attacks: {', '.join(unknown)}")
    return {name: builders[name]() for name in names}


def cmd_eval(args) -> None:
    spec = load_spec(args)
    _, test_data = load_datasets(args, spec.seed)
    attacks = named_attacks([n.strip() for n in args.attacks.split(",") if n.strip()], spec)
    model = load_checked_model(args.checkpoint, require_cam_layer=set(attacks) != {"pgd"})
    evaluation = evaluate(
        model, test_data, attacks, seed=spec.seed,
        cam_method=spec.cam_method, cam_layer=spec.cam_layer, scaling=spec.scaling,
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "eval.json").write_text(evaluation.model_dump_json(indent=2) + "\n")
    print(json.dumps(evaluation.model_dump(), indent=2))


def cmd_cam(args) -> None:
    spec = load_spec(args)
    model = load_checked_model(args.checkpoint, require_cam_layer=True)
    _, test_data = load_datasets(args, spec.seed)
    count = min(args.count, len(test_data))
    export_heatmaps(
        model, test_data.images[:count], args.out_dir, test_data.labels[:count],
        spec.cam_method, spec.cam_layer, spec.scaling, blend=not args.no_blend,
    )


def cmd_toy(args) -> None:
    inst = ToyInstance(args.w1, args.w2, args.b, args.x1, args.x2, args.y, args.eps1, args.eps2)
    analysis = kkt_analysis(inst)
    rows = [
        {
            "case": c.case,
            "delta1": c.delta1,
            "delta2": c.delta2,
            "loss": c.loss,
            "feasible": c.feasible,
            "kkt_consistent": c.kkt_consistent,
        }
        for c in analysis.all_candidates
    ]
    print(f"{'case':<16} {'delta1':>12} {'delta2':>12} {'loss':>14} {'feasible':>9} {'kkt':>5}")
    for row in rows:
        print(
            f"{row['case']:<16} {row['delta1']:>12.6f} {row['delta2']:>12.6f} "
            f"{row['loss']:>14.6f} {str(row['feasible']):>9} {str(row['kkt_consistent']):>5}"
        )
    for note in analysis.diagnostics:
        print(f"  note: {note}")
    (d1, d2), loss = solve_toy_attack(inst)
    print(f"argmax: delta = ({d1:.6f}, {d2:.6f}), loss = {loss:.6f}")

    if args.grid:
        (g1, g2), grid_loss = grid_oracle(inst, args.grid)
        print(f"grid({args.grid}): delta = ({g1:.6f}, {g2:.6f}), loss = {grid_loss:.6f}")
    if args.sweep:
        report = unequal_budget_effect(inst, num_splits=args.sweep)
        for split in report.splits:
            print(f"  eps1={split.eps1:.6f} eps2={split.eps2:.6f} loss*={split.loss:.6f}")
        print(
            f"best split: ({report.best.eps1:.6f}, {report.best.eps2:.6f}); "
            f"favours larger |w|: {report.favours_larger_weight}"
        )
        if args.out:
            write_table(
                args.out.with_name(args.out.stem + "_sweep.csv"),
                SWEEP_TOY_COLUMNS,
                [{"eps1": s.eps1, "eps2": s.eps2, "loss": s.loss} for s in report.splits],
            )
    if args.out:
        write_table(args.out, TOY_COLUMNS, rows)


def parse_allocations(text: str) -> List[RegionalBudget]:
    allocations = []
    for chunk in text.split(";"):
        values = fraction_list(chunk)
        if len(values) != 4:
            raise argparse.ArgumentTypeError(f"allocation needs 4 budgets: {chunk!r}")
        allocations.append(RegionalBudget(ul=values[0], ur=values[1], bl=values[2], br=values[3]))
    return allocations


def cmd_quadrant(args) -> None:
    spec = load_spec(args)
    train_data, test_data = load_datasets(args, spec.seed)
    if args.allocations:
        allocations = parse_allocations(args.allocations)
    else:
        base = RegionalBudget(ul=args.eps_small, ur=args.eps_ref, bl=args.eps_ref, br=args.eps_ref)
        allocations = [base.rotated(k) for k in range(4)]
    rows = run_quadrant_experiment(
        train_data, test_data, spec, allocations, args.eps_ref, out_dir=args.out_dir
    )
    for row in rows:
        print(f"{row['allocation']:<20} nat={row['nat_acc']:.4f} rob={row['rob_acc_pgd20']:.4f}")


def cmd_sweep(args) -> None:
    spec = load_spec(args)
    train_data, test_data = load_datasets(args, spec.seed)
    rows = run_epslow_sweep(train_data, test_data, spec, args.eps, args.eps_lows, out_dir=args.out_dir)
    for row in rows:
        print(
            f"eps_low={row['eps_low'] * 255:.1f}/255 nat={row['nat_acc']:.4f} "
            f"rob={row['rob_acc_pgd20']:.4f} low|d|={row['low_mean_abs_delta']:.6f}"
        )


def cmd_sanity(args) -> None:
    spec = load_spec(args)
    model = load_checked_model(args.checkpoint)
    surrogate = load_checked_model(args.surrogate) if args.surrogate else None
    _, test_data = load_datasets(args, spec.seed)
    sample = test_data.subset(min(args.count, len(test_data)))
    config = SanityConfig(
        eps=spec.eval_attack.eps,
        alpha=spec.eval_attack.alpha,
        iterations=spec.eval_attack.iterations,
        seed=spec.seed,
    )
    report = sanity_suite(model, sample.images, sample.labels, surrogate, config)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "sanity.json").write_text(report.model_dump_json(indent=2) + "\n")
    for item in report.items:
        status = "skipped" if item.passed is None else ("pass" if item.passed else "FAIL")
        print(f"{item.name:<24} {status:<8} {item.values}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    configure_logging(args.verbose)
    try:
        args.handler(args)
    except PartException as exc:
        logger.error("%s: %s", exc.error_category, exc.message)
        return EXIT_VALIDATION if exc.error_category == "validation" else EXIT_FAILURE
    except argparse.ArgumentTypeError as exc:
        logger.error("validation: %s", exc)
        return EXIT_VALIDATION
    except Exception:
        logger.exception("pixelpart %s failed", args.command)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
