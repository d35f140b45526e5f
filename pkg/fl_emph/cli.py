import argparse
import json
import sys
import traceback
import typing
from dataclasses import fields
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from example_configs import available_examples, get_example_config
from fl_emph.barcode import FiltrationCurve, curve_barcode
from fl_emph.config import RunConfig, merge_config, read_config, write_config
from fl_emph.data import Dataset, load_ucr, stratified_split, synth_example, write_ucr
from fl_emph.errors import InputError, InternalError
from fl_emph.learner import (
    benchmark,
    crossval,
    diagonal_barcodes,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from fl_emph.logging_utils import get_logger, set_loglevel
from fl_emph.multipers_ref import load_fixture, two_param_persistence_image, two_param_persistence_landscape
from fl_emph.spectral import batch_fourier_amplitudes
from fl_emph.utils import Pathy, path_or_cloudpath
from fl_emph.vectorize import make_grid, persistence_image

logger = get_logger("fl_emph")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2
DEFAULT_FIXTURE = "configs/multipers_example.json"


def _flag_type(hint):
    """Map a config field annotation to (argparse type, nargs)."""
    if typing.get_origin(hint) is typing.Union:
        hint = next(arg for arg in typing.get_args(hint) if arg is not type(None))
    if typing.get_origin(hint) in (list, List):
        (inner,) = typing.get_args(hint)
        if typing.get_origin(inner) in (list, List):
            return json.loads, None
        return inner, "+"
    return hint, None


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("config keys (override --example and --config)")
    hints = typing.get_type_hints(RunConfig)
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        kind, nargs = _flag_type(hints[f.name])
        if kind is bool:
            group.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            group.add_argument(flag, dest=f.name, type=kind, nargs=nargs, default=None)


def make_argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emph",
        description="filtration learning on exact multi-parameter persistence of time series",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="append_const",
        const=1,
        help="decrease the logging level",
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="append_const",
        const=1,
        help="increase the logging level",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def command(name, help):
        sub = subparsers.add_parser(name, help=help, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        sub.add_argument(
            "--example",
            choices=available_examples(),
            help="named preset applied before --config and flags",
        )
        sub.add_argument("--config", type=str, help="flat YAML config file")
        add_config_flags(sub)
        return sub

    synth = command("synth", "write a synthetic dataset in UCR layout")
    synth.add_argument("--output", type=str, required=True, help="output file")

    barcode = command("barcode", "dump barcodes as dimension,birth,death,composition,series rows")
    barcode.add_argument("--direction", type=float, nargs="+", help="ray direction (default diagonal)")
    barcode.add_argument("--output", type=str, help="CSV file, stdout when omitted")

    image = command("image", "dump the r x r persistence image of one series")
    image.add_argument("--row", type=int, default=0, help="series index in the dataset")
    image.add_argument("--direction", type=float, nargs="+", help="ray direction (default diagonal)")
    image.add_argument("--output", type=str, help="CSV file, stdout when omitted")

    command("train", "train a model and write checkpoint, metrics and trajectory")
    command("eval", "score a checkpoint on --test-input (or --input)")
    command("crossval", "k-fold cross-validation over the grid_* keys")
    command("bench", "time exact vs finite-difference direction gradients")

    demo = subparsers.add_parser("multipers-demo", help="two-parameter image and landscape of a fixture")
    demo.add_argument("--fixture", type=str, default=DEFAULT_FIXTURE, help="fixture JSON")
    demo.add_argument("--k", type=int, default=1, help="landscape depth")
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "example", None):
        try:
            config = merge_config(config, get_example_config(args.example))
        except ValueError as e:
            raise InputError(str(e)) from e
    if getattr(args, "config", None):
        config = read_config(args.config, config)
    overrides = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    return merge_config(config, overrides).validate()


def load_dataset(config: RunConfig) -> Dataset:
    if config.input:
        return load_ucr(config.input)
    return synth_example(
        config.synth_kind, config.synth_per_class, config.synth_noise, config.seed, config.synth_length
    )


def _output_dir(config: RunConfig) -> Pathy:
    out = path_or_cloudpath(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(content: Dict[str, Any], path: Pathy) -> None:
    with path.open("w") as f:
        json.dump(content, f, indent=2, sort_keys=True)


def _write_frame(df: pd.DataFrame, output: Optional[str]) -> None:
    if output is None:
        df.to_csv(sys.stdout, index=False, header=False)
    else:
        with path_or_cloudpath(output).open("w") as f:
            df.to_csv(f, index=False, header=False)


def _ray(config: RunConfig, direction: Optional[List[float]]) -> FiltrationCurve:
    return FiltrationCurve.ray(direction if direction else np.ones(config.N))


def run_synth(config: RunConfig, args) -> int:
    dataset = synth_example(
        config.synth_kind, config.synth_per_class, config.synth_noise, config.seed, config.synth_length
    )
    write_ucr(dataset, args.output)
    logger.info(f"wrote {len(dataset)} series to {args.output}")
    return EXIT_OK


def run_barcode(config: RunConfig, args) -> int:
    dataset = load_dataset(config)
    radii = batch_fourier_amplitudes(dataset.samples, config.modes)
    curve = _ray(config, args.direction)
    rows = []
    for i, r in enumerate(radii):
        barcode, origins = curve_barcode(r, curve, config.dimension)
        for bar, origin in zip(barcode, origins):
            composition = " ".join(str(c) for c in origin.composition)
            rows.append((bar.dimension, bar.birth, bar.death, composition, i))
    columns = ["dimension", "birth", "death", "composition", "series"]
    _write_frame(pd.DataFrame(rows, columns=columns), args.output)
    return EXIT_OK


def run_image(config: RunConfig, args) -> int:
    dataset = load_dataset(config)
    if not 0 <= args.row < len(dataset):
        raise InputError(f"row {args.row} outside 0..{len(dataset) - 1}")
    radii = batch_fourier_amplitudes(dataset.samples, config.modes)
    grid = make_grid(diagonal_barcodes(radii, config.dimension), config.resolution, config.bandwidth, config.c2)
    barcode, _ = curve_barcode(radii[args.row], _ray(config, args.direction), config.dimension)
    image = persistence_image(barcode, grid)
    _write_frame(pd.DataFrame(image.as_matrix()), args.output)
    return EXIT_OK


def run_train(config: RunConfig, args) -> int:
    dataset = load_dataset(config)
    out = _output_dir(config)
    if config.test_input:
        train_set, test_set = dataset, load_ucr(config.test_input, dataset.label_mapping)
    else:
        train_set, test_set = stratified_split(dataset, config.test_fraction, config.seed)
        write_ucr(test_set, out / "test.tsv")
    model, report = train(train_set, config.train_config(), test_set)

    write_config(config, out / "config.yml")
    save_checkpoint(model, out / "checkpoint.json")
    _write_json(report.metrics(), out / "metrics.json")
    _write_json(report.timings, out / "timings.json")
    with (out / "trajectory.csv").open("w") as f:
        report.trajectory_frame().to_csv(f, index=False)
    logger.info(f"wrote checkpoint, metrics and trajectory to {out}")
    return EXIT_OK


def run_eval(config: RunConfig, args) -> int:
    checkpoint = config.checkpoint or str(path_or_cloudpath(config.output_dir) / "checkpoint.json")
    model = load_checkpoint(checkpoint)
    source = config.test_input or config.input or str(path_or_cloudpath(config.output_dir) / "test.tsv")
    dataset = load_ucr(source, model.label_mapping or None)
    metrics = evaluate(model, dataset)
    out = _output_dir(config)
    _write_json(metrics, out / "eval_metrics.json")
    for name, value in metrics.items():
        print(f"{name}: {value:.4f}")
    return EXIT_OK


def run_crossval(config: RunConfig, args) -> int:
    dataset = load_dataset(config)
    result = crossval(dataset, config.train_config(), config.hyperparameter_grid())
    out = _output_dir(config)
    with (out / "crossval.csv").open("w") as f:
        result.table.to_csv(f, index=False)
    with (out / "crossval_folds.csv").open("w") as f:
        result.folds.to_csv(f, index=False)
    write_config(result.best_config, out / "best_config.yml")
    print(result.table.to_string(index=False))
    print(f"best: {json.dumps(result.best_params, sort_keys=True)}")
    return EXIT_OK


def run_bench(config: RunConfig, args) -> int:
    dataset = load_dataset(config)
    report = benchmark(dataset, config.train_config())
    out = _output_dir(config)
    _write_json(
        {
            "epochs": report.epochs,
            "samples": len(dataset),
            "modes": config.modes,
            "exact_seconds": report.exact_seconds,
            "numeric_seconds": report.numeric_seconds,
            "speedup": report.speedup,
            "first_step_relative_error": report.first_step_relative_error,
        },
        out / "bench.json",
    )
    print(f"exact: {report.exact_seconds:.2f}s, finite differences: {report.numeric_seconds:.2f}s")
    print(f"speedup: {report.speedup:.2f}x, first-step relative error {report.first_step_relative_error:.2e}")
    return EXIT_OK


def run_multipers_demo(args) -> int:
    fixture = load_fixture(args.fixture)
    image = two_param_persistence_image(fixture.summands, fixture.rays, fixture.grid)
    landscape = two_param_persistence_landscape(fixture, args.k)
    print("image:", " ".join(f"{v:.4f}" for v in image))
    print("landscape:", " ".join(f"{v:.4f}" for v in landscape))
    return EXIT_OK


COMMANDS = {
    "synth": run_synth,
    "barcode": run_barcode,
    "image": run_image,
    "train": run_train,
    "eval": run_eval,
    "crossval": run_crossval,
    "bench": run_bench,
}


def main(args: argparse.Namespace) -> int:
    set_loglevel(**vars(args))
    try:
        if args.command == "multipers-demo":
            return run_multipers_demo(args)
        config = build_config(args)
        return COMMANDS[args.command](config, args)
    except InputError as e:
        logger.error(str(e))
        return EXIT_INPUT
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_INPUT
    except InternalError as e:
        logger.error(f"internal error: {e}")
        logger.debug(traceback.format_exc())
        return EXIT_INTERNAL
    except Exception as e:
        logger.error(f"unexpected {type(e).__name__}: {e}")
        logger.debug(traceback.format_exc())
        return EXIT_INTERNAL


def run(argv: Optional[List[str]] = None) -> int:
    return main(make_argparser().parse_args(argv))
