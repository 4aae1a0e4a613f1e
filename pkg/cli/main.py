"""
spotmatch command line.

Exit codes: 0 success, 1 runtime failure, 2 usage, config or input error.
"""

from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import typer
from loguru import logger
from pydantic import ValidationError as PydanticValidationError

from cli.config import apply_overrides, describe_validation_error, dump_experiment_config, load_experiment_config
from domain import (
    Alphabet,
    Prediction,
    Scene,
    Supervision,
    check_logit_width,
    parse_dataset,
    parse_predictions,
    parse_raw_predictions,
    write_dataset,
)
from evalkit import EvalProtocol, EvalTask, evaluate, ground_truth_words, load_lexicon, prediction_words
from spotcost import MatchMode, match_predictions
from spotloss import hungarian_loss
from toygym import (
    Domain,
    ExperimentConfig,
    ExperimentName,
    RecognitionHead,
    ToyModel,
    TrainMode,
    generate_dataset,
    load_model,
    load_report,
    predict_words,
    run_experiment,
    save_model,
    train,
)
from utils.errors import ArgumentError, ParseError, ValidationError
from utils.log import configure_logging
from utils.settings import runtime_settings

USAGE_EXIT = 2
RUNTIME_EXIT = 1

USAGE_ERRORS = (ArgumentError, ValidationError, ParseError, PydanticValidationError, OSError)

app = typer.Typer(name="spotmatch", help="Text Hungarian matching, loss and toy experiments.", no_args_is_help=True)


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, help="Log level; defaults to SPOTMATCH_LOG_LEVEL")):
    configure_logging(log_level)


@contextmanager
def exit_codes() -> Iterator[None]:
    try:
        yield
    except typer.Exit:
        raise
    except USAGE_ERRORS as e:
        message = describe_validation_error(e) if isinstance(e, PydanticValidationError) else str(e)
        typer.echo(f"error: {message}", err=True)
        raise typer.Exit(code=USAGE_EXIT) from e
    except Exception as e:
        logger.exception(e)
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=RUNTIME_EXIT) from e


def _alphabet(config: ExperimentConfig, symbols: Optional[str]) -> Alphabet:
    return Alphabet.from_string(symbols) if symbols else config.world.alphabet


def _max_word_len(config: ExperimentConfig, symbols: Optional[str]) -> int:
    # a custom alphabet comes with arbitrary files; only the world's bound applies to world data
    return 64 if symbols else config.world.max_word_len


def _paired(
    predictions: Sequence[Tuple[str, List[Prediction]]], scenes: Sequence[Scene], alphabet: Alphabet
) -> Iterator[Tuple[Scene, List[Prediction]]]:
    by_id = {scene.scene_id: scene for scene in scenes}
    for scene_id, preds in predictions:
        if scene_id not in by_id:
            raise ValidationError(f"Predictions for scene {scene_id!r} have no ground truth")
        for pred in preds:
            try:
                check_logit_width(pred.char_logits, alphabet)
            except ValidationError as e:
                raise ValidationError(f"scene {scene_id!r}: {e}") from e
        yield by_id[scene_id], preds


def _format_row(values: np.ndarray) -> str:
    return " ".join(f"{v:9.4f}" for v in values)


@app.command()
def gen(
    config_path: Optional[Path] = typer.Option(None, "--config", help="Experiment config (YAML)"),
    out: Optional[Path] = typer.Option(None, help="Output directory"),
    seed: Optional[int] = typer.Option(None, help="Dataset seed; defaults to the first config seed"),
    count: Optional[int] = typer.Option(None, help="Scenes per file; defaults to world.train_scenes"),
    noise: Optional[float] = typer.Option(None, help="Override world.noise"),
):
    """Write synthetic and real datasets, each with full and weak supervision."""
    with exit_codes():
        config = apply_overrides(
            load_experiment_config(config_path), {"world.noise": noise, "world.train_scenes": count}
        )
        out_dir = out or runtime_settings.output_dir / "data"
        seed = config.seeds[0] if seed is None else seed
        alphabet = config.world.alphabet
        for domain in Domain:
            for supervision in Supervision:
                scenes = generate_dataset(config.world, config.world.train_scenes, seed, domain, supervision)
                path = write_dataset(scenes, alphabet, out_dir / f"{domain.value}_{supervision.value}.jsonl")
                typer.echo(f"{path} {len(scenes)} scenes")


@app.command()
def match(
    preds: Path = typer.Option(..., help="Raw predictions (class logits, boxes, char logits)"),
    gt: Path = typer.Option(..., help="Ground-truth scenes"),
    mode: MatchMode = typer.Option(MatchMode.FULL, help="Matching criteria"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Config holding the cost weights"),
    alphabet_symbols: Optional[str] = typer.Option(None, "--alphabet", help="Alphabet symbols"),
):
    """Print the cost matrix, the optimal assignment and its per-pair breakdown."""
    with exit_codes():
        config = load_experiment_config(config_path)
        alphabet = _alphabet(config, alphabet_symbols)
        scenes = parse_dataset(gt, alphabet, _max_word_len(config, alphabet_symbols))
        for scene, scene_preds in _paired(parse_raw_predictions(preds), scenes, alphabet):
            costs, result = match_predictions(scene_preds, scene.ground_truth, config.cost, mode)
            typer.echo(f"scene {scene.scene_id} mode={mode.value} gt={costs.shape[0]} preds={costs.shape[1]}")
            for row in costs.values:
                typer.echo("  " + _format_row(row))
            typer.echo(f"  assignment {list(result.assignment)} total {result.total_cost:.6f}")
            for pair in result.pairs:
                typer.echo(
                    f"  gt {pair.row} -> pred {pair.col}: cost {pair.cost:.6f} "
                    f"(cls {pair.classification:.6f}, box {pair.box:.6f}, rec {pair.recognition:.6f})"
                )


@app.command()
def loss(
    preds: Path = typer.Option(..., help="Raw predictions (class logits, boxes, char logits)"),
    gt: Path = typer.Option(..., help="Ground-truth scenes"),
    mode: MatchMode = typer.Option(MatchMode.FULL, help="Matching criteria and loss terms"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Config holding cost and loss weights"),
    alphabet_symbols: Optional[str] = typer.Option(None, "--alphabet", help="Alphabet symbols"),
):
    """Print the Text Hungarian Loss breakdown of every scene."""
    with exit_codes():
        config = load_experiment_config(config_path)
        alphabet = _alphabet(config, alphabet_symbols)
        scenes = parse_dataset(gt, alphabet, _max_word_len(config, alphabet_symbols))
        total = 0.0
        for scene, scene_preds in _paired(parse_raw_predictions(preds), scenes, alphabet):
            b = hungarian_loss(scene_preds, scene.ground_truth, config.cost, config.loss, mode)
            total += b.total
            typer.echo(
                f"scene {scene.scene_id}: total {b.total:.6f} cls {b.classification:.6f} "
                f"l1 {b.box_l1:.6f} giou {b.box_giou:.6f} rec {b.recognition:.6f} "
                f"assignment {list(b.matching.assignment)}"
            )
        typer.echo(f"total {total:.6f}")


@app.command("train")
def train_command(
    data: Path = typer.Option(..., help="Training scenes"),
    out: Path = typer.Option(..., help="Checkpoint to write"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Experiment config (YAML)"),
    init: Optional[Path] = typer.Option(None, help="Checkpoint to start from; a seeded init otherwise"),
    mode: Optional[TrainMode] = typer.Option(None, help="Override train.mode"),
    epochs: Optional[int] = typer.Option(None, help="Override train.epochs"),
    lr: Optional[float] = typer.Option(None, help="Override train.learning_rate"),
    seed: Optional[int] = typer.Option(None, help="Override train.seed"),
    head: RecognitionHead = typer.Option(RecognitionHead.RNN, help="Recognition head of a fresh model"),
):
    """Train the toy model and write a checkpoint."""
    with exit_codes():
        config = apply_overrides(
            load_experiment_config(config_path),
            {"train.mode": mode, "train.epochs": epochs, "train.learning_rate": lr, "train.seed": seed},
        )
        tc = config.train.model_copy(update={"cost": config.cost, "loss": config.loss})
        scenes = parse_dataset(data, config.world.alphabet, config.world.max_word_len)
        model = load_model(init) if init else ToyModel.initialize(config.model_config_for(head), tc.seed)
        result = train(model, scenes, tc)
        for epoch, value in enumerate(result.history, start=1):
            typer.echo(f"epoch {epoch} loss {value:.6f}")
        typer.echo(f"checkpoint {save_model(result.model, out)}")


@app.command("eval")
def eval_command(
    gt: Path = typer.Option(..., help="Ground-truth scenes"),
    preds: Optional[Path] = typer.Option(None, help="Decoded predictions, or a scene file"),
    model: Optional[Path] = typer.Option(None, help="Checkpoint to run on the ground-truth scenes"),
    task: EvalTask = typer.Option(EvalTask.END_TO_END, help="Evaluation task"),
    iou: float = typer.Option(0.5, help="IoU threshold"),
    lexicon: Optional[Path] = typer.Option(None, help="Lexicon file, one word per line"),
    score_threshold: float = typer.Option(0.5, help="Minimum text probability of a prediction"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Experiment config (YAML)"),
    alphabet_symbols: Optional[str] = typer.Option(None, "--alphabet", help="Alphabet symbols"),
):
    """Score predictions against ground truth; prints P, R and F."""
    with exit_codes():
        if (preds is None) == (model is None):
            raise ArgumentError("Pass exactly one of --preds or --model")
        config = load_experiment_config(config_path)
        alphabet = _alphabet(config, alphabet_symbols)
        scenes = parse_dataset(gt, alphabet, _max_word_len(config, alphabet_symbols))
        protocol = EvalProtocol(
            task=task,
            iou_threshold=iou,
            lexicon=tuple(load_lexicon(lexicon)) if lexicon else None,
            score_threshold=score_threshold,
        )
        gts = {scene.scene_id: ground_truth_words(scene, alphabet) for scene in scenes}
        if model is not None:
            predicted = predict_words(load_model(model), scenes, alphabet)
        else:
            predicted = {}
            for scene_id, records in parse_predictions(preds, alphabet):  # type: ignore[arg-type]
                predicted.setdefault(scene_id, []).extend(prediction_words(records))
        report = evaluate(predicted, gts, protocol)
        typer.echo(f"task {task.value} iou {iou:.2f}")
        typer.echo(f"P {report.precision:.3f} R {report.recall:.3f} F {report.f_measure:.3f}")


@app.command()
def experiment(
    name: ExperimentName = typer.Option(..., help="Experiment to run"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Experiment config (YAML)"),
    out: Optional[Path] = typer.Option(None, help="Report directory; defaults to output_dir/<name>"),
    workers: Optional[int] = typer.Option(None, help="Parallel seeds; defaults to SPOTMATCH_MAX_WORKERS"),
    epochs: Optional[int] = typer.Option(None, help="Override train.epochs"),
    seed: Optional[List[int]] = typer.Option(None, help="Override the seeds (repeatable)"),
):
    """Run an ablation and write report.jsonl, report.csv, timings.csv and the resolved config.yaml."""
    with exit_codes():
        config = apply_overrides(
            load_experiment_config(config_path), {"train.epochs": epochs, "seeds": list(seed) if seed else None}
        )
        report = run_experiment(name, config, workers or runtime_settings.max_workers)
        out_dir = out or config.output_dir / name.value
        paths = report.write(out_dir)
        dump_experiment_config(config, out_dir / "config.yaml")
        _print_table([asdict(r) for r in report.results])
        typer.echo(f"report {paths['jsonl']}")


@app.command()
def report(path: Path = typer.Argument(..., help="A report.jsonl written by the experiment command")):
    """Render a saved experiment report as a text table."""
    with exit_codes():
        _print_table([asdict(r) for r in load_report(path)])


def _print_table(rows: Sequence[Dict[str, object]]) -> None:
    typer.echo(f"{'experiment':<20} {'arm':<16} {'seed':>4} {'lexicon':<7} {'P':>6} {'R':>6} {'F':>6} {'epochs':>6}")
    for row in rows:
        typer.echo(
            f"{row['experiment']:<20} {row['arm']:<16} {row['seed']:>4} {row['lexicon']:<7} "
            f"{row['precision']:>6.3f} {row['recall']:>6.3f} {row['f_measure']:>6.3f} {row['epochs']:>6}"
        )


if __name__ == "__main__":
    app()
