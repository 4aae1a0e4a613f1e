"""
Desk-scale ablations.

weak_vs_synthetic
    (a) Full on synthetic only, (b) (a) fine-tuned Weak on real,
    (c) (a) fine-tuned Full on real; end-to-end F on held-out real scenes.
detection_ablation
    DetOnly against Full training; detection F on held-out synthetic scenes.
matching_ablation
    Full training with the recognition criterion off (linear head, RNN head)
    and on (RNN head); end-to-end F on held-out synthetic scenes.

Every arm is scored without a lexicon and, except for detection, with the
full lexicon of test transcriptions.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from domain import Alphabet, Scene, Supervision, decode_prediction
from evalkit import EvalProtocol, EvalReport, EvalTask, ScoredWord, evaluate, ground_truth_words
from spotcost import CostWeights
from spotloss import LossWeights
from toygym.model import ModelConfig, RecognitionHead, ToyModel, model_forward
from toygym.trainer import TrainConfig, TrainMode, train
from toygym.world import Domain, Split, WorldConfig, generate_dataset
from utils.errors import ArgumentError

PathLike = Union[str, Path]

LEXICON_NONE = "none"
LEXICON_FULL = "full"


class ExperimentName(str, Enum):
    WEAK_VS_SYNTHETIC = "weak_vs_synthetic"
    DETECTION_ABLATION = "detection_ablation"
    MATCHING_ABLATION = "matching_ablation"


class ExperimentConfig(BaseModel):
    """
    One structured config for every command. ``cost`` and ``loss`` override
    the weights inside ``train``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    world: WorldConfig = WorldConfig()
    train: TrainConfig = TrainConfig()
    cost: CostWeights = CostWeights()
    loss: LossWeights = LossWeights()
    d_emb: int = Field(32, ge=1)
    hidden: int = Field(32, ge=1)
    seeds: Tuple[int, ...] = (0, 1, 2)
    finetune_epochs: int = Field(20, ge=1)
    finetune_learning_rate: float = Field(0.001, ge=0.0)
    iou_threshold: float = Field(0.5, gt=0.0, le=1.0)
    score_threshold: float = Field(0.5, ge=0.0, le=1.0)
    output_dir: Path = Path("runs")

    @model_validator(mode="after")
    def check_seeds(self) -> "ExperimentConfig":
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        return self

    def train_config(
        self,
        seed: int,
        mode: TrainMode,
        epochs: Optional[int] = None,
        learning_rate: Optional[float] = None,
        **cost_overrides,
    ) -> TrainConfig:
        cost = self.cost.model_copy(update=cost_overrides) if cost_overrides else self.cost
        update = {"seed": seed, "mode": mode, "epochs": epochs or self.train.epochs, "cost": cost, "loss": self.loss}
        if learning_rate is not None:
            update["learning_rate"] = learning_rate
        return self.train.model_copy(update=update)

    def model_config_for(self, head: RecognitionHead = RecognitionHead.RNN) -> ModelConfig:
        return ModelConfig.for_world(self.world, d_emb=self.d_emb, hidden=self.hidden, recognition_head=head)

    def protocol(self, task: EvalTask, lexicon: Optional[Sequence[str]] = None) -> EvalProtocol:
        return EvalProtocol(
            task=task,
            iou_threshold=self.iou_threshold,
            lexicon=tuple(lexicon) if lexicon is not None else None,
            score_threshold=self.score_threshold,
        )


@dataclass(frozen=True)
class ArmResult:
    """One scored arm. Only deterministic fields, so reports compare byte for byte."""

    experiment: str
    arm: str
    seed: int
    task: str
    lexicon: str
    precision: float
    recall: float
    f_measure: float
    epochs: int
    final_loss: float


@dataclass(frozen=True)
class ArmTiming:
    experiment: str
    arm: str
    seed: int
    wall_seconds: float


@dataclass
class ExperimentReport:
    name: ExperimentName
    results: List[ArmResult] = field(default_factory=list)
    timings: List[ArmTiming] = field(default_factory=list)

    def f_measure(self, arm: str, seed: int, lexicon: str = LEXICON_NONE) -> float:
        for r in self.results:
            if r.arm == arm and r.seed == seed and r.lexicon == lexicon:
                return r.f_measure
        raise ArgumentError(f"No result for arm {arm!r}, seed {seed}, lexicon {lexicon!r}")

    def write(self, out_dir: PathLike) -> Dict[str, Path]:
        """report.jsonl and report.csv (deterministic) plus timings.csv (wall clock)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "jsonl": out_dir / "report.jsonl",
            "csv": out_dir / "report.csv",
            "timings": out_dir / "timings.csv",
        }
        with open(paths["jsonl"], "w", encoding="utf-8") as handle:
            for result in self.results:
                handle.write(json.dumps(asdict(result), sort_keys=True) + "\n")
        _write_csv(paths["csv"], [asdict(r) for r in self.results], list(ArmResult.__dataclass_fields__))
        _write_csv(paths["timings"], [asdict(t) for t in self.timings], list(ArmTiming.__dataclass_fields__))
        return paths


def _write_csv(path: Path, rows: List[dict], fieldnames: List[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def load_report(path: PathLike) -> List[ArmResult]:
    with open(path, "r", encoding="utf-8") as handle:
        return [ArmResult(**json.loads(line)) for line in handle if line.strip()]


def predict_words(model: ToyModel, scenes: Sequence[Scene], alphabet: Alphabet) -> Dict[str, List[ScoredWord]]:
    """Greedy-decoded predictions of every scene, keyed by scene id."""
    result = {}
    for scene in scenes:
        records = [decode_prediction(p, alphabet) for p in model_forward(model, scene)]
        result[scene.scene_id] = [ScoredWord(r.box, r.text, r.score_text) for r in records]
    return result


def score_model(
    model: ToyModel,
    scenes: Sequence[Scene],
    config: ExperimentConfig,
    task: EvalTask,
    lexicon: Optional[Sequence[str]] = None,
) -> EvalReport:
    alphabet = config.world.alphabet
    gts = {scene.scene_id: ground_truth_words(scene, alphabet) for scene in scenes}
    return evaluate(predict_words(model, scenes, alphabet), gts, config.protocol(task, lexicon))


def transcription_lexicon(scenes: Sequence[Scene], alphabet: Alphabet) -> List[str]:
    """Every distinct test transcription, in first-seen order."""
    words: Dict[str, None] = {}
    for scene in scenes:
        for inst in scene.words:
            words.setdefault(alphabet.decode(inst.transcription.indices), None)  # type: ignore[union-attr]
    return list(words)


class _ArmRunner:
    """Trains and scores the arms of one (experiment, seed) pair."""

    def __init__(self, name: ExperimentName, config: ExperimentConfig, seed: int):
        self.name = name
        self.config = config
        self.seed = seed
        self.results: List[ArmResult] = []
        self.timings: List[ArmTiming] = []

    def data(self, domain: Domain, split: Split, supervision: Supervision = Supervision.FULL) -> List[Scene]:
        world = self.config.world
        count = world.train_scenes if split == Split.TRAIN else world.test_scenes
        return generate_dataset(world, count, self.seed, domain, supervision, split)

    def fit(
        self, arm: str, model: ToyModel, scenes: Sequence[Scene], tc: TrainConfig
    ) -> Tuple[ToyModel, float, float]:
        start = time.perf_counter()
        result = train(model, scenes, tc)
        elapsed = time.perf_counter() - start
        logger.info(f"{self.name.value} seed={self.seed} arm={arm}: trained {tc.epochs} epochs in {elapsed:.1f}s")
        return result.model, result.history[-1], elapsed

    def score(
        self,
        arm: str,
        model: ToyModel,
        test: Sequence[Scene],
        task: EvalTask,
        epochs: int,
        final_loss: float,
        elapsed: float,
    ) -> None:
        lexicons: List[Tuple[str, Optional[List[str]]]] = [(LEXICON_NONE, None)]
        if task != EvalTask.DETECTION:
            lexicons.append((LEXICON_FULL, transcription_lexicon(test, self.config.world.alphabet)))
        for label, lexicon in lexicons:
            report = score_model(model, test, self.config, task, lexicon)
            self.results.append(
                ArmResult(
                    experiment=self.name.value,
                    arm=arm,
                    seed=self.seed,
                    task=task.value,
                    lexicon=label,
                    precision=report.precision,
                    recall=report.recall,
                    f_measure=report.f_measure,
                    epochs=epochs,
                    final_loss=final_loss,
                )
            )
            logger.info(f"{self.name.value} seed={self.seed} arm={arm} lexicon={label}: F={report.f_measure:.3f}")
        self.timings.append(ArmTiming(self.name.value, arm, self.seed, elapsed))

    def weak_vs_synthetic(self) -> None:
        cfg = self.config
        synthetic = self.data(Domain.SYNTHETIC, Split.TRAIN)
        real_full = self.data(Domain.REAL, Split.TRAIN)
        real_weak = self.data(Domain.REAL, Split.TRAIN, Supervision.WEAK)
        real_test = self.data(Domain.REAL, Split.TEST)
        init = ToyModel.initialize(cfg.model_config_for(), self.seed)

        base, loss, elapsed = self.fit("synthetic", init, synthetic, cfg.train_config(self.seed, TrainMode.FULL))
        self.score("synthetic", base, real_test, EvalTask.END_TO_END, cfg.train.epochs, loss, elapsed)

        epochs = cfg.train.epochs + cfg.finetune_epochs
        weak_tc = cfg.train_config(self.seed, TrainMode.WEAK, cfg.finetune_epochs, cfg.finetune_learning_rate)
        weak, loss, tuned = self.fit("weak", base, real_weak, weak_tc)
        self.score("weak", weak, real_test, EvalTask.END_TO_END, epochs, loss, elapsed + tuned)

        box_tc = cfg.train_config(self.seed, TrainMode.FULL, cfg.finetune_epochs, cfg.finetune_learning_rate)
        boxed, loss, tuned = self.fit("box", base, real_full, box_tc)
        self.score("box", boxed, real_test, EvalTask.END_TO_END, epochs, loss, elapsed + tuned)

    def detection_ablation(self) -> None:
        cfg = self.config
        train_set = self.data(Domain.SYNTHETIC, Split.TRAIN)
        test_set = self.data(Domain.SYNTHETIC, Split.TEST)
        init = ToyModel.initialize(cfg.model_config_for(), self.seed)
        for arm, mode in (("det", TrainMode.DET_ONLY), ("det_rec", TrainMode.FULL)):
            model, loss, elapsed = self.fit(arm, init, train_set, cfg.train_config(self.seed, mode))
            self.score(arm, model, test_set, EvalTask.DETECTION, cfg.train.epochs, loss, elapsed)

    def matching_ablation(self) -> None:
        cfg = self.config
        train_set = self.data(Domain.SYNTHETIC, Split.TRAIN)
        test_set = self.data(Domain.SYNTHETIC, Split.TEST)
        arms = (
            ("detcls_linear", RecognitionHead.LINEAR, 0.0),
            ("detcls_rnn", RecognitionHead.RNN, 0.0),
            ("detcls_rec_rnn", RecognitionHead.RNN, cfg.cost.alpha_rec),
        )
        for arm, head, alpha_rec in arms:
            init = ToyModel.initialize(cfg.model_config_for(head), self.seed)
            tc = cfg.train_config(self.seed, TrainMode.FULL, alpha_rec=alpha_rec)
            model, loss, elapsed = self.fit(arm, init, train_set, tc)
            self.score(arm, model, test_set, EvalTask.END_TO_END, cfg.train.epochs, loss, elapsed)


def _run_seed(name: ExperimentName, config: ExperimentConfig, seed: int) -> Tuple[List[ArmResult], List[ArmTiming]]:
    runner = _ArmRunner(name, config, seed)
    getattr(runner, name.value)()
    return runner.results, runner.timings


def run_experiment(
    name: Union[str, ExperimentName], config: ExperimentConfig, max_workers: int = 1
) -> ExperimentReport:
    """
    Run every arm of an experiment for every configured seed.

    Args:
        name: weak_vs_synthetic, detection_ablation or matching_ablation
        config: World, training and evaluation settings plus the seeds
        max_workers: Seeds run in separate processes when > 1; results stay in seed order

    Returns:
        ExperimentReport: One record per (arm, seed, lexicon)

    Raises:
        ArgumentError: Unknown experiment name
    """
    try:
        experiment = ExperimentName(name)
    except ValueError as e:
        choices = ", ".join(n.value for n in ExperimentName)
        raise ArgumentError(f"Unknown experiment {name!r}; choose one of {choices}") from e
    if max_workers < 1:
        raise ArgumentError(f"max_workers must be >= 1, got {max_workers}")

    logger.info(f"Running {experiment.value} over seeds {list(config.seeds)}")
    report = ExperimentReport(experiment)
    if max_workers == 1 or len(config.seeds) == 1:
        outcomes = [_run_seed(experiment, config, seed) for seed in config.seeds]
    else:
        with ProcessPoolExecutor(max_workers=min(max_workers, len(config.seeds))) as executor:
            outcomes = list(executor.map(_run_seed, *zip(*[(experiment, config, s) for s in config.seeds])))
    for results, timings in outcomes:
        report.results.extend(results)
        report.timings.extend(timings)
    return report
