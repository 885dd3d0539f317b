"""Experiment orchestration over CSV or synthetic datasets.

Reproduces the evaluation protocols at configurable scale: disjoint
four-subset sampling with 50/50 member splits, threshold attacks under
optimal and shadow calibration, the overfitting sweep, the reduced-scale
perturbation-method comparison, and reconstruction campaigns. A master seed
fans out through named, indexed children so that repetitions can run in a
thread pool without perturbing any result; emitted CSVs are byte-stable
across reruns and thread counts (wall times go to the manifest only).
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import re
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from .attacks import (
    AttackStatistic,
    ThresholdRule,
    aggregate_shadow_taus,
    optimal_threshold,
    statistic_values,
)
from .data import Dataset, load_csv_dataset
from .graph import build_influence_graph, greedy_omniscient_baseline, scc_metrics, traverse_attack
from .influence import build_loo_cache, group_reveal_rates, self_reveal_rate
from .models import LayerSpec, TrainConfig, init_model, train, train_logistic
from .reconstruct import (
    InfluenceOracle,
    MarginalSampler,
    TrueDistributionSampler,
    UniformSampler,
    algorithm1_reconstruct,
    baseline_attack,
    reconstruction_query_budget,
)
from .synth import SynthConfig, generate_synthetic


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI maps this to exit code 1)."""


def child_seed(master: int, tag: str, *indices: int) -> int:
    """Deterministic seed for the (tag, indices) role under a master seed.

    The index count is folded into the entropy because SeedSequence ignores
    trailing zero words, which would otherwise alias (0,) with (0, 0).
    """
    entropy = [int(master) & 0xFFFFFFFF, zlib.crc32(tag.encode("utf-8")), len(indices)]
    entropy.extend(int(i) for i in indices)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


_SHADOW_RE = re.compile(r"^shadow\((\d+)\)$")


def parse_calibration(text: str) -> tuple[str, int | None]:
    """'optimal' -> ('optimal', None); 'shadow(s)' -> ('shadow', s)."""
    if text == "optimal":
        return "optimal", None
    match = _SHADOW_RE.match(text)
    if match:
        s = int(match.group(1))
        if s < 1:
            raise ConfigError("shadow calibration needs at least one shadow")
        return "shadow", s
    raise ConfigError(f"unknown calibration {text!r}; use 'optimal' or 'shadow(s)'")


def _statistic_from_dict(payload: dict) -> AttackStatistic:
    allowed = {"kind", "method", "params", "use_l1"}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown statistic keys: {sorted(unknown)}")
    try:
        return AttackStatistic(
            kind=payload["kind"],
            method=payload.get("method"),
            params=payload.get("params", {}),
            use_l1=payload.get("use_l1", False),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad statistic {payload!r}: {exc}") from exc


def _statistic_to_dict(stat: AttackStatistic) -> dict:
    return {
        "kind": stat.kind,
        "method": stat.method,
        "params": dict(stat.params),
        "use_l1": stat.use_l1,
    }


@dataclass
class ExperimentConfig:
    """One threshold-attack experiment: data source, target, attacks, scale."""

    dataset_csv: str | None = None
    label_column: str = "label"
    group_column: str | None = None
    synth: SynthConfig | None = None
    hidden: tuple[int, ...] = (50, 50)
    activation: str = "tanh"
    model_kind: str = "mlp"
    train: TrainConfig = field(default_factory=TrainConfig)
    statistics: list[AttackStatistic] = field(
        default_factory=lambda: [AttackStatistic("expl_var", "gradient")]
    )
    calibrations: list[str] = field(default_factory=lambda: ["optimal"])
    repetitions: int = 1
    subsets_per_repetition: int = 4
    points_per_subset: int | None = None
    resample: bool = False
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if (self.dataset_csv is None) == (self.synth is None):
            raise ConfigError("exactly one of dataset_csv / synth must be set")
        if self.model_kind not in ("mlp", "logistic"):
            raise ConfigError("model_kind must be 'mlp' or 'logistic'")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.subsets_per_repetition < 1:
            raise ConfigError("subsets_per_repetition must be >= 1")
        if self.points_per_subset is not None:
            if self.points_per_subset < 2 or self.points_per_subset % 2:
                raise ConfigError("points_per_subset must be even and >= 2")
        if not self.statistics:
            raise ConfigError("at least one attack statistic is required")
        if not self.calibrations:
            raise ConfigError("at least one calibration mode is required")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        for cal in self.calibrations:
            kind, s = parse_calibration(cal)
            if kind == "shadow" and s >= self.subsets_per_repetition:
                raise ConfigError(
                    f"shadow({s}) needs more than {s} subsets per repetition"
                )

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        payload = dict(payload)
        known = {
            "dataset_csv",
            "label_column",
            "group_column",
            "synth",
            "hidden",
            "activation",
            "model_kind",
            "train",
            "statistics",
            "calibrations",
            "repetitions",
            "subsets_per_repetition",
            "points_per_subset",
            "resample",
            "seed",
            "threads",
        }
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if payload.get("synth") is not None:
                payload["synth"] = SynthConfig.from_dict(payload["synth"])
            if payload.get("train") is not None:
                payload["train"] = TrainConfig.from_dict(payload["train"])
            if payload.get("hidden") is not None:
                payload["hidden"] = tuple(int(w) for w in payload["hidden"])
            if payload.get("statistics") is not None:
                payload["statistics"] = [
                    _statistic_from_dict(s) for s in payload["statistics"]
                ]
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        try:
            return cls(**payload)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "dataset_csv": self.dataset_csv,
            "label_column": self.label_column,
            "group_column": self.group_column,
            "synth": self.synth.to_dict() if self.synth else None,
            "hidden": list(self.hidden),
            "activation": self.activation,
            "model_kind": self.model_kind,
            "train": self.train.to_dict(),
            "statistics": [_statistic_to_dict(s) for s in self.statistics],
            "calibrations": list(self.calibrations),
            "repetitions": self.repetitions,
            "subsets_per_repetition": self.subsets_per_repetition,
            "points_per_subset": self.points_per_subset,
            "resample": self.resample,
            "seed": self.seed,
            "threads": self.threads,
        }


def load_experiment_dataset(cfg) -> Dataset:
    if getattr(cfg, "dataset_csv", None) is not None:
        return load_csv_dataset(cfg.dataset_csv, cfg.label_column, cfg.group_column)
    return generate_synthetic(cfg.synth)


# ---------------------------------------------------------------------------
# Sampling protocol
# ---------------------------------------------------------------------------


@dataclass
class TargetSplit:
    """Absolute dataset indices of one target's members and non-members."""

    train: np.ndarray
    test: np.ndarray

    @property
    def all_indices(self) -> np.ndarray:
        return np.concatenate([self.train, self.test])


def sampling_protocol(
    dataset: Dataset,
    n_subsets: int = 4,
    subset_size: int | None = None,
    resample: bool = False,
    seed: int = 0,
) -> list[TargetSplit]:
    """Seeded subsets split 50/50 into member (train) and non-member halves.

    Subsets are pairwise disjoint unless ``resample`` allows them to be
    drawn independently (each subset is still duplicate-free internally).
    """
    if subset_size is None:
        subset_size = (dataset.n_points // n_subsets) // 2 * 2
    if subset_size < 2 or subset_size % 2:
        raise ConfigError("subset size must be even and >= 2")
    rng = np.random.default_rng(seed)
    chunks: list[np.ndarray] = []
    if resample:
        for _ in range(n_subsets):
            chunks.append(rng.choice(dataset.n_points, size=subset_size, replace=False))
    else:
        if n_subsets * subset_size > dataset.n_points:
            raise ConfigError(
                f"{n_subsets} disjoint subsets of {subset_size} need "
                f"{n_subsets * subset_size} points but only {dataset.n_points} "
                "are available (set resample=true to allow overlap)"
            )
        order = rng.permutation(dataset.n_points)
        for i in range(n_subsets):
            chunks.append(order[i * subset_size : (i + 1) * subset_size])
    half = subset_size // 2
    return [TargetSplit(train=c[:half], test=c[half:]) for c in chunks]


def validate_protocol(
    splits: list[TargetSplit], n_points: int, resample: bool
) -> dict:
    """Audit disjointness, balance, and index sanity of emitted partitions."""
    seen: set[int] = set()
    for i, split in enumerate(splits):
        combined = split.all_indices
        if len(split.train) != len(split.test):
            raise RuntimeError(f"subset {i} is not split 50/50")
        if combined.min() < 0 or combined.max() >= n_points:
            raise RuntimeError(f"subset {i} has out-of-range indices")
        if len(np.unique(combined)) != len(combined):
            raise RuntimeError(f"subset {i} contains duplicate indices")
        if not resample:
            overlap = seen.intersection(combined.tolist())
            if overlap:
                raise RuntimeError(f"subset {i} overlaps earlier subsets: {sorted(overlap)[:5]}")
            seen.update(combined.tolist())
    return {
        "n_subsets": len(splits),
        "subset_size": int(len(splits[0].all_indices)) if splits else 0,
        "disjoint": not resample,
        "balanced": True,
    }


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


RECORD_CSV_COLUMNS = (
    "run_id",
    "repetition",
    "target",
    "statistic",
    "calibration",
    "tau",
    "attack_accuracy",
    "train_accuracy",
    "test_accuracy",
    "epochs",
)

DECISION_CSV_COLUMNS = ("run_id", "point_index", "value", "decision", "member")


@dataclass
class RunRecord:
    run_id: str
    repetition: int
    target: int
    statistic: str
    calibration: str
    tau: float
    attack_accuracy: float
    train_accuracy: float
    test_accuracy: float
    epochs: int
    wall_time: float = 0.0  # manifest-only; never written to result CSVs

    def __post_init__(self) -> None:
        for name in ("attack_accuracy", "train_accuracy", "test_accuracy"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def csv_row(self) -> list:
        return [getattr(self, col) for col in RECORD_CSV_COLUMNS]


@dataclass
class ExperimentResult:
    name: str
    records: list[RunRecord]
    decisions: list[tuple]
    warnings: list[str]
    timings: dict
    config: dict
    audits: list[dict] = field(default_factory=list)

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        records_path = out / f"{self.name}_records.csv"
        decisions_path = out / f"{self.name}_decisions.csv"
        manifest_path = out / f"{self.name}_manifest.json"
        write_records_csv(records_path, self.records)
        write_decisions_csv(decisions_path, self.decisions)
        write_manifest(
            manifest_path,
            self.config,
            self.config.get("seed", 0),
            self.timings,
            extra={"warnings": self.warnings, "audits": self.audits},
        )
        return {
            "records": records_path,
            "decisions": decisions_path,
            "manifest": manifest_path,
        }


# ---------------------------------------------------------------------------
# Threshold experiment
# ---------------------------------------------------------------------------


def _train_target(dataset: Dataset, split: TargetSplit, cfg: ExperimentConfig, seed: int):
    train_set = dataset.subset(split.train)
    train_cfg = replace(cfg.train, seed=seed)
    if cfg.model_kind == "logistic":
        return train_logistic(train_set, train_cfg)
    layers = [LayerSpec(w, cfg.activation) for w in cfg.hidden]
    layers.append(LayerSpec(int(dataset.n_classes), "identity"))
    model = init_model(layers, dataset.n_features, seed=seed)
    return train(model, train_set, train_cfg)


@dataclass
class _RepetitionOutput:
    records: list[RunRecord]
    decisions: list[tuple]
    warnings: list[str]
    audit: dict
    elapsed: float


def _run_repetition(
    dataset: Dataset, cfg: ExperimentConfig, rep: int, prefix: str
) -> _RepetitionOutput:
    rep_start = time.perf_counter()
    records: list[RunRecord] = []
    decisions: list[tuple] = []
    warnings: list[str] = []

    splits = sampling_protocol(
        dataset,
        cfg.subsets_per_repetition,
        cfg.points_per_subset,
        cfg.resample,
        child_seed(cfg.seed, "protocol", rep),
    )
    audit = validate_protocol(splits, dataset.n_points, cfg.resample)

    models: list = []
    model_accs: list[tuple[float, float]] = []
    for t, split in enumerate(splits):
        try:
            model = _train_target(dataset, split, cfg, child_seed(cfg.seed, "target", rep, t))
            models.append(model)
            model_accs.append(
                (
                    model.accuracy(dataset.features[split.train], dataset.labels[split.train]),
                    model.accuracy(dataset.features[split.test], dataset.labels[split.test]),
                )
            )
        except Exception as exc:  # keep the experiment alive, log the failure
            models.append(None)
            model_accs.append((float("nan"), float("nan")))
            warnings.append(f"rep {rep} target {t}: training failed: {exc}")

    cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def stat_values_for(t: int, si: int) -> tuple[np.ndarray, np.ndarray]:
        key = (t, si)
        if key not in cache:
            stat = cfg.statistics[si]
            split = splits[t]
            cache[key] = (
                statistic_values(stat, models[t], dataset.features[split.train], dataset.labels[split.train]),
                statistic_values(stat, models[t], dataset.features[split.test], dataset.labels[split.test]),
            )
        return cache[key]

    for t, split in enumerate(splits):
        if models[t] is None:
            continue
        for si, stat in enumerate(cfg.statistics):
            try:
                member_vals, nonmember_vals = stat_values_for(t, si)
            except Exception as exc:
                warnings.append(f"rep {rep} target {t} stat {stat.label}: {exc}")
                continue
            for ci, calibration in enumerate(cfg.calibrations):
                eval_start = time.perf_counter()
                kind, s = parse_calibration(calibration)
                try:
                    if kind == "optimal":
                        tau, _ = optimal_threshold(member_vals, nonmember_vals, stat.member_if)
                    else:
                        shadow_ids = [u for u in range(len(splits)) if u != t][:s]
                        taus = []
                        for sh in shadow_ids:
                            if models[sh] is None:
                                raise RuntimeError(f"shadow model {sh} unavailable")
                            shadow_member, shadow_nonmember = stat_values_for(sh, si)
                            taus.append(
                                optimal_threshold(shadow_member, shadow_nonmember, stat.member_if)[0]
                            )
                        tau = aggregate_shadow_taus(taus, s)
                except Exception as exc:
                    warnings.append(
                        f"rep {rep} target {t} stat {stat.label} {calibration}: {exc}"
                    )
                    continue
                rule = ThresholdRule(stat, tau)
                values = np.concatenate([member_vals, nonmember_vals])
                truth = np.concatenate(
                    [np.ones(len(member_vals), bool), np.zeros(len(nonmember_vals), bool)]
                )
                guesses = rule.decide(values)
                accuracy = float(np.mean(guesses == truth))
                run_id = f"{prefix}r{rep}-t{t}-s{si}-c{ci}"
                records.append(
                    RunRecord(
                        run_id=run_id,
                        repetition=rep,
                        target=t,
                        statistic=stat.label,
                        calibration=calibration,
                        tau=tau,
                        attack_accuracy=accuracy,
                        train_accuracy=model_accs[t][0],
                        test_accuracy=model_accs[t][1],
                        epochs=cfg.train.epochs,
                        wall_time=time.perf_counter() - eval_start,
                    )
                )
                for point, value, guess, member in zip(
                    split.all_indices, values, guesses, truth
                ):
                    decisions.append(
                        (run_id, int(point), float(value), int(guess), int(member))
                    )
    return _RepetitionOutput(
        records, decisions, warnings, audit, time.perf_counter() - rep_start
    )


def run_threshold_experiment(
    cfg: ExperimentConfig,
    dataset: Dataset | None = None,
    run_prefix: str = "",
    name: str = "threshold",
) -> ExperimentResult:
    """Train targets per repetition and attack each with every statistic.

    Per repetition: sample subsets, train one target per subset, compute
    each statistic once per (target, statistic), then calibrate and score
    every configured attack. Shadow calibration for target t averages the
    optimal thresholds of the first s sibling models in index order, each
    computed on that sibling's own member/non-member halves.
    """
    if dataset is None:
        dataset = load_experiment_dataset(cfg)
    reps = list(range(cfg.repetitions))
    if cfg.threads > 1 and len(reps) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [
                pool.submit(_run_repetition, dataset, cfg, rep, run_prefix)
                for rep in reps
            ]
            outputs = [f.result() for f in futures]
    else:
        outputs = [_run_repetition(dataset, cfg, rep, run_prefix) for rep in reps]
    records = [record for out in outputs for record in out.records]
    decisions = [row for out in outputs for row in out.decisions]
    warnings = [w for out in outputs for w in out.warnings]
    timings = {
        "repetition_seconds": [out.elapsed for out in outputs],
        "total_seconds": sum(out.elapsed for out in outputs),
    }
    return ExperimentResult(
        name=name,
        records=records,
        decisions=decisions,
        warnings=warnings,
        timings=timings,
        config=cfg.to_dict(),
        audits=[out.audit for out in outputs],
    )


def run_overfit_sweep(
    cfg: ExperimentConfig, epoch_grid: list[int], dataset: Dataset | None = None
) -> ExperimentResult:
    """Re-run the optimal-calibration attack at each epoch budget.

    The sampling protocol and model initializations derive from seeds that
    do not involve the epoch count, so every grid entry retrains the same
    targets on the same subsets and only the training length varies.
    """
    if not epoch_grid:
        raise ConfigError("epoch grid must be non-empty")
    if dataset is None:
        dataset = load_experiment_dataset(cfg)
    records: list[RunRecord] = []
    decisions: list[tuple] = []
    warnings: list[str] = []
    audits: list[dict] = []
    timings: dict = {}
    for epochs in epoch_grid:
        sub_cfg = replace(
            cfg, train=replace(cfg.train, epochs=int(epochs)), calibrations=["optimal"]
        )
        result = run_threshold_experiment(
            sub_cfg, dataset=dataset, run_prefix=f"e{int(epochs)}-", name="overfit"
        )
        records.extend(result.records)
        decisions.extend(result.decisions)
        warnings.extend(result.warnings)
        audits.extend(result.audits)
        timings[f"epochs_{int(epochs)}"] = result.timings
    return ExperimentResult(
        name="overfit",
        records=records,
        decisions=decisions,
        warnings=warnings,
        timings=timings,
        config={**cfg.to_dict(), "epoch_grid": [int(e) for e in epoch_grid]},
        audits=audits,
    )


def default_perturbation_statistics(
    surrogate_samples: int = 200,
    smoothgrad_samples: int = 25,
    sigma: float = 1.0,
) -> list[AttackStatistic]:
    """Gradient, prediction-variance, and the two perturbation statistics.

    The default noise scale matches the surrogate's unit-Gaussian sampling:
    perturbation methods draw their samples at data-independent unit scale,
    which is what keeps their attributions off the training manifold.
    """
    return [
        AttackStatistic("expl_var", "gradient"),
        AttackStatistic("pred_var"),
        AttackStatistic(
            "expl_var", "local_surrogate", params={"num_samples": surrogate_samples}
        ),
        AttackStatistic(
            "expl_var",
            "smoothgrad",
            params={"samples": smoothgrad_samples, "sigma": sigma},
        ),
    ]


def run_perturbation_experiment(
    cfg: ExperimentConfig, dataset: Dataset | None = None
) -> ExperimentResult:
    """Reduced-scale comparison of perturbation-based attack statistics."""
    has_perturbation = any(
        s.method in ("local_surrogate", "smoothgrad") for s in cfg.statistics
    )
    if not has_perturbation:
        cfg = replace(cfg, statistics=default_perturbation_statistics())
    return run_threshold_experiment(cfg, dataset=dataset, name="perturbation")


# ---------------------------------------------------------------------------
# Reconstruction campaign
# ---------------------------------------------------------------------------


@dataclass
class CampaignConfig:
    """Reconstruction campaign: logistic target plus attack bundle knobs."""

    dataset_csv: str | None = None
    label_column: str = "label"
    group_column: str | None = None
    synth: SynthConfig | None = None
    train: TrainConfig = field(
        default_factory=lambda: TrainConfig(
            optimizer="gd", lr=1.0, epochs=200, batch_size=None
        )
    )
    train_fraction: float = 0.5
    reveal_ks: tuple[int, ...] = (1, 5, 10)
    graph_k: int = 5
    traverse_starts: int = 10
    baseline_queries: int = 100
    max_points: int | None = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if (self.dataset_csv is None) == (self.synth is None):
            raise ConfigError("exactly one of dataset_csv / synth must be set")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ConfigError("train_fraction must be in (0, 1]")
        if not self.reveal_ks or any(k < 1 for k in self.reveal_ks):
            raise ConfigError("reveal_ks must be positive")
        if self.graph_k < 1:
            raise ConfigError("graph_k must be >= 1")
        if self.traverse_starts < 1:
            raise ConfigError("traverse_starts must be >= 1")
        if self.baseline_queries < 0:
            raise ConfigError("baseline_queries must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @classmethod
    def from_dict(cls, payload: dict) -> "CampaignConfig":
        payload = dict(payload)
        known = {
            "dataset_csv",
            "label_column",
            "group_column",
            "synth",
            "train",
            "train_fraction",
            "reveal_ks",
            "graph_k",
            "traverse_starts",
            "baseline_queries",
            "max_points",
            "seed",
            "threads",
        }
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if payload.get("synth") is not None:
                payload["synth"] = SynthConfig.from_dict(payload["synth"])
            if payload.get("train") is not None:
                payload["train"] = TrainConfig.from_dict(payload["train"])
            if payload.get("reveal_ks") is not None:
                payload["reveal_ks"] = tuple(int(k) for k in payload["reveal_ks"])
            return cls(**payload)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "dataset_csv": self.dataset_csv,
            "label_column": self.label_column,
            "group_column": self.group_column,
            "synth": self.synth.to_dict() if self.synth else None,
            "train": self.train.to_dict(),
            "train_fraction": self.train_fraction,
            "reveal_ks": list(self.reveal_ks),
            "graph_k": self.graph_k,
            "traverse_starts": self.traverse_starts,
            "baseline_queries": self.baseline_queries,
            "max_points": self.max_points,
            "seed": self.seed,
            "threads": self.threads,
        }


def run_reconstruction_campaign(cfg: CampaignConfig) -> dict:
    """Reconstruction, traversal, baselines, reveal rates, and graph metrics.

    Trains one logistic target on a seeded train split, builds the
    leave-one-out cache once, and runs the full attack bundle against it.
    The returned report is JSON-ready and fully determined by the config.
    """
    dataset = load_experiment_dataset(cfg)
    if dataset.n_classes != 2:
        raise ConfigError("reconstruction campaign requires a binary dataset")

    rng_split = np.random.default_rng(child_seed(cfg.seed, "split"))
    order = rng_split.permutation(dataset.n_points)
    n_train = max(2, int(round(cfg.train_fraction * dataset.n_points)))
    train_set = dataset.subset(order[:n_train])
    holdout = dataset.features[order[n_train:]]

    expl = build_loo_cache(train_set, cfg.train, k=cfg.graph_k, threads=cfg.threads)

    oracle = InfluenceOracle.from_explainer(expl)
    recon = algorithm1_reconstruct(
        oracle,
        y0=np.zeros(dataset.n_features),
        max_points=cfg.max_points,
        seed=child_seed(cfg.seed, "reconstruct"),
    )
    budget_rounds = min(train_set.n_points, dataset.n_features + 1)
    step_log = []
    for pos, step in enumerate(recon.steps):
        entry = {
            "iteration": step.iteration,
            "revealed_index": step.index,
            "anchor": [float(v) for v in step.anchor],
            "queries": step.queries,
            "rank_deficient": step.rank_deficient,
        }
        if pos < len(recon.constraints):
            normal, rhs = recon.constraints[pos]
            entry["constraint_normal"] = [float(v) for v in normal]
            entry["constraint_rhs"] = rhs
        step_log.append(entry)
    report_recon = {
        "recovered_count": len(recon.recovered),
        "recovered_fraction": len(recon.recovered) / train_set.n_points,
        "recovered_indices": [int(i) for i in recon.recovered],
        "reason": recon.reason,
        "oracle_inconsistent": recon.oracle_inconsistent,
        "queries_revealing": recon.queries_revealing,
        "termination_queries": recon.termination_queries,
        "queries_total": recon.queries_total,
        "retries": recon.retries,
        "query_budget": reconstruction_query_budget(dataset.n_features, budget_rounds),
        "steps": step_log,
    }

    graph = build_influence_graph(expl, cfg.graph_k)
    metrics = scc_metrics(graph)
    greedy = greedy_omniscient_baseline(graph)

    rng_traverse = np.random.default_rng(child_seed(cfg.seed, "traverse"))
    if holdout.shape[0] > 0:
        picks = rng_traverse.choice(
            holdout.shape[0],
            size=cfg.traverse_starts,
            replace=holdout.shape[0] < cfg.traverse_starts,
        )
        starts = holdout[picks]
    else:
        lo = dataset.features.min(axis=0)
        hi = dataset.features.max(axis=0)
        starts = rng_traverse.uniform(lo, hi, size=(cfg.traverse_starts, dataset.n_features))
    traverse_counts = []
    traverse_queries = []
    for start in starts:
        outcome = traverse_attack(expl, start, cfg.graph_k)
        traverse_counts.append(len(outcome.recovered))
        traverse_queries.append(outcome.query_count)

    bounds = np.stack(
        [dataset.features.min(axis=0), dataset.features.max(axis=0)], axis=1
    )
    samplers = {
        "uniform": UniformSampler(bounds, seed=child_seed(cfg.seed, "baseline", 0)),
        "marginal": MarginalSampler(
            dataset.features, seed=child_seed(cfg.seed, "baseline", 1)
        ),
    }
    curves = {}
    for name, sampler in samplers.items():
        curves[name] = baseline_attack(expl, sampler, cfg.baseline_queries, cfg.graph_k)
    if holdout.shape[0] > 0:
        true_sampler = TrueDistributionSampler(
            holdout, seed=child_seed(cfg.seed, "baseline", 2)
        )
        curves["true_distribution"] = baseline_attack(
            expl,
            true_sampler,
            min(cfg.baseline_queries, holdout.shape[0]),
            cfg.graph_k,
        )

    reveal = {}
    for k in cfg.reveal_ks:
        k_eff = min(int(k), train_set.n_points)
        entry = {"self_reveal_rate": self_reveal_rate(expl, k_eff)}
        if train_set.groups is not None:
            entry["group_reveal_rates"] = group_reveal_rates(expl, k_eff)
        reveal[str(k)] = entry

    return {
        "config": cfg.to_dict(),
        "n_train": train_set.n_points,
        "n_features": dataset.n_features,
        "reconstruction": report_recon,
        "graph": {
            **metrics.to_dict(),
            "greedy_seed_count": greedy.seed_count,
            "greedy_covered": len(greedy.covered),
        },
        "traversal": {
            "recovered_counts": traverse_counts,
            "query_counts": traverse_queries,
            "mean_recovered": float(np.mean(traverse_counts)),
            "largest_scc_size": metrics.largest_scc_size,
        },
        "baselines": curves,
        "reveal_rates": reveal,
    }


# ---------------------------------------------------------------------------
# Deterministic writers
# ---------------------------------------------------------------------------


def write_records_csv(path: str | Path, records: list[RunRecord]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_CSV_COLUMNS)
        for record in records:
            writer.writerow(record.csv_row())


def write_decisions_csv(path: str | Path, decisions: list[tuple]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(DECISION_CSV_COLUMNS)
        writer.writerows(decisions)


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")
    ).hexdigest()


def package_versions() -> dict:
    try:
        from importlib.metadata import version

        own = version("explainleak")
    except Exception:
        own = "unknown"
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "explainleak": own,
    }


def write_manifest(
    path: str | Path,
    config: dict,
    seed: int,
    timings: dict,
    extra: dict | None = None,
) -> None:
    payload = {
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "versions": package_versions(),
        "timings": timings,
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")
