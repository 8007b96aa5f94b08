"""Experiment orchestration: configuration files, run manifests, and the
end-to-end band comparison protocol.

A run is fully described by an ``ExperimentConfig``.  The config canonically
serializes to JSON (minus the output directory, which is a location rather
than an input), and the first 12 hex digits of the SHA-256 of that JSON form
the run id.  Two runs with the same config therefore land in the same
directory and produce byte-identical outputs; re-executing into a directory
that already holds a completed run is refused rather than silently
overwritten.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .balance import FeatureDataset
from .evaluate import (
    ConfusionMatrix,
    CvResult,
    RepeatReport,
    confusion,
    cross_validate,
    kfold_split,
    pr_auc,
    repeat_runs,
    roc_auc,
    write_comparison_csv,
    write_confusion_csv,
    write_curve_csv,
    write_metrics_csv,
    write_repeats_csv,
)
from .features import window_features
from .gcn import GcnConfig, GcnParams, forward, load_checkpoint, save_checkpoint
from .graphs import (
    MONTAGE_CHANNELS,
    EegGraph,
    Montage,
    adjacency_sha256,
    build_montage_graph,
    write_edge_csv,
)
from .preprocess import BAND_BY_NAME, CANONICAL_BANDS, bandpass, label_windows, segment
from .signal_io import (
    Recording,
    SeizureAnnotation,
    SynthesisSpec,
    load_annotations,
    parse_edf,
    random_seizure_intervals,
    synthesize_recording,
    write_edf,
)

logger = logging.getLogger(__name__)

try:  # version of the installed distribution, recorded in manifests
    from importlib.metadata import version as _dist_version

    PACKAGE_VERSION = _dist_version("bandgcn")
except Exception:  # pragma: no cover - only hit when run from a raw checkout
    PACKAGE_VERSION = "0+unknown"

MANIFEST_FORMAT_VERSION = 1

CONFIG_SECTIONS = ("experiment", "data", "synthesis", "balance", "gcn")


class ConfigError(ValueError):
    """Invalid or contradictory configuration."""


class DataError(ValueError):
    """Input data that cannot be used (missing channels, bad labels, ...)."""


class InvariantError(RuntimeError):
    """A structural invariant that must hold was violated."""


@dataclass(frozen=True)
class SynthesisParams:
    """Knobs for generating a synthetic multichannel recording."""

    duration_s: float = 7200.0
    fs: float = 256.0
    n_channels: int = 23
    n_seizures: int = 20
    seizure_min_s: float = 10.0
    seizure_max_s: float = 60.0
    burst_frequencies_hz: tuple[float, ...] = (3.0, 20.0)
    burst_amplitude_ratio: float = 5.0

    def to_dict(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "fs": self.fs,
            "n_channels": self.n_channels,
            "n_seizures": self.n_seizures,
            "seizure_min_s": self.seizure_min_s,
            "seizure_max_s": self.seizure_max_s,
            "burst_frequencies_hz": list(self.burst_frequencies_hz),
            "burst_amplitude_ratio": self.burst_amplitude_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisParams":
        kwargs = dict(d)
        if "burst_frequencies_hz" in kwargs:
            kwargs["burst_frequencies_hz"] = tuple(
                float(f) for f in kwargs["burst_frequencies_hz"]
            )
        return cls(**kwargs)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run."""

    bands: tuple[str, ...] = tuple(b.name for b in CANONICAL_BANDS)
    window_s: float = 6.0
    train_fraction: float = 0.8
    smote_k: int = 5
    layer_dims: tuple[int, ...] = (66, 64, 32, 2)
    learning_rate: float = 0.01
    epochs: int = 500
    cv_folds: int = 5
    repeats: int = 1
    seed: int = 0
    output_dir: str = "runs"
    data_dir: str | None = None
    annotations: str | None = None
    synthesis: SynthesisParams | None = None

    def validate(self) -> None:
        if not self.bands:
            raise ConfigError("at least one band must be selected")
        for name in self.bands:
            if name not in BAND_BY_NAME:
                known = ", ".join(sorted(BAND_BY_NAME))
                raise ConfigError(f"unknown band {name!r} (known: {known})")
        if len(set(self.bands)) != len(self.bands):
            raise ConfigError("duplicate band in selection")
        if not self.window_s > 0:
            raise ConfigError("window_s must be positive")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        if self.smote_k < 1:
            raise ConfigError("smote_k must be at least 1")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        try:
            GcnConfig(
                layer_dims=tuple(self.layer_dims),
                learning_rate=self.learning_rate,
                epochs=self.epochs,
                seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        frames = round(self.window_s)
        if abs(self.window_s - frames) > 1e-9:
            raise ConfigError("window_s must be a whole number of seconds")
        expected_d0 = 11 * frames
        if self.layer_dims[0] != expected_d0:
            raise ConfigError(
                f"layer_dims[0] must be {expected_d0} for a {self.window_s:g} s "
                f"window (11 features per one-second frame), got {self.layer_dims[0]}"
            )
        has_data = self.data_dir is not None
        has_synth = self.synthesis is not None
        if has_data == has_synth:
            raise ConfigError(
                "exactly one of data_dir and [synthesis] must be configured"
            )
        if has_data:
            if self.annotations is None:
                raise ConfigError("data_dir requires an annotations file")
            if not Path(self.data_dir).is_dir():
                raise ConfigError(f"data_dir does not exist: {self.data_dir}")
            if not Path(self.annotations).is_file():
                raise ConfigError(f"annotations file does not exist: {self.annotations}")
        else:
            s = self.synthesis
            if s.duration_s <= 0 or s.fs <= 0:
                raise ConfigError("synthesis duration and fs must be positive")
            if s.n_channels < 1:
                raise ConfigError("synthesis n_channels must be at least 1")
            if s.n_seizures < 0:
                raise ConfigError("synthesis n_seizures must be non-negative")
            if not 0 < s.seizure_min_s <= s.seizure_max_s:
                raise ConfigError("need 0 < seizure_min_s <= seizure_max_s")
            if s.burst_amplitude_ratio <= 0:
                raise ConfigError("burst_amplitude_ratio must be positive")

    def to_dict(self, include_output_dir: bool = True) -> dict:
        d = {
            "bands": list(self.bands),
            "window_s": self.window_s,
            "train_fraction": self.train_fraction,
            "smote_k": self.smote_k,
            "layer_dims": list(self.layer_dims),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "cv_folds": self.cv_folds,
            "repeats": self.repeats,
            "seed": self.seed,
            "data_dir": self.data_dir,
            "annotations": self.annotations,
            "synthesis": self.synthesis.to_dict() if self.synthesis else None,
        }
        if include_output_dir:
            d["output_dir"] = self.output_dir
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        if kwargs.get("synthesis") is not None:
            kwargs["synthesis"] = SynthesisParams.from_dict(kwargs["synthesis"])
        if "bands" in kwargs:
            kwargs["bands"] = tuple(kwargs["bands"])
        if "layer_dims" in kwargs:
            kwargs["layer_dims"] = tuple(int(x) for x in kwargs["layer_dims"])
        kwargs.setdefault("output_dir", "runs")
        unknown = set(kwargs) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)

    def canonical_json(self) -> str:
        """Stable serialization used for the run id.

        output_dir names where results land, not what they are, so it is
        excluded: the same experiment written to two places is one run.
        """
        return json.dumps(
            self.to_dict(include_output_dir=False),
            sort_keys=True,
            separators=(",", ":"),
        )

    def run_id(self) -> str:
        digest = hashlib.sha256(self.canonical_json().encode("ascii")).hexdigest()
        return digest[:12]

    def gcn_config(self, seed: int | None = None) -> GcnConfig:
        return GcnConfig(
            layer_dims=tuple(self.layer_dims),
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=self.seed if seed is None else seed,
        )


def _parse_override(text: str) -> tuple[str, str, str]:
    """Split ``section.key=value`` into its parts."""
    head, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"override must look like section.key=value: {text!r}")
    section, dot, key = head.partition(".")
    if not dot or not section or not key:
        raise ConfigError(f"override key must look like section.key: {head!r}")
    if section not in CONFIG_SECTIONS:
        raise ConfigError(
            f"unknown config section {section!r} (known: {', '.join(CONFIG_SECTIONS)})"
        )
    return section, key, value


_SECTION_KEYS = {
    "experiment": {
        "bands",
        "window_s",
        "train_fraction",
        "cv_folds",
        "repeats",
        "seed",
        "output_dir",
    },
    "data": {"data_dir", "annotations"},
    "synthesis": {
        "duration_s",
        "fs",
        "n_channels",
        "n_seizures",
        "seizure_min_s",
        "seizure_max_s",
        "burst_frequencies_hz",
        "burst_amplitude_ratio",
    },
    "balance": {"smote_k"},
    "gcn": {"layer_dims", "learning_rate", "epochs"},
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def load_config(path: str | Path, overrides: tuple[str, ...] = ()) -> ExperimentConfig:
    """Read an INI experiment config, apply overrides, and validate.

    Sections: [experiment], [data], [synthesis], [balance], [gcn].  Unknown
    sections or keys are rejected so typos fail loudly instead of silently
    running defaults.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file does not exist: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    for text in overrides:
        section, key, value = _parse_override(text)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)

    for section in parser.sections():
        if section not in CONFIG_SECTIONS:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        extra = set(parser[section]) - _SECTION_KEYS[section]
        if extra:
            raise ConfigError(
                f"unknown key(s) {sorted(extra)} in section [{section}] of {path}"
            )

    cfg = ExperimentConfig()
    try:
        exp = parser["experiment"] if parser.has_section("experiment") else {}
        if "bands" in exp:
            cfg.bands = tuple(p.strip() for p in exp["bands"].split(",") if p.strip())
        if "window_s" in exp:
            cfg.window_s = float(exp["window_s"])
        if "train_fraction" in exp:
            cfg.train_fraction = float(exp["train_fraction"])
        if "cv_folds" in exp:
            cfg.cv_folds = int(exp["cv_folds"])
        if "repeats" in exp:
            cfg.repeats = int(exp["repeats"])
        if "seed" in exp:
            cfg.seed = int(exp["seed"])
        if "output_dir" in exp:
            cfg.output_dir = exp["output_dir"]
        if parser.has_section("balance") and "smote_k" in parser["balance"]:
            cfg.smote_k = int(parser["balance"]["smote_k"])
        if parser.has_section("gcn"):
            gcn = parser["gcn"]
            if "layer_dims" in gcn:
                cfg.layer_dims = _ints(gcn["layer_dims"])
            if "learning_rate" in gcn:
                cfg.learning_rate = float(gcn["learning_rate"])
            if "epochs" in gcn:
                cfg.epochs = int(gcn["epochs"])
        if parser.has_section("data"):
            data = parser["data"]
            if "data_dir" in data:
                cfg.data_dir = data["data_dir"]
            if "annotations" in data:
                cfg.annotations = data["annotations"]
        if parser.has_section("synthesis"):
            syn = parser["synthesis"]
            base = SynthesisParams()
            cfg.synthesis = SynthesisParams(
                duration_s=float(syn.get("duration_s", base.duration_s)),
                fs=float(syn.get("fs", base.fs)),
                n_channels=int(syn.get("n_channels", base.n_channels)),
                n_seizures=int(syn.get("n_seizures", base.n_seizures)),
                seizure_min_s=float(syn.get("seizure_min_s", base.seizure_min_s)),
                seizure_max_s=float(syn.get("seizure_max_s", base.seizure_max_s)),
                burst_frequencies_hz=_floats(
                    syn.get("burst_frequencies_hz", "3,20")
                ),
                burst_amplitude_ratio=float(
                    syn.get("burst_amplitude_ratio", base.burst_amplitude_ratio)
                ),
            )
    except ValueError as exc:
        raise ConfigError(f"bad value in config {path}: {exc}") from exc

    cfg.validate()
    return cfg


def load_manifest(path: str | Path) -> tuple[ExperimentConfig, dict]:
    """Rebuild the config of a previous run from its manifest."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"manifest does not exist: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse manifest {path}: {exc}") from exc
    if manifest.get("format_version") != MANIFEST_FORMAT_VERSION:
        raise ConfigError(
            f"unsupported manifest format_version {manifest.get('format_version')!r}"
        )
    if "config" not in manifest:
        raise ConfigError(f"manifest {path} has no config block")
    config = ExperimentConfig.from_dict(manifest["config"])
    return config, manifest


@dataclass
class ResolvedInputs:
    """Recordings reduced to the canonical montage, plus bookkeeping."""

    recordings: list[Recording]
    annotations: dict[str, list[SeizureAnnotation]]
    input_hashes: dict[str, str]
    skipped: list[str] = field(default_factory=list)


def select_montage_channels(recording: Recording) -> Recording | None:
    """Reduce a recording to the 23 canonical channels in canonical order.

    Returns None (after logging which labels are missing) when the montage is
    incomplete; the caller decides whether that skips the file or is fatal.
    """
    index_of = {ch.raw.upper(): i for i, ch in enumerate(recording.channels)}
    rows = []
    missing = []
    for name in MONTAGE_CHANNELS:
        i = index_of.get(name.upper())
        if i is None:
            missing.append(name)
        else:
            rows.append(i)
    if missing:
        logger.warning(
            "%s lacks montage channel(s) %s; skipping",
            recording.file_id,
            ", ".join(missing),
        )
        return None
    return Recording(
        channels=[recording.channels[i] for i in rows],
        fs=recording.fs,
        data=recording.data[rows],
        duration_s=recording.duration_s,
        file_id=recording.file_id,
    )


def _synthesis_spec(config: ExperimentConfig) -> SynthesisSpec:
    s = config.synthesis
    intervals = random_seizure_intervals(
        s.n_seizures,
        s.duration_s,
        s.seizure_min_s,
        s.seizure_max_s,
        seed=config.seed,
    )
    return SynthesisSpec(
        duration_s=s.duration_s,
        fs=s.fs,
        n_channels=s.n_channels,
        seizure_intervals=intervals,
        burst_frequencies_hz=s.burst_frequencies_hz,
        burst_amplitude_ratio=s.burst_amplitude_ratio,
        noise_seed=config.seed,
    )


def resolve_inputs(config: ExperimentConfig) -> ResolvedInputs:
    """Produce the montage-complete recordings and grouped annotations."""
    if config.synthesis is not None:
        spec = _synthesis_spec(config)
        recording, anns = synthesize_recording(spec)
        selected = select_montage_channels(recording)
        if selected is None:
            raise DataError(
                "synthetic recording does not carry the full montage; "
                "n_channels must be 23"
            )
        spec_json = json.dumps(
            {
                "duration_s": spec.duration_s,
                "fs": spec.fs,
                "n_channels": spec.n_channels,
                "seizure_intervals": [list(iv) for iv in spec.seizure_intervals],
                "burst_frequencies_hz": list(spec.burst_frequencies_hz),
                "burst_amplitude_ratio": spec.burst_amplitude_ratio,
                "noise_seed": spec.noise_seed,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        digest = hashlib.sha256(spec_json.encode("ascii")).hexdigest()
        return ResolvedInputs(
            recordings=[selected],
            annotations={selected.file_id: anns},
            input_hashes={selected.file_id: f"spec:{digest}"},
        )

    data_dir = Path(config.data_dir)
    edf_paths = sorted(data_dir.glob("*.edf"))
    if not edf_paths:
        raise DataError(f"no .edf files found in {data_dir}")
    ann_text = Path(config.annotations).read_text(encoding="utf-8")
    all_anns = load_annotations(ann_text)
    grouped: dict[str, list[SeizureAnnotation]] = {}
    for a in all_anns:
        grouped.setdefault(a.file_id, []).append(a)

    recordings = []
    input_hashes = {}
    skipped = []
    for p in edf_paths:
        raw = p.read_bytes()
        recording = parse_edf(raw)
        recording.file_id = p.name
        selected = select_montage_channels(recording)
        if selected is None:
            skipped.append(p.name)
            continue
        recordings.append(selected)
        input_hashes[p.name] = hashlib.sha256(raw).hexdigest()
    if not recordings:
        raise DataError(
            f"none of the {len(edf_paths)} .edf files in {data_dir} "
            "carries the full 23-channel montage"
        )
    return ResolvedInputs(
        recordings=recordings,
        annotations=grouped,
        input_hashes=input_hashes,
        skipped=skipped,
    )


@dataclass
class BandData:
    """Windowed feature matrix for one band across all input files."""

    band: str
    X: np.ndarray  # (n_windows, 23 * features_per_channel)
    y: np.ndarray  # (n_windows,) int
    source_files: list[str]
    window_ks: list[int]
    window_counts: dict[str, tuple[int, int]]  # file -> (windows, ictal)


def build_band_data(
    inputs: ResolvedInputs, band_name: str, window_s: float
) -> BandData:
    """Filter, window, label, and featurize every recording for one band."""
    band = BAND_BY_NAME[band_name]
    blocks = []
    labels = []
    source_files = []
    window_ks = []
    window_counts = {}
    for recording in inputs.recordings:
        filtered = bandpass(recording, band)
        segments = segment(filtered, t_w_s=window_s, band=band.name)
        segments = label_windows(
            segments, inputs.annotations.get(recording.file_id, [])
        )
        if not segments:
            window_counts[recording.file_id] = (0, 0)
            continue
        windows = np.stack([s.samples for s in segments])
        feats = window_features(windows, recording.fs)
        blocks.append(feats.reshape(feats.shape[0], -1))
        file_labels = [s.label for s in segments]
        labels.extend(file_labels)
        source_files.extend([recording.file_id] * len(segments))
        window_ks.extend([s.index_k for s in segments])
        window_counts[recording.file_id] = (len(segments), int(sum(file_labels)))
    if not blocks:
        raise DataError(f"no windows produced for band {band_name}")
    X = np.concatenate(blocks, axis=0)
    y = np.asarray(labels, dtype=int)
    return BandData(
        band=band_name,
        X=X,
        y=y,
        source_files=source_files,
        window_ks=window_ks,
        window_counts=window_counts,
    )


@dataclass
class BandOutcome:
    """Everything produced for one band during a run."""

    band: str
    cv: CvResult | None = None
    roc_curve: np.ndarray | None = None
    pr_curve: np.ndarray | None = None
    confusion: ConfusionMatrix | None = None
    checkpoint_params: GcnParams | None = None
    repeat_report: RepeatReport | None = None
    window_counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    error: str | None = None


@dataclass
class RunResult:
    config: ExperimentConfig
    run_id: str
    graph: EegGraph
    adjacency_fingerprint: str
    outcomes: list[BandOutcome]
    input_hashes: dict[str, str]
    skipped_files: list[str]

    def manifest(self) -> dict:
        band_errors = {o.band: o.error for o in self.outcomes if o.error}
        window_counts = {
            o.band: {f: list(c) for f, c in sorted(o.window_counts.items())}
            for o in self.outcomes
            if o.window_counts
        }
        return {
            "format_version": MANIFEST_FORMAT_VERSION,
            "run_id": self.run_id,
            "package_version": PACKAGE_VERSION,
            "config": self.config.to_dict(include_output_dir=False),
            "inputs": self.input_hashes,
            "skipped_files": sorted(self.skipped_files),
            "adjacency_fingerprint": self.adjacency_fingerprint,
            "band_errors": band_errors,
            "window_counts": window_counts,
        }


def _fold0_artifacts(
    cv: CvResult,
) -> tuple[np.ndarray | None, np.ndarray | None, ConfusionMatrix]:
    """Curves and confusion for the first fold's held-out 20%."""
    truth, scores = cv.fold_scores[0]
    preds = (scores > 0.5).astype(int)
    cm = confusion(preds, truth)
    if len(np.unique(truth)) < 2:
        return None, None, cm
    roc_curve, _ = roc_auc(scores, truth)
    pr_curve, _ = pr_auc(scores, truth)
    return roc_curve, pr_curve, cm


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Execute the full band comparison described by ``config``.

    A failure inside one band (too few windows, a single class, a numerical
    blowup) aborts that band only; it is recorded on the outcome and the
    remaining bands still run.
    """
    config.validate()
    inputs = resolve_inputs(config)
    graph = build_montage_graph()
    fingerprint = adjacency_sha256(graph.A)

    ordered = [b.name for b in CANONICAL_BANDS if b.name in config.bands]
    outcomes = []
    for band_name in ordered:
        outcome = BandOutcome(band=band_name)
        outcomes.append(outcome)
        try:
            data = build_band_data(inputs, band_name, config.window_s)
            outcome.window_counts = data.window_counts
            dataset = FeatureDataset.from_arrays(data.X, data.y)
            plan = kfold_split(
                len(data.y), data.y, k=config.cv_folds, seed=config.seed
            )
            cv = cross_validate(
                dataset,
                graph,
                config.gcn_config(),
                plan,
                smote_k=config.smote_k,
                band=band_name,
            )
            outcome.cv = cv
            outcome.roc_curve, outcome.pr_curve, outcome.confusion = _fold0_artifacts(cv)
            outcome.checkpoint_params = cv.fold_params[0]
            if config.repeats > 1:
                outcome.repeat_report = _repeat_band(
                    dataset, graph, config, band_name
                )
        except (ValueError, FloatingPointError) as exc:
            logger.warning("band %s failed: %s", band_name, exc)
            outcome.error = str(exc)
    return RunResult(
        config=config,
        run_id=config.run_id(),
        graph=graph,
        adjacency_fingerprint=fingerprint,
        outcomes=outcomes,
        input_hashes=inputs.input_hashes,
        skipped_files=inputs.skipped,
    )


def _repeat_band(
    dataset: FeatureDataset,
    graph: EegGraph,
    config: ExperimentConfig,
    band_name: str,
) -> RepeatReport:
    """Re-run the band's cross-validation under consecutive seeds."""

    def experiment(seed: int) -> dict[str, float]:
        plan = kfold_split(len(dataset.y), dataset.y, k=config.cv_folds, seed=seed)
        cv = cross_validate(
            dataset,
            graph,
            config.gcn_config(seed=seed),
            plan,
            smote_k=config.smote_k,
            band=band_name,
        )
        return dict(cv.mean)

    return repeat_runs(experiment, times=config.repeats, base_seed=config.seed)


def write_run_outputs(result: RunResult, output_dir: str | Path | None = None) -> Path:
    """Write the run directory; refuses to touch an already-written run."""
    base = Path(output_dir if output_dir is not None else result.config.output_dir)
    run_dir = base / result.run_id
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        raise ConfigError(
            f"run {result.run_id} already exists at {run_dir}; "
            "outputs are write-once"
        )
    run_dir.mkdir(parents=True, exist_ok=True)

    manifest_path.write_text(
        json.dumps(result.manifest(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    write_edge_csv(run_dir / "graph_edges.csv", Montage.canonical(), result.graph.A)

    reports = []
    cv_results = []
    for outcome in result.outcomes:
        if outcome.cv is None:
            continue
        reports.extend(outcome.cv.reports)
        cv_results.append(outcome.cv)
    write_metrics_csv(run_dir / "metrics.csv", reports)
    write_comparison_csv(run_dir / "comparison.csv", cv_results)

    for outcome in result.outcomes:
        if outcome.cv is None:
            continue
        band_dir = run_dir / outcome.band
        band_dir.mkdir(exist_ok=True)
        if outcome.roc_curve is not None:
            write_curve_csv(band_dir / "roc.csv", outcome.roc_curve, "roc")
        if outcome.pr_curve is not None:
            write_curve_csv(band_dir / "pr.csv", outcome.pr_curve, "pr")
        if outcome.confusion is not None:
            write_confusion_csv(band_dir / "confusion.csv", outcome.confusion)
        if outcome.checkpoint_params is not None:
            save_checkpoint(
                band_dir / "checkpoint.json",
                outcome.checkpoint_params,
                result.config.gcn_config(),
                band=outcome.band,
                adjacency_fingerprint=result.adjacency_fingerprint,
                window_s=result.config.window_s,
                fs=_input_fs(result),
            )
        if outcome.repeat_report is not None:
            write_repeats_csv(band_dir / "repeats.csv", outcome.repeat_report)
    return run_dir


def _input_fs(result: RunResult) -> float:
    if result.config.synthesis is not None:
        return result.config.synthesis.fs
    return 256.0


def run_full(config: ExperimentConfig, output_dir: str | Path | None = None) -> Path:
    """run_experiment plus artifact writing; returns the run directory."""
    result = run_experiment(config)
    return write_run_outputs(result, output_dir)


def run_synthesis_files(
    config: ExperimentConfig, out_dir: str | Path
) -> tuple[Path, Path]:
    """Generate a synthetic recording to disk as EDF plus an annotation CSV."""
    if config.synthesis is None:
        raise ConfigError("synth requires a [synthesis] section in the config")
    config.validate()
    spec = _synthesis_spec(config)
    recording, anns = synthesize_recording(spec)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    edf_path = out_dir / "synthetic.edf"
    recording.file_id = edf_path.name
    write_edf(edf_path, recording)

    # Read back what was just written: quantization must round-trip into a
    # parseable file with the declared geometry.
    reread = parse_edf(edf_path.read_bytes())
    if reread.data.shape != recording.data.shape:
        raise InvariantError(
            f"EDF round-trip changed shape: wrote {recording.data.shape}, "
            f"read {reread.data.shape}"
        )

    ann_path = out_dir / "annotations.csv"
    with open(ann_path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file_id", "start_s", "end_s"])
        for a in anns:
            writer.writerow([edf_path.name, repr(float(a.t_s)), repr(float(a.t_e))])
    return edf_path, ann_path


def run_feature_export(config: ExperimentConfig, out_dir: str | Path) -> list[Path]:
    """Write one feature CSV per band plus a small manifest."""
    from .features import write_feature_csv

    config.validate()
    inputs = resolve_inputs(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    counts: dict[str, dict[str, list[int]]] = {}
    ordered = [b.name for b in CANONICAL_BANDS if b.name in config.bands]
    for band_name in ordered:
        data = build_band_data(inputs, band_name, config.window_s)
        path = out_dir / f"features_{band_name}.csv"
        write_feature_csv(
            path, band_name, data.source_files, data.window_ks, data.y, data.X
        )
        paths.append(path)
        counts[band_name] = {f: list(c) for f, c in sorted(data.window_counts.items())}
    manifest = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "package_version": PACKAGE_VERSION,
        "config": config.to_dict(include_output_dir=False),
        "inputs": inputs.input_hashes,
        "skipped_files": sorted(inputs.skipped),
        "window_counts": counts,
        "n_feature_columns": int(
            0 if not paths else 23 * 11 * round(config.window_s)
        ),
    }
    manifest_path = out_dir / "features_manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    paths.append(manifest_path)
    return paths


def run_prediction(
    checkpoint_path: str | Path,
    edf_path: str | Path,
    out_path: str | Path,
    band: str | None = None,
) -> Path:
    """Score every window of one recording with a saved model.

    The checkpoint pins the band, the window length, and a fingerprint of the
    adjacency structure the weights were trained against; a mismatch is an
    error, not a silent degradation.
    """
    checkpoint_path = Path(checkpoint_path)
    if not checkpoint_path.is_file():
        raise ConfigError(f"checkpoint does not exist: {checkpoint_path}")
    edf_path = Path(edf_path)
    if not edf_path.is_file():
        raise ConfigError(f"EDF file does not exist: {edf_path}")
    ck = load_checkpoint(checkpoint_path)
    if band is not None and band != ck.band:
        raise DataError(
            f"requested band {band!r} but checkpoint was trained on {ck.band!r}"
        )
    band_name = ck.band
    if band_name not in BAND_BY_NAME:
        raise DataError(f"checkpoint names unknown band {band_name!r}")

    recording = parse_edf(edf_path.read_bytes())
    recording.file_id = edf_path.name
    selected = select_montage_channels(recording)
    if selected is None:
        raise DataError(f"{edf_path.name} lacks the full 23-channel montage")

    graph = build_montage_graph()
    fingerprint = adjacency_sha256(graph.A)
    if fingerprint != ck.adjacency_fingerprint:
        raise DataError(
            "checkpoint adjacency fingerprint does not match the montage graph: "
            f"{ck.adjacency_fingerprint} != {fingerprint}"
        )

    filtered = bandpass(selected, BAND_BY_NAME[band_name])
    segments = segment(filtered, t_w_s=ck.window_s, band=band_name)
    if not segments:
        raise DataError(
            f"{edf_path.name} is shorter than one {ck.window_s:g} s window"
        )
    windows = np.stack([s.samples for s in segments])
    feats = window_features(windows, selected.fs)
    probs = forward(ck.params, graph.S, feats)[0]
    p1 = probs[:, 1]
    labels = (p1 > 0.5).astype(int)

    out_path = Path(out_path)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_k", "start_s", "end_s", "p_seizure", "label"])
        for k, (p, lab) in enumerate(zip(p1, labels)):
            writer.writerow(
                [
                    str(k),
                    repr(float(k * ck.window_s)),
                    repr(float((k + 1) * ck.window_s)),
                    repr(float(p)),
                    str(int(lab)),
                ]
            )
    return out_path
