"""Command line entry point.

Exit codes:
  0  success
  1  configuration or environment problem (bad config file, bad flags,
     unwritable or already-populated output directory)
  2  input data problem (unparseable EDF, bad annotations, missing channels)
  3  violated structural invariant (graph validation failure)
"""

from __future__ import annotations

import argparse
import logging
import sys

from .graphs import Montage, build_montage_graph, validate, write_edge_csv
from .pipeline import (
    ConfigError,
    DataError,
    InvariantError,
    load_config,
    load_manifest,
    run_feature_export,
    run_full,
    run_prediction,
    run_synthesis_files,
)
from .signal_io import AnnotationError, EdfParseError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3


class _ArgumentError(Exception):
    """Raised instead of argparse's default sys.exit so main() owns the code."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise _ArgumentError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bandgcn",
        description="Frequency-band seizure detection on montage graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override one config value (repeatable)",
        )

    p_synth = sub.add_parser(
        "synth", help="generate a synthetic EDF recording plus annotations"
    )
    add_config_args(p_synth)
    p_synth.add_argument(
        "--output-dir", default=None, help="where to write synthetic.edf"
    )

    p_feat = sub.add_parser(
        "features", help="export per-band window feature matrices as CSV"
    )
    add_config_args(p_feat)
    p_feat.add_argument(
        "--output-dir", default=None, help="where to write the feature CSVs"
    )

    p_run = sub.add_parser(
        "run", help="run the full band comparison experiment"
    )
    p_run.add_argument("--config", default=None, help="INI experiment config")
    p_run.add_argument(
        "--manifest", default=None, help="manifest.json of a previous run"
    )
    p_run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config value (repeatable; --config only)",
    )
    p_run.add_argument(
        "--output-dir", default=None, help="base directory for the run folder"
    )

    p_pred = sub.add_parser(
        "predict", help="score one EDF recording with a saved checkpoint"
    )
    p_pred.add_argument("--checkpoint", required=True, help="checkpoint.json path")
    p_pred.add_argument("--edf", required=True, help="EDF recording to score")
    p_pred.add_argument("--out", required=True, help="output CSV path")
    p_pred.add_argument(
        "--band",
        default=None,
        help="expected band; must match the checkpoint when given",
    )

    p_graph = sub.add_parser(
        "validate-graph", help="check montage graph invariants"
    )
    p_graph.add_argument(
        "--edges", default=None, help="also export the edge list to this CSV"
    )
    return parser


def _cmd_synth(args: argparse.Namespace) -> int:
    config = load_config(args.config, tuple(args.overrides))
    out_dir = args.output_dir if args.output_dir is not None else config.output_dir
    edf_path, ann_path = run_synthesis_files(config, out_dir)
    print(f"wrote {edf_path}")
    print(f"wrote {ann_path}")
    return EXIT_OK


def _cmd_features(args: argparse.Namespace) -> int:
    config = load_config(args.config, tuple(args.overrides))
    out_dir = args.output_dir if args.output_dir is not None else config.output_dir
    paths = run_feature_export(config, out_dir)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    if (args.config is None) == (args.manifest is None):
        raise ConfigError("run needs exactly one of --config and --manifest")
    if args.manifest is not None:
        if args.overrides:
            raise ConfigError("--set applies to --config runs, not --manifest")
        config, _ = load_manifest(args.manifest)
        config.validate()
    else:
        config = load_config(args.config, tuple(args.overrides))
    run_dir = run_full(config, args.output_dir)
    print(f"run {config.run_id()} written to {run_dir}")
    return EXIT_OK


def _cmd_predict(args: argparse.Namespace) -> int:
    out = run_prediction(args.checkpoint, args.edf, args.out, band=args.band)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_validate_graph(args: argparse.Namespace) -> int:
    graph = build_montage_graph()
    report = validate(graph)
    print(f"nodes: {graph.A.shape[0]}")
    print(f"edges: {int(graph.A.sum()) // 2}")
    print(f"connected: {report.connected}")
    print(f"spectral_radius: {report.spectral_radius!r}")
    if args.edges is not None:
        write_edge_csv(args.edges, Montage.canonical(), graph.A)
        print(f"wrote {args.edges}")
    if not report.passed:
        for failure in report.failures:
            print(f"FAIL: {failure}")
        return EXIT_INVARIANT
    print("all invariants hold")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "synth": _cmd_synth,
            "features": _cmd_features,
            "run": _cmd_run,
            "predict": _cmd_predict,
            "validate-graph": _cmd_validate_graph,
        }[args.command]
        return handler(args)
    except _ArgumentError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EdfParseError, AnnotationError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
