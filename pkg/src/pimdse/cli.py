"""Command-line entry point.

Subcommands: ``space count``, ``space sample``, ``map``, ``simulate``,
``search``. All output JSON is emitted with sorted keys so reruns with the
same inputs are byte-identical. Exit codes: 0 ok, 2 parse error,
3 validation error, 4 internal error. Set PIMDSE_LOG to control verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .cost_model import TechParams, default_tech, model_cost
from .design_space import (
    DEFAULT_SPACE,
    SpaceDescriptor,
    canonical_json,
    cardinality,
    cardinality_report,
    point_from_json,
    sample_random,
    validate,
)
from .evaluator import SurrogateParams, ingest_external
from .mapping import map_model
from .pipeline import schedule, simulate, zipf_lookup_model
from .search import (
    SearchConfig,
    default_hw_metrics,
    default_loss,
    derive_seed,
    run_search,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4

logger = logging.getLogger("pimdse")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _dump(obj: dict, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    json.dump(obj, stream, sort_keys=True, indent=2)
    stream.write("\n")


def _load_space(path: str | None) -> SpaceDescriptor:
    if path is None:
        return DEFAULT_SPACE
    try:
        return SpaceDescriptor.from_json(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load space descriptor {path}: {exc}", EXIT_PARSE) from exc


def _load_tech(path: str | None) -> TechParams:
    if path is None:
        return default_tech()
    try:
        return TechParams.from_json(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"cannot load tech params {path}: {exc}", EXIT_PARSE) from exc


def _load_point(path: str, space: SpaceDescriptor):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            point = point_from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load design point {path}: {exc}", EXIT_PARSE) from exc
    report = validate(point, space)
    if not report.ok:
        raise CliError(
            "design point fails validation:\n  " + "\n  ".join(report.violations),
            EXIT_VALIDATION,
        )
    return point


def cmd_space(args) -> int:
    space = _load_space(args.space)
    if args.action == "count":
        if args.report:
            _dump(cardinality_report(space))
        else:
            print(cardinality(space))
        return EXIT_OK
    # sample
    for i in range(args.num):
        point = sample_random(derive_seed(args.seed, "cli-sample", i), space)
        print(canonical_json(point))
    return EXIT_OK


def cmd_map(args) -> int:
    space = _load_space(args.space)
    point = _load_point(args.point, space)
    mm = map_model(point)
    _dump(mm.to_dict())
    return EXIT_OK


def cmd_simulate(args) -> int:
    space = _load_space(args.space)
    point = _load_point(args.point, space)
    tech = _load_tech(args.tech)
    mm = map_model(point)
    cost = model_cost(mm, tech)
    lookup = zipf_lookup_model(
        num_tables=point.model.num_sparse_features,
        rows_per_table=256,
        num_banks=8,
        num_queries=16,
        seed=derive_seed(args.seed, "trace"),
        t_bank=tech.t_bank,
    )
    report = simulate(mm, tech, lookup_model=lookup, overlap=not args.no_overlap)
    timeline = schedule(
        mm, tech, overlap=not args.no_overlap, lookup_time=lookup.latencies()[0]
    )
    _dump(
        {
            "cost": cost.to_dict(),
            "throughput": report.to_dict(),
            "timeline": timeline.to_dict(),
        }
    )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(cost.to_csv())
    return EXIT_OK


def cmd_search(args) -> int:
    space = _load_space(args.space)
    tech = _load_tech(args.tech)
    try:
        cfg = SearchConfig.from_json(args.search_config)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"cannot load search config {args.search_config}: {exc}", EXIT_PARSE) from exc
    overrides = _cfg_dict(cfg)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    cfg = SearchConfig.from_dict(overrides)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = {
        "command": "search",
        "config_paths": {
            "search_config": str(args.search_config),
            "space": str(args.space) if args.space else "<default>",
            "tech": str(args.tech) if args.tech else "<default>",
            "external_losses": str(args.external) if args.external else None,
        },
        "seed": cfg.seed,
        "tool_version": __version__,
        "output_directory": str(out_dir),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        _dump(manifest, fh)  # manifest lands before any result file

    external = None
    if args.external:
        external = ingest_external(args.external, logger=logger)

    loss_fn = default_loss(SurrogateParams(seed=cfg.seed), external=external)
    metric_fn = default_hw_metrics(tech, space, seed=cfg.seed)

    csv_path = out_dir / "criterion.csv"
    with open(csv_path, "w", encoding="utf-8") as csv_fh:
        csv_fh.write("# manifest=manifest.json\n")
        csv_fh.write("generation,best,median\n")

        def flush_generation(record):
            csv_fh.write(f"{record.generation},{record.best!r},{record.median!r}\n")
            csv_fh.flush()

        result = run_search(cfg, loss_fn, metric_fn, space, on_generation=flush_generation)

    with open(out_dir / "search_log.json", "w", encoding="utf-8") as fh:
        payload = result.log.to_dict()
        payload["_manifest"] = "manifest.json"
        _dump(payload, fh)

    top = {
        "_manifest": "manifest.json",
        "entries": [
            {
                "rank": rank,
                "point_id": e.point_id,
                "loss": e.loss,
                "metrics": list(e.metrics),
                "criterion": e.criterion,
                "point": e.point.to_dict(),
            }
            for rank, e in enumerate(result.top_entries, start=1)
        ],
    }
    with open(out_dir / "top_points.json", "w", encoding="utf-8") as fh:
        _dump(top, fh)

    print(f"search complete: best criterion {result.top_entries[0].criterion!r}")
    print(f"results in {out_dir}")
    return EXIT_OK


def _cfg_dict(cfg: SearchConfig) -> dict:
    return {
        "num_generations": cfg.num_generations,
        "num_children": cfg.num_children,
        "num_mutations": cfg.num_mutations,
        "lambdas": list(cfg.lambdas),
        "targets": list(cfg.targets) if cfg.targets is not None else None,
        "population_init_size": cfg.population_init_size,
        "tournament_size": cfg.tournament_size,
        "seed": cfg.seed,
        "workers": cfg.workers,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pimdse",
        description="Design-space exploration for PIM recommender accelerators",
    )
    parser.add_argument("--version", action="version", version=f"pimdse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_space = sub.add_parser("space", help="inspect or sample the design space")
    space_sub = p_space.add_subparsers(dest="action", required=True)
    p_count = space_sub.add_parser("count", help="print the exact cardinality")
    p_count.add_argument("--space", help="space descriptor JSON")
    p_count.add_argument("--report", action="store_true", help="emit the counting-convention report")
    p_count.set_defaults(func=cmd_space)
    p_sample = space_sub.add_parser("sample", help="print random design points")
    p_sample.add_argument("--space", help="space descriptor JSON")
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("-n", "--num", type=int, default=1)
    p_sample.set_defaults(func=cmd_space)

    p_map = sub.add_parser("map", help="map a design point onto engines and tiles")
    p_map.add_argument("--point", required=True)
    p_map.add_argument("--space", help="space descriptor JSON")
    p_map.set_defaults(func=cmd_map)

    p_sim = sub.add_parser("simulate", help="cost and pipeline reports for a point")
    p_sim.add_argument("--point", required=True)
    p_sim.add_argument("--tech", help="technology parameter JSON")
    p_sim.add_argument("--space", help="space descriptor JSON")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--no-overlap", action="store_true", help="serialize engine programming")
    p_sim.add_argument("--csv", help="also write the cost report as CSV to this path")
    p_sim.set_defaults(func=cmd_simulate)

    p_search = sub.add_parser("search", help="run the evolutionary search")
    p_search.add_argument("--search-config", required=True)
    p_search.add_argument("--space", help="space descriptor JSON")
    p_search.add_argument("--tech", help="technology parameter JSON")
    p_search.add_argument("--external", help="CSV of externally measured losses")
    p_search.add_argument("--out", required=True, help="output directory")
    p_search.add_argument("--seed", type=int, help="override the config seed")
    p_search.add_argument("--workers", type=int, help="parallel child evaluations")
    p_search.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("PIMDSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
