"""Command-line driver: analytic sweeps, Monte Carlo validation, crossovers.

Subcommands::

    qtdlab model-sweep  [--config F] [--seed S] [--out DIR]   # fig3 + fig4 CSVs
    qtdlab simulate     [--config F] [--seed S] [--out DIR]   # MC vs model CSV
    qtdlab crossover    [--config F] [--seed S] [--out DIR]   # crossover JSON
    qtdlab reproduce {fig3,fig4,window-claim} [...]

Set ``QTDLAB_LOG`` (DEBUG, INFO, WARNING, ...) for log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .info import advantage_curve, find_crossover, fit_pair_rate, window_sweep
from .montecarlo import JitterModel, agreement_z, simulate_conditional, trial_seed
from .noise import DegenerateCountsError, Hypothesis, Strategy, conditional_table

log = logging.getLogger("qtdlab")

FIG3_HEADER = [
    "g",
    "p_c(0|0)",
    "p_c(1|0)",
    "p_c(0|1)",
    "p_c(1|1)",
    "p_q(0|0)",
    "p_q(1|0)",
    "p_q(0|1)",
    "p_q(1|1)",
]
FIG4_HEADER = ["g", "I_classical", "I_quantum"]
MC_HEADER = [
    "g",
    "strategy",
    "x",
    "p0_model",
    "p0_mc",
    "se",
    "n_coincidences",
    "z",
    "seed_pass_fraction",
    "pass",
]
MC_Z_LIMIT = 3.0
MC_SEED_PASS_FRACTION = 0.95


def fmt(value: float) -> str:
    return format(value, ".17g")


@dataclass
class ResultManifest:
    config: dict
    artifacts: list[dict] = field(default_factory=list)
    fitted: dict = field(default_factory=dict)
    validations: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def ok(self) -> bool:
        return all(self.validations.values())

    def to_json(self) -> str:
        body = {
            "tool": "qtdlab",
            "version": self.version,
            "config": self.config,
            "fitted": self.fitted,
            "artifacts": self.artifacts,
            "validations": self.validations,
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


class _Writer:
    """Single writer for the output directory; records content hashes."""

    def __init__(self, out_dir: Path, manifest: ResultManifest):
        self.out_dir = out_dir
        self.manifest = manifest
        out_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(out_dir, os.W_OK):
            raise OSError(f"output directory {out_dir} is not writable")

    def write(self, name: str, text: str, rows: int | None = None):
        data = text.encode()
        (self.out_dir / name).write_bytes(data)
        entry = {"path": name, "sha256": hashlib.sha256(data).hexdigest()}
        if rows is not None:
            entry["rows"] = rows
        self.manifest.artifacts.append(entry)
        log.info("wrote %s", self.out_dir / name)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _resolve_pair_rate(config: RunConfig, manifest: ResultManifest) -> RunConfig:
    if config.pair_rate is not None:
        manifest.fitted = {"pair_rate": config.pair_rate, "source": "config"}
        return config
    base = config.params(pair_rate=1.0)
    rate = fit_pair_rate(base, config.fit_target_g_star, config.crossover_range)
    achieved = find_crossover(base.updated(pair_rate=rate), config.crossover_range)
    manifest.fitted = {
        "pair_rate": rate,
        "source": "fit",
        "target_g_star": config.fit_target_g_star,
        "achieved_g_star": achieved.g_star,
        "fit_delta_T": config.delta_T,
        "method": "bisection in log pair_rate on the model crossover",
    }
    log.info("fitted pair_rate = %.6g /s", rate)
    return replace(config, pair_rate=rate)


def _fig3(config: RunConfig, writer: _Writer):
    grid = config.g_grid.values()
    rows, degenerate = [], []
    for g in grid:
        params = config.params(g=g)
        row = [fmt(g)]
        for strategy in (Strategy.CLASSICAL, Strategy.QUANTUM):
            try:
                table = conditional_table(params, strategy)
                row += [fmt(table.p(r, x)) for x in (0, 1) for r in (0, 1)]
            except DegenerateCountsError as exc:
                log.warning("g=%s %s: %s", g, strategy.value, exc)
                degenerate.append({"g": g, "strategy": strategy.value})
                row += ["nan"] * 4
        rows.append(row)
    writer.write("fig3.csv", _csv(FIG3_HEADER, rows), len(rows))
    writer.manifest.validations["fig3_rows"] = len(rows) == len(grid)
    if degenerate:
        writer.manifest.fitted.setdefault("degenerate_points", []).extend(degenerate)


def _fig4(config: RunConfig, writer: _Writer):
    grid = config.g_grid.values()
    rows = []
    for g in grid:
        try:
            (pt,) = advantage_curve(config.params(), [g])
            rows.append([fmt(pt.g), fmt(pt.I_classical), fmt(pt.I_quantum)])
        except DegenerateCountsError as exc:
            log.warning("g=%s: %s", g, exc)
            rows.append([fmt(g), "nan", "nan"])
    writer.write("fig4.csv", _csv(FIG4_HEADER, rows), len(rows))
    writer.manifest.validations["fig4_rows"] = len(rows) == len(grid)


def _crossover(config: RunConfig, writer: _Writer, name: str = "crossover.json"):
    results = window_sweep(config.params(), config.windows, config.crossover_range)
    entries = [
        {
            "delta_T": r.delta_T,
            "g_star": r.g_star,
            "bracket": list(r.bracket),
            "found": r.found,
        }
        for r in results
    ]
    body = {"pair_rate": config.pair_rate, "windows": entries}
    first, last = results[0], results[-1]
    if len(results) > 1 and first.found and last.found:
        body["g_star_ratio"] = last.g_star / first.g_star
    writer.write(name, json.dumps(body, indent=2, sort_keys=True) + "\n", len(entries))
    writer.manifest.validations["crossover_found"] = all(r.found for r in results)


def _mc_cell(args):
    params, strategy, x, seed, min_coincidences, sigma = args
    return simulate_conditional(params, strategy, x, seed, min_coincidences, JitterModel(sigma))


def _mc_validation(config: RunConfig, writer: _Writer):
    jobs, cells = [], []
    for gi, g in enumerate(config.mc_g_values):
        params = config.params(g=g)
        for si, strategy in enumerate((Strategy.CLASSICAL, Strategy.QUANTUM)):
            table = conditional_table(params, strategy)
            for x in Hypothesis:
                cells.append((g, strategy, x, table.p(0, x), len(jobs)))
                for k in range(config.mc_seeds):
                    seed = trial_seed(config.master_seed, gi, si, int(x), k)
                    jobs.append((params, strategy, x, seed, config.mc_min_coincidences, config.jitter_sigma))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            estimates = list(pool.map(_mc_cell, jobs, chunksize=4))
    else:
        estimates = [_mc_cell(j) for j in jobs]

    rows, all_pass = [], True
    for g, strategy, x, p_model, offset in cells:
        ests = estimates[offset : offset + config.mc_seeds]
        if any(e is None for e in ests):
            # the model predicts no coincidences at all: nothing to compare
            rows.append([fmt(g), strategy.value, int(x), fmt(p_model), "nan", "nan", 0, "nan", "nan", "skipped"])
            continue
        n = sum(e.n for e in ests)
        phi = sum(round(e.p0 * e.n) for e in ests)
        p_hat = phi / n
        se = (p_hat * (1 - p_hat) / n) ** 0.5
        z = agreement_z(p_hat, n, p_model)
        frac = sum(abs(agreement_z(e.p0, e.n, p_model)) <= MC_Z_LIMIT for e in ests) / len(ests)
        ok = abs(z) <= MC_Z_LIMIT and frac >= MC_SEED_PASS_FRACTION
        all_pass &= ok
        rows.append([fmt(g), strategy.value, int(x), fmt(p_model), fmt(p_hat), fmt(se), n, fmt(z), fmt(frac), "pass" if ok else "fail"])
    writer.write("mc_validation.csv", _csv(MC_HEADER, rows), len(rows))
    writer.manifest.validations["mc_validation"] = all_pass


def run(config: RunConfig) -> ResultManifest:
    """Produce every artifact in ``config.emit`` plus ``manifest.json``."""
    manifest = ResultManifest(config=config.snapshot())
    writer = _Writer(Path(config.output_dir), manifest)
    config = _resolve_pair_rate(config, manifest)
    if "fig3" in config.emit:
        _fig3(config, writer)
    if "fig4" in config.emit:
        _fig4(config, writer)
    if "crossover" in config.emit:
        _crossover(config, writer)
    if "mc_validation" in config.emit:
        _mc_validation(config, writer)
    (Path(config.output_dir) / "manifest.json").write_text(manifest.to_json())
    return manifest


REPRODUCE = {
    "fig3": {"emit": frozenset({"fig3"})},
    "fig4": {"emit": frozenset({"fig4"})},
    "window-claim": {"emit": frozenset({"crossover"}), "windows": (5e-9, 1e-10)},
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")

    parser = argparse.ArgumentParser(prog="qtdlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("model-sweep", parents=[common], help="analytic conditional probabilities and information")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo validation against the model")
    sub.add_parser("crossover", parents=[common], help="quantum/classical crossover per window")
    rep = sub.add_parser("reproduce", parents=[common], help="regenerate a figure or claim")
    rep.add_argument("target", choices=sorted(REPRODUCE))
    return parser


def _config_from_args(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    if args.command == "model-sweep":
        changes["emit"] = frozenset({"fig3", "fig4"})
    elif args.command == "simulate":
        changes["emit"] = frozenset({"mc_validation"})
    elif args.command == "crossover":
        changes["emit"] = frozenset({"crossover"})
    elif args.command == "reproduce":
        changes.update(REPRODUCE[args.target])
    return replace(config, **changes)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("QTDLAB_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        manifest = run(config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"qtdlab: error: {exc}", file=sys.stderr)
        return 2
    for entry in manifest.artifacts:
        print(Path(config.output_dir) / entry["path"])
    if not manifest.ok:
        failed = sorted(k for k, v in manifest.validations.items() if not v)
        print(f"qtdlab: validation failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
