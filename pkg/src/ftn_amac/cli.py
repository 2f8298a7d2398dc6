"""Command-line driver: ``ftn-amac <command> --config PATH --out DIR``.

Commands
--------
region    corner traces per configured scenario, per seed, plus seed averages
sumrate   seed-averaged sum rate at ``alpha = 1/2`` over an SNR grid for the
          four synchronous/asynchronous x Nyquist/FTN presets
ablation  region traces for the full scheme, its ablations and the
          ``(delta, beta) = (1, 0)`` reference
validate  oracle cross-checks at ``N = 4``; nonzero exit status on failure

``sumrate`` and ``ablation`` derive their presets from the first configured
scenario.

CSV files use ``.12g`` number formatting, ``\\n`` line endings and UTF-8.
Existing files are never replaced unless ``--overwrite`` is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import RNG_ALGORITHM, sample_channel
from .config import ConfigError, ExperimentConfig, parse_config
from .region import (RegionPoint, ScenarioConfig, fig2_scenarios, fig3_scenarios, temporal_plan,
                     trace_region)
from .validation import run_validation

__all__ = ["RunManifest", "run", "main", "COMMANDS"]

log = logging.getLogger("ftn_amac")

COMMANDS = ("region", "sumrate", "ablation", "validate")
REGION_HEADER = "scenario,seed,alpha,r1,r2,r1_max,r2_max,r_sum"
MEAN_HEADER = "scenario,alpha,r1,r2,r1_max,r2_max,r_sum"
SUMRATE_HEADER = "scenario,snr_db,mean_sum_rate"

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str | None
    output_dir: str | None
    master_seed: int = 0
    parallelism: int = 1
    overwrite: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if self.command != "validate" and not self.output_dir:
            raise ValueError(f"command {self.command!r} needs an output directory")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".12g")


def _csv(header: str, rows) -> str:
    lines = [header]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- work items (module level so worker processes can import them) ---------------


def _trace_job(job):
    config, seed, master_seed = job
    channel = sample_channel(seed, config.m, config.l, master_seed)
    trace = trace_region(config, channel)
    return [p.astuple() for p in trace.points]


def _sumrate_job(job):
    config, seed, master_seed, snrs = job
    channel = sample_channel(seed, config.m, config.l, master_seed)
    out = []
    for snr in snrs:
        cfg = config.replace(snr_db_1=snr, snr_db_2=snr)
        out.append(trace_region(cfg, channel, alphas=(0.5,)).points[0].r_sum)
    return out


def _map(fn, jobs, parallelism):
    """Order-stable map; results come back in job order regardless of pool size."""
    jobs = list(jobs)
    if parallelism == 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * parallelism))))


# -- commands --------------------------------------------------------------------


def _mean_points(rows_by_seed, alphas):
    data = np.array([[r[1:] for r in rows] for rows in rows_by_seed])
    mean = data.sum(axis=0) / len(rows_by_seed)
    return [RegionPoint(a, *row) for a, row in zip(alphas, mean)]


def _region_outputs(prefix, scenarios):
    out = {}
    for sc in scenarios:
        out[sc.name] = (f"{prefix}_{sc.name}.csv", f"{prefix}_{sc.name}_mean.csv")
    return out


def _run_traces(prefix, scenarios, manifest, out_dir):
    names = _region_outputs(prefix, scenarios)
    jobs = [(sc, seed, manifest.master_seed) for sc in scenarios for seed in sc.seeds]
    results = _map(_trace_job, jobs, manifest.parallelism)
    pos = 0
    for sc in scenarios:
        per_seed = results[pos:pos + len(sc.seeds)]
        pos += len(sc.seeds)
        rows = [(sc.name, seed, *pt) for seed, pts in zip(sc.seeds, per_seed) for pt in pts]
        trace_file, mean_file = names[sc.name]
        _write(out_dir / trace_file, _csv(REGION_HEADER, rows))
        mean = _mean_points(per_seed, sc.alpha_grid)
        _write(out_dir / mean_file, _csv(MEAN_HEADER, [(sc.name, *p.astuple()) for p in mean]))
        log.info("%s: %d seeds x %d alphas -> %s", sc.name, len(sc.seeds), len(sc.alpha_grid), trace_file)


def _preset_base(cfg: ExperimentConfig) -> ScenarioConfig:
    """First configured scenario; presets toggle its flags, so it must carry real delta and tau."""
    base = cfg.scenarios[0]
    if not (base.ftn and base.asynchronous):
        raise ConfigError(f"scenario {base.name!r} is the preset base and must keep ftn and async enabled; "
                          "the presets switch them off themselves")
    return base


def _run_sumrate(scenarios, snrs, manifest, out_dir):
    jobs = [(sc, seed, manifest.master_seed, snrs) for sc in scenarios for seed in sc.seeds]
    results = _map(_sumrate_job, jobs, manifest.parallelism)
    rows, pos = [], 0
    for sc in scenarios:
        block = np.array(results[pos:pos + len(sc.seeds)])
        pos += len(sc.seeds)
        mean = block.sum(axis=0) / len(sc.seeds)
        rows += [(sc.name, snr, v) for snr, v in zip(snrs, mean)]
    _write(out_dir / "sumrate.csv", _csv(SUMRATE_HEADER, rows))


def _scenario_meta(sc: ScenarioConfig):
    plan = temporal_plan(sc)
    meta = dataclasses.asdict(sc)
    meta["seeds"] = [min(sc.seeds), max(sc.seeds), len(sc.seeds)] if sc.seeds else []
    meta["alpha_grid"] = [len(sc.alpha_grid)]
    meta["g_min_eig"] = plan.gram.g_min_eig
    meta["q_min_eig"] = plan.gram.q_min_eig
    return meta


def _write_manifest(out_dir, manifest, config_text, scenarios, outputs):
    from . import __version__

    doc = {
        "command": manifest.command,
        "package_version": __version__,
        "master_seed": manifest.master_seed,
        "rng": RNG_ALGORITHM,
        "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
        "outputs": outputs,
        "scenarios": [_scenario_meta(sc) for sc in scenarios],
    }
    _write(out_dir / f"{manifest.command}_manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _planned(command, cfg):
    if command == "region":
        scenarios = cfg.scenarios
    elif command == "ablation":
        scenarios = fig3_scenarios(_preset_base(cfg))
    else:
        scenarios = fig2_scenarios(_preset_base(cfg))
    if command == "sumrate":
        files = ["sumrate.csv"]
    else:
        files = [f for pair in _region_outputs(command, scenarios).values() for f in pair]
    return scenarios, files + [f"{command}_manifest.json"]


def run(manifest: RunManifest) -> int:
    """Execute one command; returns the process exit status."""
    text = ""
    if manifest.config_path:
        try:
            text = Path(manifest.config_path).read_text(encoding="utf-8")
        except OSError as exc:
            log.error("cannot read config: %s", exc)
            return EXIT_USAGE
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        log.error("%s: %s", manifest.config_path or "<default>", exc)
        return EXIT_USAGE

    if manifest.command == "validate":
        results = run_validation(cfg.scenarios[0])
        for r in results:
            print(r.line())
            for case, err in r.failures[:5]:
                print(f"      {case}: {err:.3e}")
        ok = all(r.passed for r in results)
        print("validate:", "all checks passed" if ok else "FAILED")
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    out_dir = Path(manifest.output_dir)
    try:
        scenarios, files = _planned(manifest.command, cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    if len({s.name for s in scenarios}) != len(scenarios):
        log.error("scenario names must be unique")
        return EXIT_USAGE
    clash = [f for f in files if (out_dir / f).exists()]
    if clash and not manifest.overwrite:
        log.error("refusing to overwrite %s in %s (pass --overwrite)", ", ".join(clash), out_dir)
        return EXIT_USAGE
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        if manifest.command == "sumrate":
            _run_sumrate(scenarios, cfg.snr_grid, manifest, out_dir)
        else:
            _run_traces(manifest.command, scenarios, manifest, out_dir)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        log.error("computation failed: %s", exc)
        return EXIT_COMPUTE
    _write_manifest(out_dir, manifest, text, scenarios, files[:-1])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftn-amac", description=__doc__.splitlines()[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value configuration file (default: built-in scenario)")
    p.add_argument("--out", help="output directory (not needed for validate)")
    p.add_argument("--seed", type=int, default=0, help="master seed for channel sampling")
    p.add_argument("--parallelism", type=int, default=1, help="worker processes")
    p.add_argument("--overwrite", action="store_true", help="replace existing output files")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        manifest = RunManifest(command=args.command, config_path=args.config, output_dir=args.out,
                               master_seed=args.seed, parallelism=args.parallelism,
                               overwrite=args.overwrite)
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
