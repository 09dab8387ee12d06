"""Command-line entry point: ``zsbilling <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import tracemalloc
from pathlib import Path

from . import datasets, overhead, privacy
from .billing import write_bills_csv
from .core_types import MINUTES_PER_DAY, BillingPeriodConfig
from .errors import BillingError
from .network import SimConfig, Simulation
from .noise import new_secret, read_seed_file, write_seed_file
from .state import load_state, save_state

CONFIG_DIR_ENV = "ZSBILLING_CONFIG_DIR"
SCENARIO_KEYS = {"interval_minutes": int, "days": int, "sigma": float, "period_id": int,
                 "max_adjustments": int, "scenario": int}

# Published hardware-specific measurements, shown for comparison only.
PUBLISHED_YEARLY_RUNTIME_S = 3.945401202
PUBLISHED_MONTHLY_MEMORY_MB = 5.91484

log = logging.getLogger("zsbilling")


class CliError(Exception):
    pass


def _config_dir() -> Path | None:
    value = os.environ.get(CONFIG_DIR_ENV)
    return Path(value) if value else None


def read_key_values(path: str | Path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def load_scenario_config(path: str | Path | None) -> dict:
    if path is None:
        cfg_dir = _config_dir()
        if cfg_dir is None or not (cfg_dir / "scenario.conf").exists():
            return {}
        path = cfg_dir / "scenario.conf"
    raw = read_key_values(path)
    out = {}
    for key, value in raw.items():
        if key not in SCENARIO_KEYS:
            raise CliError(f"{path}: unknown key {key!r}")
        try:
            out[key] = SCENARIO_KEYS[key](value)
        except ValueError:
            raise CliError(f"{path}: bad value for {key}: {value!r}") from None
    return out


def _parse_list(text: str, kind=float) -> list:
    try:
        return [kind(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"cannot parse list {text!r}") from None


def _infer_days(dataset: str, interval_minutes: int) -> int:
    per_day = -(-MINUTES_PER_DAY // interval_minutes)
    highest = 0
    for _, (_, index, _) in datasets.read_rows(dataset, ["meter_id", "interval_index", "kwh"]):
        try:
            highest = max(highest, int(index))
        except ValueError:
            raise CliError(f"{dataset}: bad interval_index {index!r}") from None
    if highest == 0 or highest % per_day:
        raise CliError(f"{dataset}: {highest} intervals is not a whole number of days; pass --days")
    return highest // per_day


def _period(args, defaults: dict) -> BillingPeriodConfig:
    minutes = args.interval_mins or defaults.get("interval_minutes", 15)
    days = args.days or defaults.get("days") or _infer_days(args.dataset, minutes)
    return BillingPeriodConfig(minutes, days)


def _areas_for(consumption, tariffs, areas_path) -> dict[int, int]:
    if areas_path:
        areas = datasets.load_areas_csv(areas_path)
        missing = sorted(set(consumption) - set(areas))
        if missing:
            raise CliError(f"{areas_path}: no area for meters {missing[:5]}")
        return {m: areas[m] for m in consumption}
    if len(tariffs) != 1:
        raise CliError("tariffs cover several areas; pass --areas meter_id,area_id map")
    (area,) = tariffs
    return {m: area for m in consumption}


# -- subcommands ------------------------------------------------------------


def cmd_simulate(args) -> int:
    defaults = load_scenario_config(args.config)
    period = _period(args, defaults)
    consumption = datasets.load_consumption_csv(args.dataset, period)
    tariffs = datasets.load_tariffs_csv(args.tariffs, period)
    areas = _areas_for(consumption, tariffs, args.areas)
    secrets = read_seed_file(args.seeds)
    config = SimConfig(
        areas=areas,
        period=period,
        sigma=args.sigma if args.sigma is not None else defaults.get("sigma", 1.0),
        secrets=secrets,
        period_id=args.period_id if args.period_id is not None else defaults.get("period_id", 0),
        max_adjustments=args.max_adjustments if args.max_adjustments is not None
        else defaults.get("max_adjustments", 1),
        scenario=2 if args.new_tariffs else defaults.get("scenario", 1),
    )
    sim = Simulation(config, consumption, tariffs, record_trace=bool(args.trace))
    sim.run_period()
    status = _adjust(sim, args.new_tariffs) if args.new_tariffs else 0
    write_bills_csv(args.out, sim.bill_records())
    if args.trace:
        sim.write_trace(args.trace)
    if args.state:
        save_state(args.state, sim)
    log.info("billed %d meters over %d intervals", len(sim.meters), period.interval_count)
    return status


def _adjust(sim: Simulation, path) -> int:
    """Apply new tariffs; returns 2 if any meter refused, keeping its earlier bill."""
    new_tariffs = datasets.load_tariffs_csv(path, sim.config.period)
    outcome = sim.adjust_tariffs(new_tariffs)
    for meter, exc in sorted(outcome.rejected.items()):
        print(f"warning: adjustment rejected, previous bill kept: {exc}", file=sys.stderr)
    return 2 if outcome.rejected else 0


def cmd_rebill(args) -> int:
    sim = load_state(args.state)
    status = _adjust(sim, args.new_tariffs)
    write_bills_csv(args.out, sim.bill_records())
    if args.trace:
        sim.write_trace(args.trace)
    save_state(args.save_state or args.state, sim)
    return status


def cmd_privacy_eval(args) -> int:
    period = _period(args, {})
    consumption = datasets.load_consumption_csv(args.dataset, period)
    tariffs = datasets.load_tariffs_csv(args.tariffs, period)
    if args.area is not None:
        if args.area not in tariffs:
            raise CliError(f"no tariffs for area {args.area}")
        schedule = tariffs[args.area]
    elif len(tariffs) == 1:
        (schedule,) = tariffs.values()
    else:
        raise CliError("tariffs cover several areas; pick one with --area")
    rows = privacy.noise_scale_sweep(
        list(consumption.values()), schedule, _parse_list(args.scales), bins=args.bins, seed=args.seed,
        sigma=args.sigma, config=period, binning=args.binning,
    )
    privacy.write_sweep_csv(args.out, rows)
    for scale, js in rows:
        print(f"scale {scale:8.4g}  JS {js:.5f}")
    return 0


def cmd_overhead_report(args) -> int:
    links_path = args.links
    if links_path is None and _config_dir() is not None and (_config_dir() / "links.ini").exists():
        links_path = _config_dir() / "links.ini"
    links = overhead.load_links(links_path) if links_path else overhead.default_links()
    payloads = _parse_list(args.payloads, int)
    if not payloads:
        raise CliError("no payload sizes given")
    rows = overhead.overhead_table(payloads, links)
    overhead.write_overhead_csv(args.out, rows)

    print(f"minimum-bandwidth payload: {overhead.min_bandwidth_payload(payloads)} B")
    for name, link in links.items():
        print(f"{name}: frame {link.per_frame_overhead} B, max frame payload {link.max_frame_payload} B, "
              f"per fragment {link.per_fragment_overhead} B, per datagram {link.per_datagram_overhead} B, "
              f"{link.bandwidth_per_meter:g} kbps per meter")
    for payload, name, modelled, published in sorted(set(overhead.residuals(rows))):
        diff = modelled - published
        print(f"residual {name} payload {payload} B: model {modelled} B vs published {published} B "
              f"({diff:+d} B, {100 * diff / published:+.3f} %)")
    if args.measure:
        _measure()
    print(f"informational: published yearly protocol runtime {PUBLISHED_YEARLY_RUNTIME_S} s and monthly memory "
          f"{PUBLISHED_MONTHLY_MEMORY_MB} MB are hardware-specific and not reproduced")
    return 0


def _measure() -> None:
    from .benchmarks import run_single_meter_year

    tracemalloc.start()
    start = time.perf_counter()
    result = run_single_meter_year()
    elapsed = time.perf_counter() - start
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    print(f"measured: one meter, {result.intervals} intervals in {elapsed:.3f} s; "
          f"tracemalloc peak {peak / 1e6:.3f} MB; analytic S_bill {result.analytic_bytes / 1e6:.3f} MB")


def cmd_provision_seeds(args) -> int:
    if args.meters:
        meters = _parse_list(args.meters, int)
    else:
        meters = sorted({int(m) for _, (m, _, _) in datasets.read_rows(args.dataset, ["meter_id", "interval_index", "kwh"])})
    write_seed_file(args.out, {m: new_secret() for m in meters})
    return 0


def cmd_generate_dataset(args) -> int:
    period = BillingPeriodConfig(args.interval_mins, args.days)
    ds = datasets.generate_synthetic(args.meters, period, args.seed)
    ds.to_csv(args.out)
    if args.tariffs_out:
        areas = list(range(1, args.areas + 1))
        datasets.write_tariffs_csv(args.tariffs_out, datasets.generate_tariffs(areas, period, args.seed))
        if args.areas_out:
            meters = sorted(ds.series)
            datasets.write_areas_csv(args.areas_out, {m: areas[i % len(areas)] for i, m in enumerate(meters)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zsbilling", description="Zero-sum noise smart-meter billing toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a billing period end to end")
    p.add_argument("--dataset", required=True)
    p.add_argument("--tariffs", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--interval-mins", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--trace")
    p.add_argument("--areas", help="CSV meter_id,area_id (required with several tariff areas)")
    p.add_argument("--period-id", type=int)
    p.add_argument("--max-adjustments", type=int)
    p.add_argument("--config", help="key=value scenario file")
    p.add_argument("--state", help="write simulation state here for a later rebill")
    p.add_argument("--new-tariffs", help="run the tariff adjustment round in the same invocation")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rebill", help="apply a tariff adjustment to a saved simulation")
    p.add_argument("--state", required=True)
    p.add_argument("--new-tariffs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.add_argument("--save-state", help="where to write the updated state (default: overwrite --state)")
    p.set_defaults(func=cmd_rebill)

    p = sub.add_parser("privacy-eval", help="JS divergence across noise scales")
    p.add_argument("--dataset", required=True)
    p.add_argument("--tariffs", required=True)
    p.add_argument("--scales", default=",".join(f"{s:.6g}" for s in privacy.TABLE_SCALES))
    p.add_argument("--bins", type=int, default=privacy.DEFAULT_BINS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--binning", choices=sorted(privacy.BINNINGS), default="reference")
    p.add_argument("--interval-mins", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--area", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_privacy_eval)

    p = sub.add_parser("overhead-report", help="per-link packet sizes and transmission times")
    p.add_argument("--links", help="link-stack config file (default: built-in stacks)")
    p.add_argument("--payloads", default="4,11520,4,4")
    p.add_argument("--out", required=True)
    p.add_argument("--measure", action="store_true", help="also time a one-year single-meter run")
    p.set_defaults(func=cmd_overhead_report)

    p = sub.add_parser("provision-seeds", help="write fresh 32-byte meter secrets")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--dataset")
    group.add_argument("--meters", help="comma-separated meter ids")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_provision_seeds)

    p = sub.add_parser("generate-dataset", help="write a synthetic consumption CSV")
    p.add_argument("--meters", type=int, default=10)
    p.add_argument("--interval-mins", type=int, default=15)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--tariffs-out")
    p.add_argument("--areas", type=int, default=1)
    p.add_argument("--areas-out")
    p.set_defaults(func=cmd_generate_dataset)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (BillingError, CliError, OSError) as exc:
        print(f"zsbilling {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
