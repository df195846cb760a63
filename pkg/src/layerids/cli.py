"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 input parse error, 3 runtime/I-O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .alerts import AlertLog, CorruptRecordError
from .baseline import DEFAULT_SEED, benchmark_master
from .benchmark import (DEFAULT_FLOOD, default_layers, default_partition, make_fixtures,
                        run_flood_bench)
from .config import ConfigError, default_config_dir, load_layers, load_scenario
from .engine import LayerConfig, LayeredEngine
from .packets import PcapError, read_pcap_file, write_pcap_file
from .partitioner import INCLUDE_ALL, UNBOUNDED, PartitionParams, apply_partition, partition
from .report import RunReport
from .rules import RuleParseError, read_ruleset
from .trafficgen import FloodSpec, generate_flood

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("layerids")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _valid_time(text: str):
    if text == INCLUDE_ALL.value:
        return INCLUDE_ALL
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer or 'include-all'") from None


def _max_num(text: str):
    if text == UNBOUNDED.value:
        return UNBOUNDED
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'unbounded'") from None
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer or 'unbounded'")
    return n


def _non_negative(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def cmd_train(args) -> int:
    master = read_ruleset(args.rules)
    stream, skipped = read_pcap_file(args.pcap)
    if skipped:
        log.warning("skipped %d undecodable frames", skipped)
    with AlertLog(args.alerts_out) as alerts:
        engine = LayeredEngine([LayerConfig(args.layer_id, "primary", master)], alerts)
        engine.run(stream)
        print(f"{len(alerts)} alerts from {len(stream)} packets", file=sys.stderr)
    return EXIT_OK


def cmd_partition(args) -> int:
    master = read_ruleset(args.rules)
    log_, skipped = AlertLog.load(args.alerts, strict=not args.lenient)
    if skipped:
        log.warning("skipped %d corrupt alert records", skipped)
    params = PartitionParams(args.min_freq, args.valid_time, args.max_num)
    part = partition(master, log_.stats(), params)
    out = Path(args.out_dir)
    apply_partition(master, part, out, args.primary_name, args.complement_name)
    print(len(part.primary_sids))
    return EXIT_OK


def _layers_or_default(args) -> list[LayerConfig] | None:
    if args.layers:
        return load_layers(args.layers)
    cfg_dir = default_config_dir()
    if cfg_dir is not None and (cfg_dir / "layers.json").exists():
        return load_layers(cfg_dir / "layers.json")
    return None


def cmd_replay(args) -> int:
    layers = _layers_or_default(args)
    if layers is None:
        raise UsageError("--layers is required (or set LAYERIDS_CONFIG_DIR)")
    stream, skipped = read_pcap_file(args.pcap)
    if skipped:
        log.warning("skipped %d undecodable frames", skipped)
    with AlertLog(args.alerts_out) as alerts:
        results = LayeredEngine(layers, alerts).run(stream)
    report = RunReport.build("replay", layers, results, {"pcap": str(args.pcap), "skipped_frames": skipped})
    report.write(args.report_out)
    print(report.table())
    return EXIT_OK


def _flood_spec(args, base: FloodSpec) -> FloodSpec:
    return FloodSpec(
        rate_pps=args.rate_pps if args.rate_pps is not None else base.rate_pps,
        duration_us=args.duration_us if args.duration_us is not None else base.duration_us,
        attack_fraction=args.attack_fraction if args.attack_fraction is not None else base.attack_fraction,
        seed=args.seed if args.seed is not None else base.seed,
    )


def _scenario(args):
    path = args.scenario
    if path is None:
        cfg_dir = default_config_dir()
        if cfg_dir is not None and (cfg_dir / "flood.json").exists():
            path = cfg_dir / "flood.json"
    if path is None:
        return _flood_spec(args, DEFAULT_FLOOD), None
    spec, rules_path = load_scenario(path)
    return _flood_spec(args, spec), rules_path


def cmd_flood_bench(args) -> int:
    spec, rules_path = _scenario(args)
    layers = _layers_or_default(args)
    if layers is None:
        master = benchmark_master(seed=DEFAULT_SEED)
        primary, complement = default_partition(master)
        layers = default_layers(master, primary, complement)
        attack = master
    else:
        if rules_path is not None:
            attack = read_ruleset(rules_path)
        else:
            attack = max((c.ruleset for c in layers), key=len)
    report = run_flood_bench(layers, attack, spec)
    report.write(args.report_out)
    print(report.table())
    return EXIT_OK


def cmd_gen_flood(args) -> int:
    spec, rules_path = _scenario(args)
    if args.rules:
        rules_path = args.rules
    attack = read_ruleset(rules_path) if rules_path else benchmark_master(seed=DEFAULT_SEED)
    stream = generate_flood(attack, spec)
    write_pcap_file(stream, args.pcap_out)
    print(f"{len(stream)} packets written to {args.pcap_out}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    paths = make_fixtures(args.out_dir, seed=args.seed, with_pcap=not args.no_pcap)
    for key, path in paths.items():
        print(f"{key}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="layerids", description="Multi-layer signature IDS: training, partitioning, replay, flood benchmark.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="match the full master ruleset over a pcap (no drops) and log alerts")
    t.add_argument("--rules", required=True, help="master rule file")
    t.add_argument("--pcap", required=True)
    t.add_argument("--alerts-out", required=True, help="alert log (JSONL, appended)")
    t.add_argument("--layer-id", default="train")
    t.set_defaults(func=cmd_train)

    pa = sub.add_parser("partition", help="split the master ruleset by alert frequency")
    pa.add_argument("--rules", required=True, help="master rule file")
    pa.add_argument("--alerts", required=True, help="alert log (JSONL)")
    pa.add_argument("--min-freq", type=_non_negative, default=1)
    pa.add_argument("--valid-time", type=_valid_time, default=INCLUDE_ALL,
                    help="virtual-time threshold in microseconds or 'include-all'")
    pa.add_argument("--max-num", type=_max_num, default=UNBOUNDED, help="positive integer or 'unbounded'")
    pa.add_argument("--out-dir", default=".")
    pa.add_argument("--primary-name", default="signature.rule")
    pa.add_argument("--complement-name", default="complement.rule")
    pa.add_argument("--lenient", action="store_true", help="skip corrupt alert records instead of failing")
    pa.set_defaults(func=cmd_partition)

    r = sub.add_parser("replay", help="replay a pcap through configured layers")
    r.add_argument("--layers", help="layer config (JSON)")
    r.add_argument("--pcap", required=True)
    r.add_argument("--alerts-out", required=True)
    r.add_argument("--report-out", required=True, help="stats CSV path")
    r.set_defaults(func=cmd_replay)

    def flood_flags(sp):
        sp.add_argument("--scenario", help="flood scenario file (JSON)")
        sp.add_argument("--rate-pps", type=float)
        sp.add_argument("--duration-us", type=_non_negative)
        sp.add_argument("--attack-fraction", type=float)
        sp.add_argument("--seed", type=int)

    f = sub.add_parser("flood-bench", help="full-database vs partitioned drop-rate benchmark")
    f.add_argument("--layers", help="layer config (JSON); default: built-in 3211/33 benchmark")
    flood_flags(f)
    f.add_argument("--report-out", required=True, help="stats CSV path")
    f.set_defaults(func=cmd_flood_bench)

    g = sub.add_parser("gen-flood", help="write a generated flood as pcap")
    flood_flags(g)
    g.add_argument("--rules", help="attack ruleset (default: built-in benchmark master)")
    g.add_argument("--pcap-out", required=True)
    g.set_defaults(func=cmd_gen_flood)

    x = sub.add_parser("fixtures", help="write benchmark master, partition, baseline pcap/alerts and configs")
    x.add_argument("--out-dir", required=True)
    x.add_argument("--seed", type=int, default=DEFAULT_SEED)
    x.add_argument("--no-pcap", action="store_true")
    x.set_defaults(func=cmd_fixtures)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"layerids: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuleParseError, PcapError, CorruptRecordError, ConfigError) as exc:
        print(f"layerids: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError, KeyError) as exc:
        print(f"layerids: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
