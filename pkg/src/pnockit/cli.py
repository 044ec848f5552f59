"""
Command-line front end.

    pnockit penalty-sweep --config run.json --br-list 10,25 --out sweep.csv
    pnockit design   --config run.json --out out/
    pnockit rules    --config run.json --design out/design.json --out out/rules
    pnockit simulate --config run.json --policy proteus --rules out/rules --out out/
    pnockit compare  --config run.json --out out/

Exit status: 0 success, 2 configuration or input error, 3 infeasible link,
4 simulation error. ``PROTEUS_SEED`` overrides the traffic seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from .config import ConfigError, RunConfig, load_config
from .io_utils import atomic_write
from .link_models import filter_crosstalk_penalty, worst_penalty_db
from .loss_map import IlMatrixParseError
from .metrics import compare
from .optimizer import LinkInfeasibleError, StaticDesign, build_static_design, design_sweep_csv
from .rules import RuleCodecError, build_rule_tables, read_rule_tables, write_rule_tables
from .sim import POLICIES, SimConfigError, SimulationError, budget_audit, run
from .traffic import TraceParseError, generate_arrays

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SIM = 0, 2, 3, 4


class _Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def progress(self, msg: str) -> None:
        if not self.quiet:
            print(msg, file=sys.stderr)

    def result(self, msg: str) -> None:
        print(msg)


def _seed_override() -> int | None:
    raw = os.environ.get("PROTEUS_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"PROTEUS_SEED must be an integer, got {raw!r}") from None


def _out_path(args, cfg: RunConfig, default_name: str) -> str:
    """--out may name a file or a directory; default is the config's output directory."""
    out = args.out or cfg.output_dir
    if out.endswith(os.sep) or os.path.isdir(out) or not os.path.splitext(out)[1]:
        return os.path.join(out, default_name)
    return out


def _out_dir(args, cfg: RunConfig) -> str:
    return args.out or cfg.output_dir


def _fmt(x: float) -> str:
    return "" if not math.isfinite(x) else repr(float(x))


def cmd_penalty_sweep(args, cfg: RunConfig, con: _Console) -> int:
    brs = cfg.space.br_set_gbps
    if args.br_list:
        try:
            brs = tuple(float(b) for b in args.br_list.split(","))
        except ValueError:
            raise ConfigError(f"--br-list must be comma-separated numbers, got {args.br_list!r}") from None
        if any(not b > 0 for b in brs):
            raise ConfigError("--br-list values must be positive")
    lm = cfg.link_models
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["br_gbps", "q", "fil_xtalk_db", "total_pp_db"])
    for br in brs:
        for q in cfg.space.q_grid:
            link = lm.link_template.with_(q_factor=q, bitrate_gbps=br)
            fil = filter_crosstalk_penalty(link, model=lm.penalty_model.filter_model) \
                if lm.penalty_model.enabled else 0.0
            w.writerow([repr(br), repr(q), _fmt(fil), _fmt(worst_penalty_db(link, lm.penalty_model))])
    path = _out_path(args, cfg, "penalty_sweep.csv")
    atomic_write(path, buf.getvalue())
    con.progress(f"wrote {path}")
    return EXIT_OK


def _design(cfg: RunConfig) -> tuple[StaticDesign, object]:
    m = cfg.il_matrix()
    lm = cfg.link_models
    d = build_static_design(m, cfg.space, lm.link_template, lm.penalty_model, lm.sens_model,
                            cfg.strategy, cfg.p_max_dbm, cfg.system.packet_size_bits)
    return d, m


def cmd_design(args, cfg: RunConfig, con: _Console) -> int:
    d, _ = _design(cfg)
    out = _out_dir(args, cfg)
    atomic_write(os.path.join(out, "design.json"), d.to_json())
    atomic_write(os.path.join(out, "design_sweep.csv"), design_sweep_csv(d))
    con.progress(f"wrote {len(d.per_il_points)} design points to {out}")
    con.result(f"static P_laser = {d.p_laser_dbm:.1f} dBm (worst IL {d.worst_il_db:.2f} dB, "
               f"Q {d.q_at_worst:.0f}, BR {d.br_at_worst:g} Gb/s)")
    return EXIT_OK


def _load_design(path: str | None, cfg: RunConfig) -> tuple[StaticDesign, object]:
    if not path:
        return _design(cfg)
    try:
        with open(path, encoding="utf-8") as fh:
            d = StaticDesign.from_json(fh.read())
    except FileNotFoundError:
        raise ConfigError(f"design file not found: {path}") from None
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: malformed design ({exc})") from None
    return d, cfg.il_matrix()


def cmd_rules(args, cfg: RunConfig, con: _Console) -> int:
    d, m = _load_design(args.design, cfg)
    tables = build_rule_tables(d, m, space=cfg.space)
    out = args.out or os.path.join(cfg.output_dir, "rules")
    written = write_rule_tables(tables, out, cfg.space)
    con.progress(f"wrote {len(written)} files to {out}")
    return EXIT_OK


def _simulate(cfg: RunConfig, policy: str, traffic, rules_dir: str | None, design_path: str | None):
    sys_cfg = cfg.system.with_(policy=policy)
    m = cfg.il_matrix()
    rules = design = None
    if policy == "proteus":
        design, m = _load_design(design_path, cfg)
        if rules_dir:
            try:
                rules = read_rule_tables(rules_dir, sys_cfg.n_gis, cfg.space)
            except FileNotFoundError as exc:
                raise ConfigError(f"rule table missing: {exc.filename}") from None
        else:
            rules = build_rule_tables(design, m, space=cfg.space)
    return run(sys_cfg, traffic, rules, design, m, cfg.link_models, cfg.space, cfg.loss_params)


def cmd_simulate(args, cfg: RunConfig, con: _Console) -> int:
    policy = args.policy or cfg.system.policy
    traffic = generate_arrays(cfg.traffic, cfg.dims)
    con.progress(f"simulating {len(traffic)} packets under {policy}")
    report = _simulate(cfg, policy, traffic, args.rules, args.design)
    violations = budget_audit(report, cfg.link_models)
    out = _out_dir(args, cfg)
    atomic_write(os.path.join(out, f"report_{policy}.json"), report.to_json())
    if "csv" in cfg.formats:
        atomic_write(os.path.join(out, f"packets_{policy}.csv"), report.records.to_csv())
        atomic_write(os.path.join(out, f"power_{policy}.csv"), report.power_csv())
    lat = report.avg_latency_ns
    con.result(f"{policy}: delivered {report.n_delivered}/{report.n_injected}, "
               f"avg latency {'n/a' if lat is None else f'{lat:.3f} ns'}, "
               f"budget violations {len(violations)}")
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig, con: _Console) -> int:
    traffic = generate_arrays(cfg.traffic, cfg.dims)
    reports = []
    for policy in ("proteus", "opa", "abm", "static"):
        con.progress(f"simulating {len(traffic)} packets under {policy}")
        reports.append(_simulate(cfg, policy, traffic, args.rules, args.design))
    table = compare(reports, cfg.overhead, cfg.thermal, cfg.laser)
    out = _out_dir(args, cfg)
    atomic_write(os.path.join(out, "comparison.csv"), table.to_csv())
    atomic_write(os.path.join(out, "comparison.json"), table.to_json())
    con.result(table.to_csv().rstrip("\n"))
    return EXIT_OK


COMMANDS = {
    "penalty-sweep": cmd_penalty_sweep,
    "design": cmd_design,
    "rules": cmd_rules,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pnockit", description="Photonic NoC link design and policy simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration (defaults apply when omitted)")
        sp.add_argument("--out", help="output file or directory")
        sp.add_argument("--quiet", action="store_true", help="suppress progress output")

    sp = sub.add_parser("penalty-sweep", help="filter and total power penalty over the Q grid")
    common(sp)
    sp.add_argument("--br-list", help="comma-separated bitrates in Gb/s (default: search space)")

    sp = sub.add_parser("design", help="static laser power and per-IL (Q, BR) design points")
    common(sp)

    sp = sub.add_parser("rules", help="per-GI rule tables from a design")
    common(sp)
    sp.add_argument("--design", help="design.json from the design command (recomputed when omitted)")

    for name, help_ in (("simulate", "run one policy"), ("compare", "run every policy on one workload")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--design", help="design.json (recomputed when omitted)")
        sp.add_argument("--rules", help="directory of rule tables (rebuilt when omitted)")
        if name == "simulate":
            sp.add_argument("--policy", choices=POLICIES, help="laser policy (default: config system.policy)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    con = _Console(args.quiet)
    try:
        cfg = load_config(args.config, _seed_override())
        return COMMANDS[args.command](args, cfg, con)
    except (ConfigError, IlMatrixParseError, TraceParseError, RuleCodecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LinkInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SimConfigError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
