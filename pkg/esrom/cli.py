"""
Command-line interface for esrom.

This module contains the main CLI entry point and argument parsing. Each
subcommand runs one pipeline stage and writes its artifacts to --out.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import artifacts
from .config import RunConfig, config_from_dict, load_config, merge_dicts
from .database import ArtifactRegistry
from .errors import ConfigError, EsromError
from .models import CubatureRule
from .pipeline import (
    RuleSet,
    assemble_rom,
    bundle_fingerprint,
    run_fom,
    run_hyperreduce,
    run_pod,
    run_rom,
    setup,
)
from .presets import PRESETS, preset_names
from .report import diagnose
from .rom import cost_estimate
from .utils import (
    print_basis_summary,
    print_report,
    print_rom_summary,
    print_rule_summary,
    print_snapshot_summary,
    print_stage_header,
    write_error_csv,
    write_gnuplot_scripts,
    write_records_csv,
)

logger = logging.getLogger(__name__)

SNAPSHOT_FILE = "snapshots.esnap"
BASIS_FILE = "basis.ebasis"
BUNDLE_FILE = "rom.eromb"
TRAJECTORY_FILE = "rom.etraj"


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--preset", help="Preset name (see 'preset list')")
    common.add_argument("--scale", type=float, help="Multiply the number of cells per direction")
    common.add_argument("--modes", type=int, help="Number of POD modes N")
    common.add_argument("--visc", choices=["v1", "v2", "v3", "none"], help="ROM viscosity treatment")
    common.add_argument(
        "--no-enrich",
        action="store_false",
        dest="enrich",
        default=None,
        help="Do not add entropy-variable snapshots to the POD",
    )
    common.add_argument("--threads", type=int, help="Threads for the ROM flux-pair loop")
    common.add_argument("--out", type=Path, default=Path("."), help="Output directory (default: .)")
    common.add_argument("--registry", type=Path, help="Artifact registry (default: ~/.esrom/registry.db)")
    common.add_argument("--gnuplot", action="store_true", help="Also write gnuplot scripts for CSV outputs")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Entropy-stable hyper-reduced reduced-order models for conservation laws"
    )
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fom", parents=[common], help="Run the full-order model and record snapshots")
    p.add_argument("--diagnostics", action="store_true", help="Write per-step entropy diagnostics (fom.csv)")

    p = sub.add_parser("pod", parents=[common], help="Build a POD basis from snapshots")
    p.add_argument("snapshots", type=Path, help="Snapshot file (.esnap)")

    p = sub.add_parser("hyperreduce", parents=[common], help="Compute cubature rules for a basis")
    p.add_argument("basis", type=Path, help="Basis file (.ebasis)")

    p = sub.add_parser("rom", parents=[common], help="Assemble and integrate the hyper-reduced ROM")
    p.add_argument("basis", type=Path, help="Basis file (.ebasis)")
    p.add_argument(
        "--rules", type=Path, nargs="+",
        help="Rule files (.ecuba); default: the newest rules registered for the basis",
    )

    p = sub.add_parser("diagnose", parents=[common], help="Compare a ROM run (or snapshots) with a reference")
    p.add_argument("result", type=Path, help="Trajectory (.etraj) or snapshot file (.esnap)")
    p.add_argument("--reference", type=Path, required=True, help="Reference snapshot file (.esnap)")
    p.add_argument("--basis", type=Path, help="Basis the trajectory was computed with")
    p.add_argument("--bundle", type=Path, help="ROM bundle, for point counts")

    p = sub.add_parser("preset", help="Preset operations")
    p.add_argument("action", choices=["list"])
    return parser


def _overrides(args) -> dict:
    out: dict = {}
    if args.modes is not None:
        out.setdefault("basis", {})["n_modes"] = args.modes
    if args.enrich is not None:
        out.setdefault("basis", {})["enrich"] = args.enrich
    if args.visc is not None:
        out.setdefault("rom", {})["viscosity"] = args.visc
    if args.threads is not None:
        out.setdefault("rom", {})["threads"] = args.threads
    return out


def resolve_config(args, echo: Optional[dict] = None) -> RunConfig:
    """Config from --config/--preset, else from an upstream artifact's config echo"""
    if args.config is not None or args.preset is not None or echo is None:
        return load_config(args.config, args.preset, _overrides(args), args.scale)
    return config_from_dict(merge_dicts(echo, _overrides(args)))


def _registry(args) -> ArtifactRegistry:
    return ArtifactRegistry(args.registry)


def _check_registered(registry: ArtifactRegistry, path: Path, fingerprint: str):
    """Warn when an input artifact was never registered"""
    if not registry.has_artifact(fingerprint):
        logger.warning("%s is not in the artifact registry %s", path, registry.db_path)
        return
    entry = registry.lookup(fingerprint)[0]
    if entry["path"] != str(Path(path).resolve()):
        logger.info("%s matches registered %s %s", path, entry["kind"], entry["path"])


def _registered_rules(registry: ArtifactRegistry, basis_fp: str) -> List[Path]:
    """Newest existing rule file of each name derived from a basis"""
    latest = {}
    for entry in registry.derived_from(basis_fp):
        path = Path(entry["path"])
        if entry["kind"] == "rule" and path.exists():
            latest[path.name] = path
    return sorted(latest.values())


def _out_dir(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def cmd_fom(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    print_stage_header(f"Full-order model: {cfg.fom.law} {cfg.fom.dim}D, {cfg.fom.k_cells} cells/direction")
    snaps, records, model = run_fom(cfg, diagnostics=args.diagnostics)
    snaps.config = cfg.to_dict()
    path = out / SNAPSHOT_FILE
    artifacts.write_snapshots(path, snaps)
    _registry(args).register(path, "snapshots", snaps.fingerprint)
    print_snapshot_summary(snaps)
    if args.diagnostics:
        write_records_csv(out / "fom.csv", records, model.law.component_names)
        if args.gnuplot:
            write_gnuplot_scripts(out, "fom")
    print(f"  Wrote {path}")
    return 0


def cmd_pod(args) -> int:
    snaps = artifacts.read_snapshots(args.snapshots)
    registry = _registry(args)
    _check_registered(registry, args.snapshots, snaps.fingerprint)
    cfg = resolve_config(args, snaps.config)
    out = _out_dir(args)
    print_stage_header(f"POD basis from {args.snapshots} ({snaps.n_snapshots} snapshots)")
    basis = run_pod(snaps, cfg)
    path = out / BASIS_FILE
    artifacts.write_basis(path, basis, snaps.dim, snaps.dx, cfg.to_dict())
    registry.register(path, "basis", basis.fingerprint, basis.parents)
    print_basis_summary(basis)
    print(f"  Wrote {path}")
    return 0


def cmd_hyperreduce(args) -> int:
    basis, env = artifacts.read_basis(args.basis)
    registry = _registry(args)
    _check_registered(registry, args.basis, basis.fingerprint)
    cfg = resolve_config(args, env.meta.get("config"))
    out = _out_dir(args)
    print_stage_header(f"Hyper-reduction of {args.basis} (N = {basis.n_modes})")
    _, ops = setup(cfg)
    rules = run_hyperreduce(basis, cfg, ops)
    print(f"  Cubature tol: {rules.tol:.3e}")
    for name, rule in rules.items():
        path = out / f"rule_{name}.ecuba"
        artifacts.write_rule(path, rule, ops.dim, ops.dx, cfg.to_dict())
        registry.register(path, "rule", rule.fingerprint, rule.parents)
        print_rule_summary(f"{name.capitalize()} rule ({path})", rule)
    return 0


def _collect_rules(paths: List[Path], basis_fp: str) -> RuleSet:
    found = {}
    for path in paths:
        rule: CubatureRule = artifacts.read_rule(path)
        artifacts.check_parent(rule.parents, basis_fp, f"rule {path}")
        key = "volume" if rule.kind in ("volume", "stabilizing-merged") else rule.kind
        found[key] = rule
    if "volume" not in found:
        raise ConfigError("no volume rule among --rules")
    return RuleSet(found["volume"], found.get("viscous"), found.get("boundary"))


def cmd_rom(args) -> int:
    basis, env = artifacts.read_basis(args.basis)
    cfg = resolve_config(args, env.meta.get("config"))
    out = _out_dir(args)
    registry = _registry(args)
    _check_registered(registry, args.basis, basis.fingerprint)
    rule_paths = args.rules or _registered_rules(registry, basis.fingerprint)
    if not rule_paths:
        raise ConfigError(f"no --rules given and none registered for basis {args.basis}")
    rules = _collect_rules(rule_paths, basis.fingerprint)
    print_stage_header(f"Hyper-reduced ROM (N = {basis.n_modes}, viscosity {cfg.rom.viscosity})")

    law, ops = setup(cfg)
    rom_ops = assemble_rom(basis, rules, cfg, ops)
    fp, parents = bundle_fingerprint(basis, rules, cfg)
    bundle_path = out / BUNDLE_FILE
    artifacts.write_bundle(bundle_path, rom_ops, fp, parents, cfg.to_dict())
    registry.register(bundle_path, "bundle", fp, parents)

    traj = run_rom(rom_ops, cfg, law, parents=[fp, basis.fingerprint])
    traj_path = out / TRAJECTORY_FILE
    artifacts.write_trajectory(traj_path, traj, ops.dim, ops.dx)
    registry.register(traj_path, "trajectory", traj.fingerprint, traj.parents)
    write_records_csv(out / "rom.csv", traj.records, law.component_names)
    if args.gnuplot:
        write_gnuplot_scripts(out, "rom")

    print_rom_summary(cost_estimate(rom_ops), traj.records)
    print(f"  Wrote {bundle_path}, {traj_path}, {out / 'rom.csv'}")
    return 0


def cmd_diagnose(args) -> int:
    reference = artifacts.read_snapshots(args.reference)
    out = _out_dir(args)
    kind = artifacts.read_envelope(args.result).kind
    basis = None
    if args.basis is not None:
        basis, _ = artifacts.read_basis(args.basis)

    if kind == "snapshots":
        candidate = artifacts.read_snapshots(args.result)
    elif kind == "trajectory":
        candidate, _ = artifacts.read_trajectory(args.result)
        if basis is None:
            raise ConfigError("diagnosing a trajectory needs --basis")
        artifacts.check_parent(candidate.parents, basis.fingerprint, f"trajectory {args.result}")
        if reference.fingerprint not in basis.parents:
            logger.warning("reference snapshots are not the ones the basis was trained on")
    else:
        raise ConfigError(f"cannot diagnose a {kind} file")

    counts = {}
    if args.bundle is not None:
        rom_ops, _ = artifacts.read_bundle(args.bundle)
        counts = cost_estimate(rom_ops)

    print_stage_header(f"Diagnostics: {args.result} vs {args.reference}")
    report = diagnose(candidate, reference, basis, counts)
    print_report(report)
    write_error_csv(out / "report_error.csv", report.times, report.errors)
    if args.gnuplot:
        write_gnuplot_scripts(out, "report", has_entropy=False, has_errors=True)
    return 0


def cmd_preset(args) -> int:
    print_stage_header("Presets")
    for name in preset_names():
        data = PRESETS[name]
        fom = data["fom"]
        print(f"  {name:<18s} {fom['law']} {fom['dim']}D, {fom['k_cells']} cells, "
              f"T = {fom['final_time']}  {data.get('description', '')}")
    return 0


COMMANDS = {
    "fom": cmd_fom,
    "pod": cmd_pod,
    "hyperreduce": cmd_hyperreduce,
    "rom": cmd_rom,
    "diagnose": cmd_diagnose,
    "preset": cmd_preset,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the esrom CLI"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except EsromError as e:
        print(f"Error: {e}")
        return e.exit_code
    except OSError as e:
        print(f"Error: {e}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
