"""Command-line front end: ablation matrix, preference learning, single episodes.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import EngineConfig, load_config
from .harness import run_learning, run_matrix, run_episode
from .observation import SENSOR_GROUPS, ConfigError
from .personalization import SimulatedUser
from .report import write_learning_reports, write_matrix_reports
from .scenarios import GROUP_IDS, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def parse_groups(spec: str) -> list[str]:
    """Parse "S1..S10", "S1,S4,S7" or a mix of both into group ids."""
    ids: list[str] = []
    for token in spec.replace(" ", ",").split(","):
        if not token:
            continue
        if ".." in token:
            lo, hi = token.split("..", 1)
            if lo not in SENSOR_GROUPS or hi not in SENSOR_GROUPS:
                raise ConfigError(f"unknown sensor group range {token!r}")
            lo_i, hi_i = GROUP_IDS.index(lo), GROUP_IDS.index(hi)
            if lo_i > hi_i:
                raise ConfigError(f"empty sensor group range {token!r}")
            ids.extend(GROUP_IDS[lo_i : hi_i + 1])
        else:
            if token not in SENSOR_GROUPS:
                raise ConfigError(f"unknown sensor group {token!r}")
            ids.append(token)
    if not ids:
        raise ConfigError("no sensor groups given")
    return ids


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=0, help="run seed")
    parser.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    parser.add_argument("--period", type=int, default=None, help="clock period in ms")
    parser.add_argument("--dropout", type=float, default=None,
                        help="per-reading dropout probability")
    parser.add_argument("--w", type=float, default=None, dest="vote_weight",
                        help="negative-vote weight")
    parser.add_argument("--theta-occ", type=float, default=None,
                        help="occupation vote threshold")
    parser.add_argument("--theta-act", type=float, default=None,
                        help="action probability threshold")
    parser.add_argument("--delta", type=float, default=None, help="preference step size")
    parser.add_argument("--z0", type=float, default=None, help="initial preference logit")
    parser.add_argument("--z-min", type=float, default=None, help="lower logit bound")
    parser.add_argument("--z-max", type=float, default=None, help="upper logit bound")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def _overrides_from(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    if args.period is not None:
        overrides["period_ms"] = args.period
    if args.vote_weight is not None:
        overrides["vote_weight"] = args.vote_weight
    if args.theta_occ is not None:
        overrides["occupation_threshold"] = args.theta_occ
    if args.theta_act is not None:
        overrides["action_threshold"] = args.theta_act
    preference: dict = {}
    if args.delta is not None:
        preference["step"] = args.delta
    if args.z0 is not None:
        preference["initial_logit"] = args.z0
    if args.z_min is not None or args.z_max is not None:
        lo = args.z_min if args.z_min is not None else -6.0
        hi = args.z_max if args.z_max is not None else 6.0
        preference["bounds"] = [lo, hi]
    if preference:
        overrides["preference"] = preference
    episode: dict = {}
    if args.dropout is not None:
        episode["dropout"] = args.dropout
    if getattr(args, "trials", None) is not None:
        episode["trials"] = args.trials
    if episode:
        overrides["episode"] = episode
    return overrides


def _load(args: argparse.Namespace) -> EngineConfig:
    return load_config(args.config, overrides=_overrides_from(args))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointobs",
        description="Joint physical/virtual observation decision engine and harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_matrix = sub.add_parser("matrix", help="run the sensor-ablation accuracy matrix")
    _add_common(p_matrix)
    p_matrix.add_argument("--groups", type=str, default="S1..S10",
                          help='sensor groups, e.g. "S1..S10" or "S1,S4"')
    p_matrix.add_argument("--trials", type=int, default=None, help="episodes per cell")
    p_matrix.set_defaults(func=cmd_matrix)

    p_learn = sub.add_parser("learn", help="run the preference-learning experiment")
    _add_common(p_learn)
    p_learn.add_argument("--user", type=str, required=True,
                         help="A, B, C, or a JSON feedback-schedule file")
    p_learn.add_argument("--rounds", type=int, default=10, help="feedback rounds")
    p_learn.set_defaults(func=cmd_learn)

    p_sim = sub.add_parser("simulate", help="run one scenario and print its decision log")
    _add_common(p_sim)
    p_sim.add_argument("scenario", type=Path, help="scenario JSON file")
    p_sim.add_argument("--groups", type=str, default=None, help="sensor group to activate")
    p_sim.add_argument("--dry-run", action="store_true",
                       help="echo the effective config and exit")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def cmd_matrix(args: argparse.Namespace) -> int:
    config = _load(args)
    group_ids = parse_groups(args.groups)
    matrix = run_matrix(config, seed=args.seed, groups=group_ids)
    written = write_matrix_reports(matrix, args.out, config=config,
                                   figures=not args.no_figures)
    cells = [v for v in matrix.values.values() if v is not None]
    mean = sum(cells) / len(cells) if cells else 0.0
    print(f"cells: {len(matrix.values)}")
    print(f"mean accuracy: {mean:.4f}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _resolve_user(token: str) -> SimulatedUser:
    if token.upper() in {"A", "B", "C"}:
        return SimulatedUser.standard(token)
    path = Path(token)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise FileNotFoundError(f"schedule file {path} does not exist")
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict) or "schedule" not in data:
            raise ConfigError(f"schedule file {path} needs a 'schedule' list")
        return SimulatedUser.custom(data["schedule"])
    raise ConfigError(f"unknown user {token!r} (expected A, B, C or a schedule file)")


def cmd_learn(args: argparse.Namespace) -> int:
    config = _load(args)
    user = _resolve_user(args.user)
    trajectory = run_learning(user, rounds=args.rounds, config=config, seed=args.seed)
    written = write_learning_reports([trajectory], args.out, config=config,
                                     figures=not args.no_figures)
    for row in trajectory.rounds:
        print(f"round={row.round_number} p={row.probability:.6f} "
              f"acted={str(row.acted).lower()} feedback={row.feedback.value}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    if args.dry_run:
        print(json.dumps(config.to_echo_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    scenario, file_group = load_scenario(args.scenario, config)
    group_id = args.groups or file_group or "S10"
    group_ids = parse_groups(group_id)
    if len(group_ids) != 1:
        raise ConfigError("simulate runs exactly one sensor group")
    group = SENSOR_GROUPS[group_ids[0]]
    result = run_episode(scenario, group, config, seed=args.seed,
                         dropout=args.dropout)
    for record in result.records:
        print(f"tick={record.tick} now={record.now}ms disruption={record.disruption_id} "
              f"observed={str(record.observed).lower()} action={record.action} "
              f"ground_truth={record.ground_truth} correct={str(record.correct).lower()} "
              f"joint={record.joint_probability:.6f}")
        for command in record.commands:
            pairing = f" pairing={command.pairing_id}" if command.pairing_id else ""
            print(f"  command channel={command.channel.value} payload={command.payload}{pairing}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
