"""Command-line entry point: ``ghostguide <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config import AppConfig, ConfigError, config_from_dict, config_to_dict, dump_config, load_config
from .controller import Mode, OpacityController
from .melody import MelodyError, load_melody
from .scoring import KeyEvent, ScoringError, score_trial
from .sessionlog import LogError, compress_motion, evaluate_curve, load_log, quat_angle, read_log, write_log
from .simulator import default_workers, run_experiment, write_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ghostguide", description="Adaptive-opacity ghost-hand tutoring toolkit.")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--print-config", action="store_true", help="print the effective config as JSON and exit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate a counterbalanced study and write a session-log corpus")
    s.add_argument("--participants", type=_positive_int, help="number of simulated participants")
    s.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--workers", type=_positive_int, default=None,
                   help="worker processes (default: min(8, cpu count)); output does not depend on it")
    s.add_argument("--config", dest="sub_config", help="JSON config file")
    s.add_argument("--no-motion", action="store_true", help="skip hand-motion recording")
    s.add_argument("--no-frames", action="store_true", help="skip per-frame controller traces")

    s = sub.add_parser("score", help="score a performance against a melody")
    s.add_argument("--melody", required=True, help="melody JSON file")
    s.add_argument("--events", required=True, help="events JSON: a list of key events or a session log")
    s.add_argument("--config", dest="sub_config", help="JSON config file (match and weights sections)")

    s = sub.add_parser("control", help="run the opacity controller over an error series")
    s.add_argument("--input", required=True, help="CSV with columns t_ms,E ('-' for stdin)")
    s.add_argument("--mode", choices=[m.value for m in Mode], default=None, help="controller mode")
    s.add_argument("--out", default="-", help="output CSV t_ms,E,e_hat,alpha_raw,alpha (default stdout)")
    s.add_argument("--config", dest="sub_config", help="JSON config file (controller section)")

    s = sub.add_parser("analyze", help="compute tables and a summary from a corpus")
    s.add_argument("--corpus", required=True, help="corpus directory or manifest.json")
    s.add_argument("--out", required=True, help="output directory for CSV tables and summary.txt")
    s.add_argument("--gnuplot", action="store_true", help="also write gnuplot-ready .dat files")
    s.add_argument("--no-similarity", action="store_true", help="skip the motion-similarity battery")
    s.add_argument("--no-verify", action="store_true", help="skip manifest hash checks")

    s = sub.add_parser("compress", help="keyframe-compress the motion of a session log")
    s.add_argument("--motion", required=True, help="session log with motion frames")
    s.add_argument("--pos-thresh", type=float, required=True, help="position error bound (metres)")
    s.add_argument("--rot-thresh", type=float, required=True, help="rotation error bound (radians)")
    s.add_argument("--out", help="write the log with curves attached (default: report only)")

    s = sub.add_parser("validate", help="schema-check a session log")
    s.add_argument("--log", required=True, help="session log file")
    return p


def _effective_config(args) -> AppConfig:
    path = getattr(args, "sub_config", None) or args.config
    cfg = load_config(path) if path else AppConfig()
    data = config_to_dict(cfg)
    if getattr(args, "participants", None) is not None:
        data["protocol"]["participants"] = args.participants
    if getattr(args, "no_motion", False):
        data["protocol"]["record_motion"] = False
    if getattr(args, "no_frames", False):
        data["protocol"]["record_frames"] = False
    if getattr(args, "mode", None) is not None:
        data["controller"]["mode"] = args.mode
    return config_from_dict(data)


def _cmd_simulate(args, cfg: AppConfig) -> int:
    workers = args.workers or default_workers()
    corpus = run_experiment(cfg, seed=args.seed, workers=workers)
    manifest = write_corpus(corpus, args.out)
    print(f"wrote {len(corpus.logs)} logs for {cfg.protocol.participants} participants; manifest {manifest}")
    return EXIT_OK


def _read_events(path) -> list[KeyEvent]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScoringError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if isinstance(doc, dict):
        log = read_log(text)
        return [e.shifted(-log.t0_ms) for e in log.events]
    if not isinstance(doc, list):
        raise ScoringError(f"{path}: expected a list of events or a session log")
    out = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict) or set(item) != {"pitch", "onset_ms", "duration_ms", "finger"}:
            raise ScoringError(f"{path}: events[{i}] needs exactly pitch, onset_ms, duration_ms, finger")
        try:
            out.append(KeyEvent(**item))
        except (TypeError, ValueError) as exc:
            raise ScoringError(f"{path}: events[{i}]: {exc}") from None
    return out


def _cmd_score(args, cfg: AppConfig) -> int:
    melody = load_melody(args.melody)
    metrics = score_trial(melody, _read_events(args.events), cfg.match, cfg.weights)
    for name in ("pitch_acc", "finger_acc", "timing_acc", "error_rate"):
        print(f"{name} {getattr(metrics, name):.6f}")
    print(f"n_reference {metrics.n_reference}")
    print(f"n_matched {metrics.n_matched}")
    print(f"n_extra {metrics.n_extra}")
    return EXIT_OK


def _cmd_control(args, cfg: AppConfig) -> int:
    fh = sys.stdin if args.input == "-" else open(args.input, encoding="utf-8", newline="")
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t_ms", "E"]:
            raise ValueError(f"{args.input}: header must be 't_ms,E'")
        times, errors = [], []
        for line, row in enumerate(reader, start=2):
            try:
                t, e = float(row["t_ms"]), float(row["E"])
            except (TypeError, ValueError):
                raise ValueError(f"{args.input}: line {line}: non-numeric value") from None
            if not 0.0 <= e <= 1.0:
                raise ValueError(f"{args.input}: line {line}: E must lie in [0, 1]")
            times.append(t)
            errors.append(e)
    traces = OpacityController(cfg.controller).run(times, errors)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t_ms", "E", "e_hat", "alpha_raw", "alpha"])
        for tr in traces:
            w.writerow([repr(tr.t_ms), repr(tr.E_t), repr(tr.e_hat), repr(tr.alpha_raw), repr(tr.alpha)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _cmd_analyze(args, cfg: AppConfig) -> int:
    corpus = analysis.load_corpus(args.corpus, verify=not args.no_verify)
    if args.config:
        corpus.config = corpus.config.with_overrides(analysis=config_to_dict(cfg)["analysis"])
    files = analysis.analyze(corpus, with_similarity=not args.no_similarity)
    if args.gnuplot:
        files.update(analysis.gnuplot_files(corpus))
    analysis.write_report(files, args.out)
    sys.stdout.write(files["summary.txt"])
    return EXIT_OK


def _cmd_compress(args, cfg: AppConfig) -> int:
    log = load_log(args.motion)
    if not log.motion:
        raise LogError("log has no motion frames", "motion")
    curves = compress_motion(log.motion, args.pos_thresh, args.rot_thresh)
    t = np.array([f.t_ms for f in log.motion])
    pos = np.stack([f.positions for f in log.motion])
    rot = np.stack([f.rotations for f in log.motion])
    worst_pos = worst_rot = 0.0
    for k, c in enumerate(curves):
        joint, slot = divmod(k, 4)
        if slot < 3:
            worst_pos = max(worst_pos, float(np.max(np.abs(evaluate_curve(c, t) - pos[:, joint, slot]))))
        else:
            worst_rot = max(worst_rot, float(np.max(quat_angle(evaluate_curve(c, t, True), rot[:, joint]))))
    n_samples = len(log.motion) * len(curves)
    n_keys = sum(len(c.keys) for c in curves)
    print(f"channels {len(curves)}")
    print(f"samples {n_samples}")
    print(f"keys {n_keys}")
    print(f"ratio {n_keys / n_samples:.4f}")
    print(f"max_pos_error_m {worst_pos:.6g}")
    print(f"max_rot_error_rad {worst_rot:.6g}")
    if args.out:
        Path(args.out).write_text(write_log(dataclasses.replace(log, curves=curves)), encoding="utf-8")
    return EXIT_OK


def _cmd_validate(args, cfg: AppConfig) -> int:
    log = load_log(args.log)
    print(f"ok {log.schema_version} {log.filename} events={len(log.events)} frames={len(log.frames)} "
          f"motion={len(log.motion)}")
    return EXIT_OK


_COMMANDS = {"simulate": _cmd_simulate, "score": _cmd_score, "control": _cmd_control, "analyze": _cmd_analyze,
             "compress": _cmd_compress, "validate": _cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        cfg = _effective_config(args)
        if args.print_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, MelodyError, LogError, ScoringError, analysis.AnalysisError, ValueError, KeyError,
            OSError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
        print(f"ghostguide: error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
