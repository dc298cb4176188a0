"""Command-line front door: vad, align, text, build, serve.

Each subcommand is a thin wrapper over one pipeline stage; data goes only
to the declared output paths, diagnostics go to stderr. Exit codes: 0 on
success, 2 for usage or input problems, 3 for runtime failures. Stages
are deterministic for fixed inputs and config, so reruns are cacheable.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import align as align_mod
from . import audio, corpus, textproc, vad
from .config import ENV_VAR, load_config
from .errors import FoocttsError
from .features import frame_features
from .serve import ConfigError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _out_path(in_path: Path, out_arg: Path, many: bool, suffix: str) -> Path:
    if many or out_arg.is_dir():
        out_arg.mkdir(parents=True, exist_ok=True)
        return out_arg / (in_path.stem + suffix)
    return out_arg


def cmd_vad(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    inputs = [Path(p) for p in args.inputs]
    many = len(inputs) > 1

    def process(path: Path) -> str:
        buf = audio.read_wav(path)
        track = frame_features(buf)
        labels = vad.classify_frames(track, cfg.vad)
        segments = vad.smooth_and_segment(
            labels, cfg.vad, track.frame_len_ms, track.hop_ms, duration_s=buf.duration_s
        )
        if args.speech_only:
            segments = vad.filter_speech(segments)
        return vad.format_segments(segments)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(process, inputs))
    for path, text in zip(inputs, results):  # merged in input order
        target = _out_path(path, Path(args.output), many, ".segments")
        target.write_text(text, encoding="utf-8")
        _log(f"vad: {path} -> {target}")
    return EXIT_OK


def cmd_align(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    stay = args.stay or cfg.align.stay
    window = args.window or cfg.align.window
    min_score = args.min_score if args.min_score is not None else cfg.align.min_score
    inputs = [Path(p) for p in args.posteriors]
    many = len(inputs) > 1
    transcript_arg = Path(args.transcript)

    def transcript_for(ctcp: Path) -> Path:
        if transcript_arg.is_dir():
            return transcript_arg / (ctcp.stem + ".txt")
        if many:
            raise FoocttsError("with several posterior files the transcript must be a directory")
        return transcript_arg

    def process(ctcp: Path) -> str:
        matrix = align_mod.load_posteriors(ctcp)
        source = transcript_for(ctcp)
        lines = [
            line.strip()
            for line in source.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        if not lines:
            raise FoocttsError(f"{source}: no utterances")
        sequences = [matrix.vocab.encode(line) for line in lines]
        aligned = align_mod.align(matrix, sequences, stay_mode=stay, score_window=window)
        if min_score is not None:
            kept = [u for u in aligned if u.score >= min_score]
            _log(f"align: {ctcp.stem}: min-score {min_score} kept {len(kept)}/{len(aligned)}")
            aligned = kept
        recording_id = (args.recording_id if not many else None) or ctcp.stem
        return align_mod.emit_segments(aligned, recording_id) if aligned else ""

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(process, inputs))
    for ctcp, text in zip(inputs, results):  # merged in input order
        target = _out_path(ctcp, Path(args.output), many, ".segments")
        target.write_text(text, encoding="utf-8")
        _log(f"align: {ctcp} -> {target}")
    return EXIT_OK


def cmd_text(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if not (args.transliterate or args.vowelize):
        _log("text: nothing to do; pass --transliterate and/or --vowelize")
        return EXIT_INPUT
    table = textproc.load_translit_table(args.table) if args.table else None
    client = textproc.VowelizerClient(cfg.vowelizer) if args.vowelize else None

    out_lines = []
    for line in Path(args.input).read_text(encoding="utf-8").splitlines():
        line = textproc.normalize(line)
        if args.transliterate and line:
            source = line.encode("utf-8")
            pieces = []
            cursor = 0
            for token in textproc.tokenize(line):
                pieces.append(source[cursor : token.start].decode("utf-8"))
                if token.script is textproc.Script.LATIN:
                    pieces.append(textproc.transliterate(token, table))
                else:
                    pieces.append(token.text)
                cursor = token.end
            pieces.append(source[cursor:].decode("utf-8"))
            line = textproc.normalize("".join(pieces))
        if args.vowelize and line:
            line = client.vowelize(line)
        out_lines.append(line)
    Path(args.output).write_text("".join(l + "\n" for l in out_lines), encoding="utf-8")
    _log(f"text: {len(out_lines)} lines -> {args.output}")
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    records = corpus.read_records_tsv(args.records)
    if not records:
        raise FoocttsError(f"{args.records}: no records")
    if args.labels:
        overrides = corpus.ingest_labels(args.labels)
        from dataclasses import replace

        records = [
            replace(r, emotion=overrides.get(r.utt_id, r.emotion)) for r in records
        ]
    audio_dir = Path(args.audio_dir)
    wav_paths = {
        rec_id: audio_dir / f"{rec_id}.wav"
        for rec_id in sorted({r.recording_id for r in records})
    }
    spec = corpus.SplitSpec(
        n_dev=args.n_dev if args.n_dev is not None else cfg.split.n_dev,
        n_test=args.n_test if args.n_test is not None else cfg.split.n_test,
        seed=args.seed if args.seed is not None else cfg.split.seed,
    )
    train, dev, test = corpus.split(records, spec, strategy=args.split_strategy)
    out_dir = Path(args.out_dir)
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        part_dir = out_dir / name
        corpus.emit_manifests(part, part_dir, wav_paths, allow_unlabeled=args.allow_unlabeled)
        issues = corpus.validate_manifest(part_dir)
        for issue in issues:
            _log(f"build: {name}: {issue.kind}: {issue.message}")
        if issues:
            return EXIT_RUNTIME
    _log(f"build: split {len(train)}/{len(dev)}/{len(test)} (train/dev/test) -> {out_dir}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import signal

    import uvicorn

    from .serve import create_app

    cfg = load_config(args.config)
    gateway = cfg.serve
    if args.port is not None:
        gateway.port = args.port
    if args.backend is not None:
        gateway.backend = args.backend
        gateway.__post_init__()  # re-validate the override
    if args.no_noise:
        gateway.no_noise = True
    app = create_app(gateway, cfg.vowelizer)
    _log(f"serve: listening on {gateway.host}:{gateway.port} (backend={gateway.backend})")
    try:
        # uvicorn re-raises SIGTERM after its graceful shutdown; absorb it
        # so an orderly stop exits 0 as promised.
        signal.signal(signal.SIGTERM, lambda signum, frame: None)
    except ValueError:  # not the main thread (embedded use)
        pass
    server = uvicorn.Server(
        uvicorn.Config(app, host=gateway.host, port=gateway.port, log_level="warning")
    )
    server.run()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fooctts",
        description="Commentator TTS corpus tooling and synthesis gateway",
    )
    parser.add_argument(
        "--config", "-c", default=None,
        help=f"pipeline config JSON (default: ${ENV_VAR} or built-ins)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vad", help="label a recording into speech/noise/music/noEnergy")
    p.add_argument("inputs", nargs="+", help="input WAV file(s)")
    p.add_argument("--output", "-o", required=True,
                   help="segments file (single input) or directory")
    p.add_argument("--speech-only", action="store_true", help="keep only speech segments")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for many inputs")
    p.set_defaults(func=cmd_vad)

    p = sub.add_parser("align", help="force-align transcripts against CTC posteriors")
    p.add_argument("posteriors", nargs="+",
                   help="CTCP posterior file(s) (vocabulary sidecar next to each)")
    p.add_argument("transcript",
                   help="transcript file (one utterance per line), or a directory of "
                        "<recording>.txt files when aligning several recordings")
    p.add_argument("--output", "-o", required=True,
                   help="segments file (single recording) or directory")
    p.add_argument("--recording-id", default=None,
                   help="single recording only; default: posterior file stem")
    p.add_argument("--min-score", type=float, default=None,
                   help="drop utterances scoring below this log-posterior")
    p.add_argument("--stay", choices=list(align_mod.STAY_MODES), default=None)
    p.add_argument("--window", type=int, default=None, help="confidence window in frames")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for many recordings")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("text", help="transliterate and/or vowelize transcript lines")
    p.add_argument("input")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--transliterate", action="store_true",
                   help="map Latin tokens into Arabic script")
    p.add_argument("--vowelize", action="store_true",
                   help="diacritize via the configured vowelizer")
    p.add_argument("--table", default=None, help="alternative transliteration table")
    p.set_defaults(func=cmd_text)

    p = sub.add_parser("build", help="emit train/dev/test Kaldi manifests from records")
    p.add_argument("records", help="utterance records TSV")
    p.add_argument("audio_dir", help="directory holding <recording_id>.wav files")
    p.add_argument("out_dir")
    p.add_argument("--labels", default=None, help="manual emotion labels TSV (overrides)")
    p.add_argument("--n-dev", type=int, default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--split-strategy", choices=["random", "chronological"], default="random")
    p.add_argument("--allow-unlabeled", action="store_true",
                   help="map unlabeled records to neutral instead of failing")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("serve", help="run the synthesis gateway")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--backend", choices=["stub", "remote"], default=None)
    p.add_argument("--no-noise", action="store_true", help="disable crowd-noise mixing")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FoocttsError, ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        _log(f"fooctts {args.command}: error: {exc}")
        return EXIT_INPUT
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as exc:  # pragma: no cover - truly unexpected failures
        _log(f"fooctts {args.command}: unexpected failure: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
