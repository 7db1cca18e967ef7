"""Command-line front end: synthesis, analysis, experiments, serving, stats."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import acoustics, analysis, corpus, evalstats, pipeline
from .duration import DurationModel, load_durations
from .phonology import STRESS_PRIMARY, Utterance, parse_utterance
from .wavfile import read_wav, write_wav


def _load_config(args) -> pipeline.RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        values.update(doc)
    for key in ("mode", "alpha_dd", "alpha_mel", "v_mel", "profile", "seed"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    known = {"mode", "alpha_dd", "alpha_mel", "v_mel", "profile", "seed"}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return pipeline.RunConfig(**values)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--mode", choices=pipeline.MODES)
    p.add_argument("--alpha-dd", dest="alpha_dd", type=float)
    p.add_argument("--alpha-mel", dest="alpha_mel", type=float)
    p.add_argument("--v-mel", dest="v_mel", type=float)
    p.add_argument("--profile", choices=acoustics.PROFILES)
    p.add_argument("--seed", type=int)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def content_word_mask(utt: Utterance) -> list[bool]:
    """Words eligible as emphasis answers: carry a primary-stressed vowel."""
    mask = []
    for word in utt.words:
        mask.append(
            any(
                utt.phonemes[i].stress == STRESS_PRIMARY
                for i in range(word.start, word.end)
            )
        )
    return mask


def cmd_synthesize(args) -> int:
    config = _load_config(args)
    utt = parse_utterance(Path(args.utterance).read_text(encoding="utf-8"))
    model = None
    if args.model:
        model = DurationModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    oracle = None
    if args.durations:
        oracle = load_durations(Path(args.durations).read_text(encoding="utf-8"))
    result = pipeline.synthesize(utt, config, model=model, oracle_durations=oracle)

    prefix = Path(args.out) if args.out else Path(Path(args.utterance).stem)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_wav(prefix.with_suffix(".wav"), result.waveform)
    with open(prefix.with_suffix(".mel"), "wb") as fp:
        acoustics.write_mel(result.mel, fp)
    prefix.with_suffix(".alignment.json").write_text(
        pipeline.alignment_to_json(result), encoding="utf-8"
    )
    prefix.with_suffix(".correlates.json").write_text(
        pipeline.correlate_log_to_json(result), encoding="utf-8"
    )
    print(
        f"wrote {prefix.with_suffix('.wav')} "
        f"({len(result.waveform)} samples, {result.mel.n_frames} frames)",
        file=sys.stderr,
    )
    return 0


def cmd_analyze(args) -> int:
    waveform = read_wav(args.wav)
    alignment = pipeline.alignment_from_json(
        Path(args.alignment).read_text(encoding="utf-8")
    )
    reports = analysis.word_report(waveform, alignment)
    _write_or_print(analysis.reports_to_json(reports), args.out)
    return 0


def run_experiment(
    corpus_dir: str | Path, modes: list[str], config: pipeline.RunConfig
) -> dict:
    """Synthesize every corpus utterance per mode, identify the emphasized
    word against the matching no-emphasis rendering, aggregate accuracy."""
    files = sorted(Path(corpus_dir).glob("*.json"))
    if not files:
        raise ValueError(f"no utterance files in {corpus_dir}")
    per_mode: dict[str, dict] = {
        mode: {"records": [], "duration_ratios": [], "injections": 0}
        for mode in modes
    }
    for path in files:
        utt = parse_utterance(path.read_text(encoding="utf-8"))
        target = utt.emphasis_target
        if target is None:
            raise ValueError(f"{path.name}: corpus utterance has no emphasis target")
        mask = content_word_mask(utt)
        base = pipeline.synthesize(utt, pipeline.baseline_config(config))
        base_reports = analysis.word_report(base.waveform, base.alignment)
        for mode in modes:
            run = pipeline.synthesize(utt, replace(config, mode=mode))
            reports = analysis.word_report(run.waveform, run.alignment)
            outcome = analysis.identify_emphasis(reports, base_reports, mask)
            ratio = (
                reports[target].duration_ms / base_reports[target].duration_ms
            )
            per_mode[mode]["records"].append(
                {
                    "utterance": path.stem,
                    "true_word": target,
                    "chosen_word": outcome.word_index,
                    "detected": outcome.detected,
                }
            )
            per_mode[mode]["duration_ratios"].append(ratio)
            per_mode[mode]["injections"] += len(run.plan.events)

    summary: dict = {"n_utterances": len(files), "modes": {}}
    for mode in modes:
        records = per_mode[mode]["records"]
        detected = [r for r in records if r["detected"]]
        correct = sum(
            1 for r in records if r["detected"] and r["chosen_word"] == r["true_word"]
        )
        ratios = per_mode[mode]["duration_ratios"]
        summary["modes"][mode] = {
            "accuracy": correct / len(records),
            "n": len(records),
            "detected": len(detected),
            "no_detection": len(records) - len(detected),
            "mean_target_duration_ratio": sum(ratios) / len(ratios),
            "correlate_injections": per_mode[mode]["injections"],
        }
    return summary


def cmd_experiment(args) -> int:
    config = _load_config(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in pipeline.MODES:
            raise ValueError(f"unknown mode {mode!r}")
    summary = run_experiment(args.corpus, modes, config)
    _write_or_print(json.dumps(summary, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_gen_corpus(args) -> int:
    paths = corpus.write_corpus(args.out, args.n, args.seed)
    print(f"wrote {len(paths)} utterances to {args.out}", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        plan_path=args.plan,
        log_path=args.log,
        stimuli_root=args.stimuli,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_stats(args) -> int:
    rows = evalstats.read_jsonl(Path(args.responses).read_text(encoding="utf-8"))
    if args.test_type == "mushra":
        matrix, excluded = evalstats.ratings_from_responses(rows)
        summary = evalstats.mushra_summary(matrix)
        result = {
            "test_type": "mushra",
            "systems": summary,
            "friedman": evalstats.friedman(matrix)
            if min(matrix.ratings.shape) >= 2
            else None,
            "excluded_listeners": excluded,
        }
        table = evalstats.render_table(
            ["system", "mean", "ci_low", "ci_high"],
            [
                [s["system"], f"{s['mean']:.1f}", f"{s['ci_low']:.1f}", f"{s['ci_high']:.1f}"]
                for s in summary
            ],
        )
    elif args.test_type == "preference":
        tally = evalstats.tally_from_responses(rows)
        result = {"test_type": "preference", **evalstats.preference_delta(tally)}
        table = evalstats.render_table(
            ["system A", "system B", "delta_pref", "p-value"],
            [[
                tally.label_a,
                tally.label_b,
                f"{result['delta_pref']:+.1%}",
                f"{result['p']:.3g}",
            ]],
        )
    elif args.test_type == "identify":
        records = evalstats.identification_from_responses(rows)
        result = {"test_type": "identify", **evalstats.identifiability(records)}
        table = evalstats.render_table(
            ["system", "fraction", "n"],
            [
                [label, f"{s['fraction']:.1%}", s["n"]]
                for label, s in result["by_system"].items()
            ],
        )
    else:
        raise ValueError(f"unknown test type {args.test_type!r}")
    if args.table:
        sys.stdout.write(table)
    else:
        _write_or_print(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emphkit",
        description="Word-emphasis synthesis, acoustic analysis and "
        "listening-test tooling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="render an utterance file to WAV/mel")
    p.add_argument("utterance", help="utterance JSON file")
    p.add_argument("--out", help="output path prefix (default: utterance stem)")
    p.add_argument("--durations", help="oracle durations JSON file")
    p.add_argument("--model", help="duration model JSON file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("analyze", help="per-word acoustic report for a WAV")
    p.add_argument("wav")
    p.add_argument("alignment", help="alignment JSON from synthesize")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser(
        "experiment", help="machine identifiability over a corpus directory"
    )
    p.add_argument("corpus", help="directory of utterance JSON files")
    p.add_argument("--modes", default="dd,mel,none")
    p.add_argument("--out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gen-corpus", help="generate a random utterance corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("serve", help="run the listening-test HTTP service")
    p.add_argument("--plan", required=True, help="test plan JSON")
    p.add_argument("--log", required=True, help="response log path (JSONL)")
    p.add_argument("--stimuli", help="stimulus root directory (default: plan dir)")
    p.add_argument("--static", help="static UI directory to serve at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("stats", help="summarize listening-test responses")
    p.add_argument("responses", help="JSONL responses (or exported rows)")
    p.add_argument("test_type", choices=["mushra", "preference", "identify"])
    p.add_argument("--out")
    p.add_argument("--table", action="store_true", help="print a text table")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
