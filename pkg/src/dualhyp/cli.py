"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 transport failure,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .align import align, normalize, percent
from .corrector import (
    ChatCompletionsBackend,
    CorrectionRequest,
    EchoBackend,
    OracleBackend,
    RemoteConfig,
    RoverBackend,
    correct_many,
    read_results,
    write_results,
)
from .corruption import CorruptionPlan, Stream, make_rng
from .dataset import DualRecord, load_dataset, write_dataset
from .errors import CorrectorError, DualHypError, IoFailure, MissingMasks, TransportError, ValidationError
from .evaluate import run_eval, werr_curve
from .oracle import corpus_oracle
from .prompts import PromptVariant, build_record_prompt
from .relmask import (
    AUDIO_RATE_HZ,
    VIDEO_RATE_HZ,
    MaskMetrics,
    PredictorModel,
    SegmentFeatures,
    eval_masks,
    label_mask,
    pool_features,
    predict,
    read_features,
    train_predictor,
)
from .report import emit_report, fraction, render_curve, write_text
from .synth import synthetic_records

log = logging.getLogger("dualhyp")

EXIT_OK, EXIT_VALIDATION, EXIT_TRANSPORT, EXIT_INTERNAL = 0, 1, 2, 3
STREAM_KEYS = {"a": "A", "v": "V", "av": "A+V"}


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures; argparse's default 2 means transport here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


# subcommands -----------------------------------------------------------------


def cmd_wer(args) -> int:
    ref = normalize(args.ref, strip_punct=not args.keep_punct)
    hyp = normalize(args.hyp, strip_punct=not args.keep_punct)
    if not ref:
        raise ValidationError("reference has no tokens")
    a = align(ref, hyp)
    rate = a.errors / a.ref_len
    print(f"WER {percent(rate)}% ({a.errors}/{a.ref_len}: S={a.substitutions} D={a.deletions} I={a.insertions})")
    if args.show_alignment:
        print(a.pretty())
    return EXIT_OK


def cmd_oracle(args) -> int:
    streams = [STREAM_KEYS[s.strip()] for s in args.streams.split(",") if s.strip()]
    corpus = corpus_oracle(load_dataset(args.dataset, args.n_best))
    rows = []
    for s in streams:
        row = corpus.rows[s]
        if args.per_utterance:
            b1, onb, ocp = corpus.utterance_mean(s)
        else:
            b1, onb, ocp = row.best1_wer, row.onb_wer, row.ocp_wer
        rows.append((s, b1, onb, ocp))
    if args.format == "csv":
        text = "stream,best1,onb,ocp\n" + "".join(f"{s},{fraction(b)},{fraction(n)},{fraction(c)}\n" for s, b, n, c in rows)
    else:
        lines = ["| Stream | 1-best | o_nb | o_cp |", "|---|---|---|---|"]
        lines += [f"| {s} | {percent(b)} | {percent(n)} | {percent(c)} |" for s, b, n, c in rows]
        text = "\n".join(lines) + f"\n\n{corpus.rows['A'].n_records} records, {corpus.rows['A'].ref_words} reference words.\n"
    _emit(text, args.out)
    return EXIT_OK


def _apply_corruption(rec: DualRecord, specs: dict) -> DualRecord:
    tags = {k: v for k, v in rec.tags.items() if k not in ("noise", "snr_db", "visual")}
    audio, video = specs.get(Stream.AUDIO), specs.get(Stream.VIDEO)
    if audio is not None:
        tags["noise"] = audio.kind
        tags["snr_db"] = f"{audio.snr_db:g}"
    if video is not None:
        tags["visual"] = video.kind
    # masks describe the old corruption; regenerate with `mask gen`
    return replace(rec, audio_corruption=audio, video_corruption=video, audio_mask=None, video_mask=None, tags=tags)


def cmd_corrupt(args) -> int:
    cfg = _read_json(args.config)
    plan = CorruptionPlan.from_json(cfg, seed=args.seed)
    dataset = args.dataset or cfg.get("dataset")
    if not dataset:
        raise ValidationError("no input dataset: pass --dataset or set 'dataset' in the config")
    out = [_apply_corruption(r, plan.sample(r.id, r.duration_s)) for r in load_dataset(dataset, args.n_best)]
    write_dataset(args.out, out)
    log.info("wrote %d records to %s", len(out), args.out)
    return EXIT_OK


def cmd_merge(args) -> int:
    """Sample records from per-condition files into one training file."""
    weights = args.weights or [1.0] * len(args.inputs)
    if len(weights) != len(args.inputs) or min(weights) < 0 or sum(weights) <= 0:
        raise ValidationError("--weights needs one non-negative weight per input, not all zero")
    pools = [
        [replace(r, id=f"{Path(p).stem}:{r.id}") for r in load_dataset(p, args.n_best)] for p in args.inputs
    ]
    rng = make_rng(args.seed)
    for pool in pools:
        rng.shuffle(pool)
    total = sum(len(p) for p in pools)
    n = total if args.n is None else min(args.n, total)
    w = np.asarray(weights, dtype=float)
    out = []
    while len(out) < n:
        live = np.array([len(p) > 0 for p in pools]) & (w > 0)
        if not live.any():
            break
        probs = np.where(live, w, 0.0)
        k = int(rng.choice(len(pools), p=probs / probs.sum()))
        out.append(pools[k].pop())
    write_dataset(args.out, out)
    return EXIT_OK


def cmd_synth(args) -> int:
    write_dataset(args.out, synthetic_records(args.n, args.seed, args.vocab, args.max_len, args.n_best))
    return EXIT_OK


def cmd_mask_gen(args) -> int:
    out = [
        r.with_masks(
            label_mask(r.audio_corruption, r.duration_s, Stream.AUDIO),
            label_mask(r.video_corruption, r.duration_s, Stream.VIDEO),
        )
        for r in load_dataset(args.dataset, args.n_best)
    ]
    write_dataset(args.out, out)
    return EXIT_OK


def cmd_mask_eval(args) -> int:
    gt = {r.id: r for r in load_dataset(args.gt, args.n_best)}
    pred = {r.id: r for r in load_dataset(args.pred, args.n_best)}
    missing = sorted(set(gt) - set(pred))
    if missing:
        raise ValidationError(f"{len(missing)} reference records have no prediction, e.g. {missing[0]}")
    per_stream: dict[str, MaskMetrics] = {}
    pairs_all = ([], [])
    for stream in (Stream.AUDIO, Stream.VIDEO):
        p_list, g_list = [], []
        for rid in sorted(gt):
            g = gt[rid].mask(stream)
            if g is None:
                continue
            p = pred[rid].mask(stream)
            if p is None:
                raise MissingMasks(f"record {rid}: predicted {stream.value} mask missing")
            p_list.append(p)
            g_list.append(g)
        if g_list:
            per_stream[stream.value] = eval_masks(p_list, g_list)
            pairs_all[0].extend(p_list)
            pairs_all[1].extend(g_list)
    if not pairs_all[1]:
        raise MissingMasks("reference dataset has no masks")
    per_stream["pooled"] = eval_masks(*pairs_all)
    text = json.dumps({k: m.to_json() for k, m in per_stream.items()}, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _default_rate(stream: Stream) -> float:
    return float(AUDIO_RATE_HZ if stream is Stream.AUDIO else VIDEO_RATE_HZ)


def _pooled_for(rec: DualRecord, features_dir: Path, stream: Stream, rate: float | None) -> np.ndarray | None:
    path = features_dir / f"{rec.id}.{stream.value}.feat"
    if not path.exists():
        return None
    hz = rate or (rec.feature_rates or {}).get(stream.value) or _default_rate(stream)
    return pool_features(SegmentFeatures(read_features(path), hz, stream), rec.duration_s)


def cmd_mask_train(args) -> int:
    stream = Stream(args.stream)
    feats_dir = Path(args.features)
    xs, ys = [], []
    for rec in load_dataset(args.labels, args.n_best):
        mask = rec.mask(stream)
        if mask is None:
            raise MissingMasks(f"record {rec.id}: no {stream.value} mask to train on")
        pooled = _pooled_for(rec, feats_dir, stream, args.frame_rate)
        if pooled is None:
            log.warning("record %s: no %s features, skipped", rec.id, stream.value)
            continue
        if len(pooled) != len(mask):
            raise ValidationError(f"record {rec.id}: {len(pooled)} segments but mask has {len(mask)}")
        xs.append(pooled)
        ys.extend(mask.tokens)
    if not xs:
        raise ValidationError(f"no {stream.value} feature files found under {feats_dir}")
    model = train_predictor(np.vstack(xs), ys, learning_rate=args.lr, epochs=args.epochs, l2=args.l2)
    write_text(args.out, json.dumps(model.to_json()) + "\n")
    log.info("trained on %d segments, final loss %.6f", len(ys), model.final_loss)
    return EXIT_OK


def cmd_mask_predict(args) -> int:
    stream = Stream(args.stream)
    model = PredictorModel.from_json(_read_json(args.model))
    out = []
    for rec in load_dataset(args.dataset, args.n_best):
        pooled = _pooled_for(rec, Path(args.features), stream, args.frame_rate)
        if pooled is None:
            raise ValidationError(f"record {rec.id}: no {stream.value} features")
        mask = predict(model, pooled, stream)
        out.append(rec.with_masks(mask, rec.video_mask) if stream is Stream.AUDIO else rec.with_masks(rec.audio_mask, mask))
    write_dataset(args.out, out)
    return EXIT_OK


def cmd_prompt(args) -> int:
    for rec in load_dataset(args.dataset, args.n_best):
        if rec.id == args.record:
            sys.stdout.write(build_record_prompt(args.variant, rec))
            return EXIT_OK
    raise ValidationError(f"record {args.record!r} not in {args.dataset}")


def _make_backend(args):
    if args.backend == "remote":
        if not args.config:
            raise ValidationError("--backend remote needs --config")
        return ChatCompletionsBackend(RemoteConfig.from_file(args.config))
    if args.backend == "rover":
        return RoverBackend(asr_prior=args.asr_prior)
    return {"echo": EchoBackend, "oracle": OracleBackend}[args.backend]()


def cmd_correct(args) -> int:
    backend = _make_backend(args)
    jobs = args.jobs
    if args.backend == "remote":
        jobs = min(jobs, backend.config.max_in_flight)
    requests, failures = [], {}
    for rec in load_dataset(args.dataset, args.n_best):
        try:
            prompt = build_record_prompt(args.variant, rec) if args.backend == "remote" else ""
            requests.append(CorrectionRequest(rec.id, prompt, args.temperature, args.max_tokens, args.backend, rec))
        except ValidationError as exc:
            failures[rec.id] = exc
    outcome = correct_many(backend, requests, jobs)
    failures.update(outcome.failures)
    write_results(args.out, outcome.results, args.name or args.backend)
    if not failures:
        return EXIT_OK
    for rid, exc in sorted(failures.items()):
        log.error("record %s: %s", rid, exc)
    print(f"{len(failures)} of {len(requests) + len(failures) - len(outcome.failures)} records failed", file=sys.stderr)
    if any(isinstance(e, CorrectorError) for e in failures.values()):
        return EXIT_TRANSPORT
    return EXIT_VALIDATION


def cmd_report(args) -> int:
    records = load_dataset(args.dataset, args.n_best)
    systems = {}
    for path in args.results or []:
        name, transcripts = read_results(path)
        if name in systems:
            raise ValidationError(f"system {name!r} appears in more than one results file")
        systems[name] = transcripts
    group_by = None if args.group_by == "none" else args.group_by
    report = run_eval(records, systems, group_by, args.baseline, utterance_mean=args.per_utterance)
    if args.werr_by_snr:
        buckets = [float(x) for x in args.snr_buckets.split(",")] if args.snr_buckets else None
        base = args.baseline if args.baseline in ("asr_1best", "vsr_1best") else systems[args.baseline]
        curves = {
            name: werr_curve(records, trans, base, buckets)
            for name, trans in systems.items()
            if name != args.baseline
        }
        text = render_curve(curves, args.format)
    else:
        text = emit_report(report, args.format)
    _emit(text, args.out)
    if report.skipped:
        print(f"{len(report.skipped)} of {report.n_input} records skipped", file=sys.stderr)
    return EXIT_OK


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dualhyp", description="Dual-stream ASR/VSR error-correction toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--n-best", type=int, default=5, help="maximum hypotheses per stream in dataset files")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("wer", help="word error rate of one hypothesis")
    s.add_argument("ref")
    s.add_argument("hyp")
    s.add_argument("--keep-punct", action="store_true", help="score punctuation tokens instead of stripping them")
    s.add_argument("--show-alignment", action="store_true")
    s.set_defaults(func=cmd_wer)

    s = sub.add_parser("oracle", help="1-best, n-best and compositional oracle WER")
    s.add_argument("--dataset", required=True)
    s.add_argument("--streams", default="a,v,av", help="comma list of a, v, av")
    s.add_argument("--format", choices=("md", "csv"), default="md")
    s.add_argument("--per-utterance", action="store_true", help="mean of per-utterance WER instead of corpus WER")
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("corrupt", help="attach seeded corruption metadata to a dataset")
    s.add_argument("--config", required=True, help="JSON corruption plan")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--dataset", help="input dataset (default: 'dataset' key of the config)")
    s.set_defaults(func=cmd_corrupt)

    s = sub.add_parser("merge", help="sample records from several condition files into one")
    s.add_argument("--inputs", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--weights", nargs="+", type=float, help="sampling weight per input (default uniform)")
    s.add_argument("--n", type=int, help="records to draw (default: all)")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_merge)

    s = sub.add_parser("synth", help="write a seeded synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--vocab", type=int, default=20)
    s.add_argument("--max-len", type=int, default=12)
    s.set_defaults(func=cmd_synth)

    mask = sub.add_parser("mask", help="reliability masks")
    msub = mask.add_subparsers(dest="mask_command", required=True, parser_class=_Parser)
    s = msub.add_parser("gen", help="ground-truth masks from corruption metadata")
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mask_gen)
    s = msub.add_parser("eval", help="binary segment metrics of predicted vs reference masks")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_mask_eval)
    for name, func, help_ in (
        ("train", cmd_mask_train, "train the segment classifier"),
        ("predict", cmd_mask_predict, "predict masks with a trained classifier"),
    ):
        s = msub.add_parser(name, help=help_)
        s.add_argument("--features", required=True, help="directory of <id>.<stream>.feat files")
        s.add_argument("--stream", choices=("audio", "video"), default="audio")
        s.add_argument("--frame-rate", type=float, help="feature frame rate in Hz (default: per record, then stream default)")
        s.add_argument("--out", required=True)
        if name == "train":
            s.add_argument("--labels", required=True, help="dataset with reference masks")
            s.add_argument("--epochs", type=int, default=500)
            s.add_argument("--lr", type=float, default=0.1)
            s.add_argument("--l2", type=float, default=0.0)
        else:
            s.add_argument("--model", required=True)
            s.add_argument("--dataset", required=True)
        s.set_defaults(func=func)

    s = sub.add_parser("prompt", help="print the corrector prompt for one record")
    s.add_argument("--variant", choices=[v.value for v in PromptVariant], required=True)
    s.add_argument("--record", required=True)
    s.add_argument("--dataset", required=True)
    s.set_defaults(func=cmd_prompt)

    s = sub.add_parser("correct", help="run a corrector backend over a dataset")
    s.add_argument("--backend", choices=("remote", "echo", "rover", "oracle"), required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--config", help="remote endpoint JSON config")
    s.add_argument("--variant", choices=[v.value for v in PromptVariant], default="dualhyp")
    s.add_argument("--name", help="system name written to the results file (default: backend)")
    s.add_argument("--asr-prior", type=float, default=0.5, help="rover: vote mass of the ASR stream")
    s.add_argument("--temperature", type=float, default=0.0)
    s.add_argument("--max-tokens", type=int, default=128)
    s.set_defaults(func=cmd_correct)

    s = sub.add_parser("report", help="WER table or WERR-by-SNR curve")
    s.add_argument("--dataset", required=True)
    s.add_argument("--results", nargs="*", default=[])
    s.add_argument("--baseline", default="asr_1best")
    s.add_argument("--format", choices=("md", "csv"), default="md")
    s.add_argument("--group-by", default="noise", help="record tag to group by, or 'none'")
    s.add_argument("--per-utterance", action="store_true")
    s.add_argument("--werr-by-snr", action="store_true")
    s.add_argument("--snr-buckets", help="comma list of bucket centres in dB")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ValidationError, IoFailure, CorrectorError, DualHypError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # anything else is a bug
        log.exception("internal error")
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
