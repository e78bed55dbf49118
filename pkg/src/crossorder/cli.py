"""Command-line entry point: synth, train, eval, order, trace-dump.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure. Log verbosity
comes from the ``CROSSORDER_LOG_LEVEL`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .core import StoryPair
from .dataset import DatasetError, field_names, load_config, read_dataset, write_dataset
from .guidance import GuidanceConfig, GuidanceMode
from .inference import InferenceConfig, evaluate_corpus, iterative_infer
from .metrics import accuracy, kendall_tau
from .synthetic import SynthConfig, generate_corpus, regime
from .trainer import DESK_BATCH_SIZE, TrainConfig, train

log = logging.getLogger("crossorder")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _on_off(value: str) -> bool:
    v = value.lower()
    if v in ("on", "true", "1", "yes"):
        return True
    if v in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def _mode(value: str) -> str:
    v = value.lower()
    if v in ("on", "relative-order", "roe"):
        return GuidanceMode.RELATIVE_ORDER.value
    if v in ("off", "um"):
        return GuidanceMode.OFF.value
    raise argparse.ArgumentTypeError(f"expected on/off/relative-order, got {value!r}")


def _merged(args, mapping: dict[str, str], allowed: set[str], base: dict | None = None) -> dict:
    """defaults < base < config file < explicit flags."""
    out = dict(base or {})
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        unknown = set(cfg) - allowed
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        out.update(cfg)
    for dest, key in mapping.items():
        val = getattr(args, dest, None)
        if val is not None:
            out[key] = val
    return out


def _split(values: dict, cls) -> dict:
    names = {f.name for f in fields(cls)}
    return {k: v for k, v in values.items() if k in names}


# -- synth -------------------------------------------------------------------

_SYNTH_FLAGS = {"stories": "stories", "seed": "seed", "dim": "dim", "order_signal": "order_signal",
                "noise_text": "noise_text", "noise_image": "noise_image", "align_noise": "align_noise",
                "regime": "regime", "min_size": "min_size", "max_size": "max_size"}


def synth_config_from(args) -> SynthConfig:
    values = _merged(args, _SYNTH_FLAGS, field_names(SynthConfig) | {"regime", "min_size", "max_size"})
    if args.unequal_sizes:
        values["equal_sizes"] = False
    base = regime(values.pop("regime", "clean-both"))
    lo, hi = values.pop("set_size_range", base.set_size_range)
    lo = values.pop("min_size", lo)
    hi = values.pop("max_size", hi)
    return replace(base, set_size_range=(lo, hi), **values)


def cmd_synth(args) -> int:
    cfg = _build_config(synth_config_from, args)
    n = write_dataset(generate_corpus(cfg), args.output)
    log.info("wrote %d stories to %s", n, args.output)
    print(f"stories={n} path={args.output}")
    return EXIT_OK


# -- train -------------------------------------------------------------------

_TRAIN_FLAGS = {"epochs": "epochs", "lr": "learning_rate", "batch_size": "batch_size", "seed": "seed",
                "ib_training": "ib_in_training", "guidance": "mode", "theta_text": "theta_text_source",
                "theta_image": "theta_image_source", "alternation": "alternation", "heads": "heads",
                "blocks": "n_blocks", "ff_mult": "ff_mult"}


def train_config_from(args) -> TrainConfig:
    values = _merged(args, _TRAIN_FLAGS, field_names(TrainConfig, GuidanceConfig) - {"guidance"},
                     base={"batch_size": DESK_BATCH_SIZE})
    guidance = GuidanceConfig(**_split(values, GuidanceConfig))
    return TrainConfig(**{**_split(values, TrainConfig), "guidance": guidance})


def flat_train_config(cfg: TrainConfig) -> dict:
    out = {k: v for k, v in asdict(cfg).items() if k != "guidance"}
    out.update(asdict(cfg.guidance))
    return {k: (v.value if hasattr(v, "value") else v) for k, v in sorted(out.items())}


def cmd_train(args) -> int:
    cfg = _build_config(train_config_from, args)
    corpus = read_dataset(args.data)
    if not corpus:
        raise DatasetError(f"{args.data}: empty dataset")
    log_fh = open(args.log, "w", encoding="utf-8") if args.log else None

    def report(stats):
        print(stats.line(), flush=True)
        if log_fh:
            log_fh.write(stats.line() + "\n")

    try:
        state = train(corpus, cfg, on_epoch=report)
    finally:
        if log_fh:
            log_fh.close()
    save_checkpoint(state, flat_train_config(cfg), args.output)
    log.info("checkpoint written to %s", args.output)
    return EXIT_OK


# -- eval / order --------------------------------------------------------------

_INFER_FLAGS = {"steps": "steps", "early_stop": "early_stop", "renormalize": "renormalize", "guidance": "mode",
                "theta_text": "theta_text_source", "theta_image": "theta_image_source"}


def inference_config_from(args, ckpt_config: dict) -> InferenceConfig:
    base = {k: ckpt_config[k] for k in ("theta_text_source", "theta_image_source") if k in ckpt_config}
    values = _merged(args, _INFER_FLAGS, field_names(InferenceConfig, GuidanceConfig) - {"guidance"}, base=base)
    guidance = GuidanceConfig(**{k: v for k, v in _split(values, GuidanceConfig).items() if k != "renormalize"})
    return InferenceConfig(**{**_split(values, InferenceConfig), "guidance": guidance})


def _load(args):
    if not Path(args.checkpoint).exists():
        raise DatasetError(f"checkpoint not found: {args.checkpoint}")
    ckpt = load_checkpoint(args.checkpoint)
    corpus = read_dataset(args.data)
    if not corpus:
        raise DatasetError(f"{args.data}: empty dataset")
    for story in corpus:
        if story.text.dim != ckpt.text_model.width or story.image.dim != ckpt.image_model.width:
            raise DatasetError(
                f"width mismatch: checkpoint expects text d={ckpt.text_model.width}, image d={ckpt.image_model.width};"
                f" data has text d={story.text.dim}, image d={story.image.dim}", story_id=story.id)
    return ckpt, corpus


def _check_sim(corpus, cfg: InferenceConfig):
    if cfg.steps > 0 and cfg.guidance.enabled:
        for story in corpus:
            if story.cross_sim is None:
                raise DatasetError("missing similarity (guidance is on)", story_id=story.id)


def report_dict(results) -> dict:
    return {str(t): {m: r.as_dict() for m, r in by_mod.items()} for t, by_mod in results.items()}


def cmd_eval(args) -> int:
    ckpt, corpus = _load(args)
    cfg = _build_config(inference_config_from, args, ckpt.config)
    _check_sim(corpus, cfg)
    results = evaluate_corpus(corpus, ckpt.text_model, ckpt.image_model, cfg)
    for t, by_mod in results.items():
        for modality, rep in by_mod.items():
            print(rep.line(step=t, modality=modality))
    if args.output:
        Path(args.output).write_text(json.dumps(report_dict(results), indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return EXIT_OK


def trace_dict(story: StoryPair, result) -> dict:
    steps = []
    for rec in result.trace:
        entry = {"step": rec.step}
        for modality, matrix, perm, gold in (("text", rec.text_matrix, rec.text_perm, story.text.order),
                                             ("image", rec.image_matrix, rec.image_perm, story.image.order)):
            entry[modality] = {
                "matrix": matrix.tolist(),
                "permutation": perm,
                "metrics": {"acc": accuracy(perm, gold), "pmr": float(perm == gold), "tau": kendall_tau(perm, gold)},
            }
        steps.append(entry)
    return {"id": story.id, "steps": steps}


def _select(corpus, story_id):
    if story_id is None:
        return corpus
    chosen = [s for s in corpus if s.id == story_id]
    if not chosen:
        raise DatasetError(f"story {story_id!r} not found")
    return chosen


def cmd_order(args) -> int:
    ckpt, corpus = _load(args)
    cfg = _build_config(inference_config_from, args, ckpt.config)
    stories = _select(corpus, args.story_id)
    _check_sim(stories, cfg)
    lines, traces = [], []
    for story in stories:
        res = iterative_infer(story, ckpt.text_model, ckpt.image_model, cfg)
        lines.append(f"{story.id}\ttext\t{' '.join(map(str, res.text_perm))}")
        lines.append(f"{story.id}\timage\t{' '.join(map(str, res.image_perm))}")
        traces.append(trace_dict(story, res))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.trace:
        payload = traces[0] if len(traces) == 1 else {"stories": traces}
        Path(args.trace).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_trace_dump(args) -> int:
    ckpt, corpus = _load(args)
    cfg = _build_config(inference_config_from, args, ckpt.config)
    story = _select(corpus, args.story_id)[0]
    _check_sim([story], cfg)
    res = iterative_infer(story, ckpt.text_model, ckpt.image_model, cfg)
    Path(args.output).write_text(json.dumps(trace_dict(story, res), sort_keys=True) + "\n", encoding="utf-8")
    print(f"steps={res.steps_run} path={args.output}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_inference_flags(p):
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--guidance", type=_mode, help="on/relative-order or off")
    p.add_argument("--early-stop", dest="early_stop", type=_on_off)
    p.add_argument("--renormalize", type=_on_off)
    p.add_argument("--theta-text", dest="theta_text", type=float)
    p.add_argument("--theta-image", dest="theta_image", type=float)
    p.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crossorder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic paired-story dataset")
    p.add_argument("--regime")
    p.add_argument("--stories", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--min-size", dest="min_size", type=int)
    p.add_argument("--max-size", dest="max_size", type=int)
    p.add_argument("--order-signal", dest="order_signal", type=float)
    p.add_argument("--noise-text", dest="noise_text", type=float)
    p.add_argument("--noise-image", dest="noise_image", type=float)
    p.add_argument("--align-noise", dest="align_noise", type=float)
    p.add_argument("--unequal-sizes", dest="unequal_sizes", action="store_true")
    p.add_argument("--config")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train both modality models")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ib-training", dest="ib_training", type=_on_off)
    p.add_argument("--guidance", type=_mode)
    p.add_argument("--theta-text", dest="theta_text", type=float)
    p.add_argument("--theta-image", dest="theta_image", type=float)
    p.add_argument("--alternation", choices=["per-batch", "per-epoch"])
    p.add_argument("--heads", type=int)
    p.add_argument("--blocks", type=int)
    p.add_argument("--ff-mult", dest="ff_mult", type=int)
    p.add_argument("--log")
    p.add_argument("--config")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="per-step corpus metrics")
    _add_inference_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("order", help="predict orders for stories")
    _add_inference_flags(p)
    p.add_argument("--story-id", dest="story_id")
    p.add_argument("--trace")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("trace-dump", help="write the per-step trace of one story")
    _add_inference_flags(p)
    p.add_argument("--story-id", dest="story_id")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_trace_dump)
    return parser


def _build_config(fn, *a):
    try:
        return fn(*a)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("CROSSORDER_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"crossorder: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"crossorder: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DatasetError, CheckpointError, OSError, ValueError, KeyError) as exc:
        print(f"crossorder: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
