"""Command-line entry point wiring the pipeline into reproducible runs.

Exit codes: 0 success, 1 domain error (lint issues, invalid stimulus,
training failure), 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .codec import CodecError, Vocab, validate_and_decode
from .corpus import load_bundled_corpus, load_corpus_dir
from .curation import CurationConfig, curate, load_dataset
from .evaluation import ablate, eval_policy, write_ablation
from .hdl import ParseError, lint, parse
from .policy import TabularPolicy
from .sim import Stimulus, average_score, simulate
from .training import TrainConfig, TrainingError, train


# Shipped demo defaults.  The tabular policy starts uniform, so the
# preference modes need a larger step budget than TrainConfig's generic
# defaults to move the logits meaningfully within the demo's time budget.
DEFAULT_CURATION = {"tau1": 0.7, "tau2": 1.2, "pairs_per_dut": 400,
                    "teacher": "novelty", "seed": 42}
DEFAULT_TRAIN = {"mode": "CDDPO", "beta": 0.2, "f_variant": "identity_clamp",
                 "learning_rate": 4.0, "epochs": 120, "batch_size": 16, "seed": 42}
DEFAULT_EVAL = {"n": 20, "tau": 1.0, "seed": 42}


@dataclass
class ExperimentConfig:
    corpus_dir: str | None = None  # None -> bundled corpus
    report_dir: str = "report"
    dataset_file: str = "pairs.jsonl"
    wmax: int = 4
    t_max: int = 8
    k: int = 2
    curation: dict = field(default_factory=lambda: dict(DEFAULT_CURATION))
    train: dict = field(default_factory=lambda: dict(DEFAULT_TRAIN))
    eval: dict = field(default_factory=lambda: dict(DEFAULT_EVAL))

    KNOWN = ("corpus_dir", "report_dir", "dataset_file", "wmax", "t_max", "k",
             "curation", "train", "eval")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        unknown = set(doc) - set(cls.KNOWN)
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**doc)

    def load_corpus(self):
        if self.corpus_dir is None:
            return load_bundled_corpus()
        return load_corpus_dir(self.corpus_dir)

    def curation_config(self) -> CurationConfig:
        return CurationConfig(t_max=self.t_max, wmax=self.wmax, k=self.k, **self.curation)

    def train_config(self, mode: str | None = None) -> TrainConfig:
        fields = dict(self.train)
        if mode is not None:
            fields["mode"] = mode
        return TrainConfig(**fields)

    def eval_settings(self) -> tuple[int, float, int]:
        return (self.eval.get("n", 20), self.eval.get("tau", 1.0), self.eval.get("seed", 42))

    def dataset_path(self) -> Path:
        return Path(self.report_dir) / self.dataset_file


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        return ExperimentConfig()
    return ExperimentConfig.from_file(args.config)


def _read_design(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return parse(text)


def cmd_lint(args) -> int:
    dut = _read_design(args.file)
    issues = lint(dut)
    for issue in issues:
        print(issue)
    return 0 if not issues else 1


def cmd_simulate(args) -> int:
    dut = _read_design(args.file)
    issues = lint(dut)
    if issues:
        for issue in issues:
            print(issue, file=sys.stderr)
        return 1
    vocab = Vocab(args.wmax)
    if args.stim is not None:
        values = [int(v) for v in args.stim.split(",") if v.strip() != ""]
        tokens = [vocab.bos] + values + [vocab.eos]
        try:
            stim = validate_and_decode(dut, tokens, vocab, args.t_max)
        except CodecError as err:
            print(f"codec error: {err}", file=sys.stderr)
            return 1
    else:
        cycles = []
        for chunk in args.cycles.split(";"):
            cycle = {}
            for part in chunk.split(","):
                name, _, value = part.partition("=")
                cycle[name.strip()] = int(value)
            cycles.append(cycle)
        stim = Stimulus(tuple(cycles))
    report = simulate(dut, stim)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _curate_with_stats(config: ExperimentConfig, corpus):
    stats = curate(corpus, config.curation_config(), config.dataset_path())
    stats_path = Path(config.report_dir) / "curation_stats.json"
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2)
        fh.write("\n")
    return stats


def cmd_curate(args) -> int:
    config = _load_config(args)
    corpus = config.load_corpus()
    Path(config.report_dir).mkdir(parents=True, exist_ok=True)
    stats = _curate_with_stats(config, corpus)
    print(f"kept {stats.kept} of {stats.attempted} pairs "
          f"({stats.dropped_both_invalid} both_invalid, {stats.dropped_tie} tie) "
          f"-> {config.dataset_path()}")
    return 0


def _train_one(config: ExperimentConfig, mode: str | None, dataset):
    vocab = Vocab(config.wmax)
    init = TabularPolicy(vocab, config.k, config.t_max)
    train_config = config.train_config(mode)
    result = train(dataset, train_config, init)
    report_dir = Path(config.report_dir)
    ckpt = report_dir / f"{train_config.mode.lower()}.ckpt.json"
    hist = report_dir / f"{train_config.mode.lower()}.history.json"
    result.policy.save(ckpt)
    with open(hist, "w", encoding="utf-8") as fh:
        json.dump(result.history.to_dict(), fh, indent=2)
        fh.write("\n")
    return train_config.mode, result


def cmd_train(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(config.dataset_path())
    mode, result = _train_one(config, args.mode, dataset)
    print(f"{mode}: final epoch loss {result.history.epoch_loss[-1]:.6f}")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args)
    corpus = config.load_corpus()
    policy = TabularPolicy.load(args.checkpoint)
    vocab = Vocab(config.wmax)
    n, tau, seed = config.eval_settings()
    reports = [eval_policy(policy, dut, n, tau, seed, vocab, config.t_max)
               for dut in corpus]
    report_dir = Path(config.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    out = report_dir / "eval.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)
        fh.write("\n")
    for r in reports:
        print(f"{r.dut}: mean@{n} avg {r.mean['average']:.4f}, "
              f"best@{n} avg {r.best['average']:.4f}")
    return 0


def _run_ablation(config: ExperimentConfig, dataset):
    corpus = config.load_corpus()
    vocab = Vocab(config.wmax)
    n, tau, seed = config.eval_settings()
    base = config.train_config()
    table, policies = ablate(corpus, dataset, base, n, seed, vocab,
                             config.k, config.t_max, tau_eval=tau)
    report_dir = Path(config.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    write_ablation(table, report_dir / "ablation.csv", report_dir / "ablation.json")
    for name in ("sft", "dpo", "cddpo"):
        policies[name].save(report_dir / f"{name}.ckpt.json")
        with open(report_dir / f"{name}.history.json", "w", encoding="utf-8") as fh:
            json.dump(table.histories[name].to_dict(), fh, indent=2)
            fh.write("\n")
    return table


def cmd_ablate(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(config.dataset_path())
    table = _run_ablation(config, dataset)
    print(f"wrote {Path(config.report_dir) / 'ablation.csv'} ({len(table.rows)} rows)")
    return 0


def cmd_demo(args) -> int:
    config = _load_config(args)
    corpus = config.load_corpus()
    Path(config.report_dir).mkdir(parents=True, exist_ok=True)
    stats = _curate_with_stats(config, corpus)
    print(f"curated {stats.kept} pairs from {stats.attempted} attempts")
    dataset = load_dataset(config.dataset_path())
    table = _run_ablation(config, dataset)
    for dut in corpus:
        vanilla = table.value("vanilla", dut.name, "average", "mean")
        cddpo = table.value("cddpo", dut.name, "average", "mean")
        print(f"{dut.name}: mean@{table.n} avg coverage vanilla {vanilla:.4f} "
              f"-> cddpo {cddpo:.4f}")
    print(f"artifacts written under {config.report_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covstim",
        description="Coverage-driven preference optimization lab for mini-HDL stimuli.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lint", help="parse and lint a design file")
    p.add_argument("file")
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("simulate", help="simulate one stimulus, print coverage JSON")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--stim", help="comma-separated value tokens, e.g. '1,0'")
    group.add_argument("--cycles", help="semicolon-separated cycles, e.g. 'a=1;a=0'")
    p.add_argument("--wmax", type=int, default=4)
    p.add_argument("--t-max", type=int, default=8, dest="t_max")
    p.set_defaults(func=cmd_simulate)

    for name, func, extra in (
        ("curate", cmd_curate, None),
        ("train", cmd_train, "mode"),
        ("eval", cmd_eval, "checkpoint"),
        ("ablate", cmd_ablate, None),
        ("demo", cmd_demo, None),
    ):
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", help="experiment config JSON (defaults used if omitted)")
        if extra == "mode":
            p.add_argument("--mode", choices=("SFT", "DPO", "CDDPO"))
        elif extra == "checkpoint":
            p.add_argument("--checkpoint", required=True)
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return 1
    except (CodecError, TrainingError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
