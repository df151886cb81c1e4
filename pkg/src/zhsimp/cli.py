"""Command-line entry point: ``zhsimp generate|simplify|evaluate``.

A run is described by an INI file; relative paths resolve against the
file's directory::

    [resources]
    synonyms = synonyms.txt
    frequency = freq.tsv
    valid_words = valid.txt
    sememes = sememes.tsv
    embeddings = vectors.txt

    [backend]
    kind = mock            ; or: transformers
    table = mlm_table.tsv  ; mock only
    model = bert-base-chinese
    device = cpu
    ceiling_loss = 20.0

    [generation]
    generator = hybrid

    [mlm]
    top_n = 10
    max_mask_len = 4

    [embedding]
    k = 10

    [ranking]
    features = language, similarity, frequency, hownet

    [lm]
    window = 5

    [run]
    workers = 1
    segmenter = tagged     ; or: jieba (whole-sentence mode only)

Exit codes: 0 success, 1 configuration or resource error, 2 data error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .core import DatasetParseError, DatasetValidationError, load_dataset
from .evaluation import AlignmentError, report_dict
from .generation import GeneratorConfig, Method
from .lexicons import FrequencyTable, LexiconBundle, LexiconError, load_resource
from .mlm import DEFAULT_CEILING_LOSS, MlmBackend, MockBackend, TransformersBackend
from .pipeline import (
    ConfigurationError,
    JiebaSegmenter,
    PresegmentedText,
    SimplificationTrace,
    Simplifier,
    parse_tagged,
)
from .ranking import Feature, RankerConfig

log = logging.getLogger("zhsimp")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2

RESOURCE_KEYS = ("synonyms", "frequency", "valid_words", "sememes", "embeddings")
KNOWN_KEYS = {
    "resources": set(RESOURCE_KEYS),
    "backend": {"kind", "table", "model", "device", "ceiling_loss"},
    "generation": {"generator"},
    "mlm": {"top_n", "max_mask_len"},
    "embedding": {"k"},
    "ranking": {"features"},
    "lm": {"window"},
    "run": {"workers", "segmenter"},
}


@dataclass(frozen=True)
class RunConfig:
    resources: dict[str, Path] = field(default_factory=dict)
    backend_kind: str = "mock"
    backend_table: Path | None = None
    backend_model: str = "bert-base-chinese"
    backend_device: str = "cpu"
    ceiling_loss: float = DEFAULT_CEILING_LOSS
    generator: GeneratorConfig = GeneratorConfig()
    ranker: RankerConfig = RankerConfig()
    workers: int = 1
    segmenter: str = "tagged"

    @property
    def needs_backend(self) -> bool:
        return (
            self.generator.method in (Method.MLM, Method.HYBRID)
            or Feature.LANGUAGE in self.ranker.features
        )


def parse_features(text: str) -> tuple[Feature, ...]:
    names = [t.strip().lower() for t in text.replace("[", "").replace("]", "").split(",")]
    names = [n for n in names if n]
    if not names:
        raise ConfigurationError("at least one ranking feature must be enabled")
    try:
        return tuple(Feature(n) for n in names)
    except ValueError:
        raise ConfigurationError(
            f"unknown feature in {text!r}; choose from {', '.join(f.value for f in Feature)}"
        ) from None


def read_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    for section in parser.sections():
        if section not in KNOWN_KEYS:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        unknown = set(parser[section]) - KNOWN_KEYS[section]
        if unknown:
            raise ConfigurationError(f"{path}: unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    base = path.parent

    def get(section, key, default=None):
        return parser.get(section, key, fallback=default)

    def get_int(section, key, default):
        try:
            return parser.getint(section, key, fallback=default)
        except ValueError:
            raise ConfigurationError(f"{path}: [{section}] {key} must be an integer") from None

    resources = {k: base / v for k, v in (parser["resources"].items() if parser.has_section("resources") else [])}
    table = get("backend", "table")
    try:
        generator = GeneratorConfig(
            method=Method(get("generation", "generator", "hybrid").strip().lower()),
            top_n=get_int("mlm", "top_n", 10),
            max_mask_len=get_int("mlm", "max_mask_len", 4),
            k=get_int("embedding", "k", 10),
        )
        ranker = RankerConfig(
            features=parse_features(get("ranking", "features", "language, similarity, frequency, hownet")),
            window=get_int("lm", "window", 5),
        )
        ceiling = float(get("backend", "ceiling_loss", DEFAULT_CEILING_LOSS))
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return RunConfig(
        resources=resources,
        backend_kind=get("backend", "kind", "mock").strip().lower(),
        backend_table=base / table if table else None,
        backend_model=get("backend", "model", "bert-base-chinese"),
        backend_device=get("backend", "device", "cpu"),
        ceiling_loss=ceiling,
        generator=generator,
        ranker=ranker,
        workers=get_int("run", "workers", 1),
        segmenter=get("run", "segmenter", "tagged").strip().lower(),
    )


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if getattr(args, "generator", None):
        try:
            config = replace(config, generator=replace(config.generator, method=Method(args.generator)))
        except ValueError:
            raise ConfigurationError(f"unknown generator {args.generator!r}") from None
    if getattr(args, "features", None) is not None:
        config = replace(config, ranker=RankerConfig(parse_features(args.features), config.ranker.window))
    if getattr(args, "workers", None) is not None:
        config = replace(config, workers=args.workers)
    if config.workers < 1:
        raise ConfigurationError("workers must be >= 1")
    return config


def load_bundle(config: RunConfig) -> LexiconBundle:
    missing = [k for k in RESOURCE_KEYS if k not in config.resources]
    if missing:
        raise ConfigurationError(f"[resources] lacks {', '.join(missing)}")
    for key in RESOURCE_KEYS:
        if not config.resources[key].is_file():
            raise ConfigurationError(f"resource file not found: {config.resources[key]}")
    return LexiconBundle.load(**{
        "synonyms": config.resources["synonyms"],
        "frequency": config.resources["frequency"],
        "valid_words": config.resources["valid_words"],
        "sememes": config.resources["sememes"],
        "embeddings": config.resources["embeddings"],
    })


def load_backend(config: RunConfig) -> MlmBackend | None:
    if not config.needs_backend:
        return None
    if config.backend_kind == "mock":
        if config.backend_table is None:
            raise ConfigurationError("[backend] table is required for the mock backend")
        if not config.backend_table.is_file():
            raise ConfigurationError(f"mock table not found: {config.backend_table}")
        try:
            return MockBackend.load(str(config.backend_table), config.ceiling_loss)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
    if config.backend_kind == "transformers":
        try:
            return TransformersBackend(config.backend_model, config.backend_device, config.ceiling_loss)
        except Exception as exc:
            raise ConfigurationError(f"cannot load model {config.backend_model!r}: {exc}") from None
    raise ConfigurationError(f"unknown backend kind {config.backend_kind!r}")


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text, encoding="utf-8")


def _map(fn, items, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _setup(args) -> tuple[RunConfig, LexiconBundle, MlmBackend | None]:
    config = apply_overrides(read_config(args.config), args)
    bundle = load_bundle(config)
    backend = load_backend(config)
    return config, bundle, backend


def cmd_generate(args) -> int:
    config, bundle, backend = _setup(args)
    simplifier = Simplifier(bundle, backend, config.generator, config.ranker)
    dataset = load_dataset(args.dataset)

    def run(job):
        key, inst = job
        cands = simplifier.candidates(inst, key)
        record = {
            "id": key,
            "method": cands.method.value,
            "target": cands.target,
            "candidates": sorted(cands.candidates),
            "raw": sorted(cands.raw),
        }
        return json.dumps(record, ensure_ascii=False) + "\n"

    _write("".join(_map(run, dataset.keyed(), config.workers)), args.out)
    return EXIT_OK


def cmd_simplify(args) -> int:
    config, bundle, backend = _setup(args)
    simplifier = Simplifier(bundle, backend, config.generator, config.ranker)
    if args.text:
        segment = _segmenter_factory(config)
        jobs = []
        with open(args.input, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if line.strip():
                    try:
                        jobs.append((str(len(jobs)), *segment(line.strip())))
                    except ValueError as exc:
                        raise DatasetParseError(line_no, str(exc)) from None

        def run_line(job):
            n, sentence, segmenter = job
            _, traces = simplifier.simplify_sentence(sentence, segmenter, n)
            return "".join(t.to_json() + "\n" for t in traces)

        _write("".join(_map(run_line, jobs, config.workers)), args.out)
        return EXIT_OK
    dataset = load_dataset(args.input)
    traces = simplifier.simplify_dataset(dataset, config.workers)
    _write("".join(t.to_json() + "\n" for t in traces), args.out)
    return EXIT_OK


def _segmenter_factory(config: RunConfig):
    if config.segmenter == "tagged":
        def tagged(line):
            words = parse_tagged(line)
            seg = PresegmentedText(words)
            return seg.text, seg
        return tagged
    if config.segmenter == "jieba":
        seg = JiebaSegmenter()
        return lambda line: (line, seg)
    raise ConfigurationError(f"unknown segmenter {config.segmenter!r}")


def cmd_evaluate(args) -> int:
    config = apply_overrides(read_config(args.config), args)
    freq_path = config.resources.get("frequency")
    if freq_path is None:
        raise ConfigurationError("[resources] frequency is required for error analysis")
    if not freq_path.is_file():
        raise ConfigurationError(f"resource file not found: {freq_path}")
    freq = load_resource(FrequencyTable, freq_path)
    dataset = load_dataset(args.dataset)
    traces = load_traces(args.traces)
    report = report_dict(traces, dataset, freq, macro=args.macro)
    _write(json.dumps(report, ensure_ascii=False, indent=2) + "\n", args.out)
    return EXIT_OK


def load_traces(path: str) -> list[SimplificationTrace]:
    traces = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                traces.append(SimplificationTrace.from_json(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise DatasetParseError(line_no, f"bad trace ({exc})") from None
    return traces


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zhsimp", description="Chinese lexical simplification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, generator=True):
        p.add_argument("--config", metavar="PATH", help="run configuration (INI)")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        if generator:
            p.add_argument("--generator", choices=[m.value for m in Method])
            p.add_argument("--features", metavar="LIST", help="comma-separated ranking features")
            p.add_argument("--workers", type=int, metavar="N")

    p = sub.add_parser("generate", help="substitute candidates per instance")
    common(p)
    p.add_argument("dataset")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simplify", help="full pipeline; JSON-lines traces")
    common(p)
    p.add_argument("input", help="dataset file, or text lines with --text")
    p.add_argument("--text", action="store_true", help="input is sentences, one per line")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("evaluate", help="metrics report from a dataset and its traces")
    common(p, generator=False)
    p.add_argument("dataset")
    p.add_argument("traces")
    p.add_argument("--macro", action="store_true", help="macro-average precision and recall")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, LexiconError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (DatasetParseError, DatasetValidationError, AlignmentError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
