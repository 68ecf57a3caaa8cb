"""Command-line front end.

Subcommands: ``segment``, ``pipeline``, ``ablate``, ``bench``,
``rouge``, ``probe``. Configuration flows from four layers, later ones
winning: built-in defaults, a JSON file given with ``--config``,
``CHUNKFUSE_*`` environment variables, explicit flags. All outputs are
text (JSON, CSV, matrix dumps) so runs can be diffed byte for byte;
nothing written by ``pipeline`` depends on wall-clock time.

Exit codes: 0 success, 1 input or configuration error, 2 internal
contract violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path
from typing import Sequence

from . import bench as bench_mod
from . import cumulation
from .decoder import attention_mass_by_chunk, decode_step
from .errors import ConfigError, ContractError, InputError
from .metrics import make_repeated_chunk_doc, position_probe, rouge_l, rouge_n
from .numerics import save_matrix
from .pipeline import PipelineConfig, greedy_decode, run_document
from .encoder import init_weights
from .segmenter import segment, segment_set_to_dict

ENV_PREFIX = "CHUNKFUSE_"
_CONFIG_FIELDS = {f.name: f for f in fields(PipelineConfig)}
_DECODE_PREFIX = [0]
_DECODE_STEPS = 16


class _Parser(argparse.ArgumentParser):
    # usage problems are caller errors, exit 1 like other input errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _field_type(name: str):
    return float if name == "alpha" else int


def _config_flags(parser: argparse.ArgumentParser) -> None:
    for name in _CONFIG_FIELDS:
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, type=_field_type(name), default=None,
                            help=f"pipeline config field {name}")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file of pipeline config fields")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="directory for output artifacts")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel workers for per-document stages")
    _config_flags(parser)


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge defaults, --config file, CHUNKFUSE_* env vars, then flags."""
    values = asdict(PipelineConfig())

    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config file {args.config}: {exc}") from exc
        unknown = set(file_values) - set(values)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        values.update(file_values)

    for name in _CONFIG_FIELDS:
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is not None:
            try:
                values[name] = _field_type(name)(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {ENV_PREFIX + name.upper()}: {raw!r}") from exc

    for name in _CONFIG_FIELDS:
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            values[name] = flag_val

    return PipelineConfig(**values)


# ---------------------------------------------------------------------------
# corpus loading


def load_corpus(path: Path) -> tuple[list[tuple[str, tuple[int, ...]]], dict | None]:
    """Read a JSONL corpus of {"id", "tokens"} or {"id", "text"} lines.

    Text corpora are whitespace-tokenized against a vocabulary built
    from the sorted set of all words in the corpus; the mapping is
    returned so runs can persist it. Mixing the two document kinds in
    one file is rejected.
    """
    docs_raw = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc

    kind = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
        if not isinstance(obj, dict) or "id" not in obj:
            raise InputError(f"{path}:{lineno}: document needs an \"id\" field")
        if "tokens" in obj:
            this_kind = "tokens"
        elif "text" in obj:
            this_kind = "text"
        else:
            raise InputError(f"{path}:{lineno}: need \"tokens\" or \"text\"")
        if kind is None:
            kind = this_kind
        elif kind != this_kind:
            raise InputError(
                f"{path}:{lineno}: cannot mix \"tokens\" and \"text\" documents")
        docs_raw.append((lineno, str(obj["id"]), obj))

    if kind == "text":
        words = sorted({w for _, _, obj in docs_raw for w in obj["text"].split()})
        vocab = {w: i for i, w in enumerate(words)}
        docs = [(doc_id, tuple(vocab[w] for w in obj["text"].split()))
                for _, doc_id, obj in docs_raw]
        return docs, vocab

    docs = []
    for lineno, doc_id, obj in docs_raw:
        toks = obj["tokens"]
        if (not isinstance(toks, list)
                or any(not isinstance(t, int) or t < 0 for t in toks)):
            raise InputError(
                f"{path}:{lineno}: tokens must be a list of non-negative ints")
        docs.append((doc_id, tuple(toks)))
    return docs, None


def _safe_id(doc_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", doc_id) or "_"


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path | None, rows: list[list]) -> None:
    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerows(rows)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_segment(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    docs, _ = load_corpus(args.corpus)
    for doc_id, tokens in docs:
        seg_json = segment_set_to_dict(
            segment(tokens, cfg.chunk_len, cfg.overlap),
            include_tokens=args.include_tokens)
        seg_json["id"] = doc_id
        line = json.dumps(seg_json, sort_keys=True)
        if args.out_dir is None:
            print(line)
        else:
            _write_json(args.out_dir / f"{_safe_id(doc_id)}.segments.json", seg_json)
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    docs, vocab = load_corpus(args.corpus)
    out_dir: Path = args.out_dir or Path("chunkfuse-run")

    if not docs:
        print(f"warning: corpus {args.corpus} holds no documents; "
              "nothing to do", file=sys.stderr)
        return 0

    if vocab is not None:
        cfg = cfg.with_vocab(max(len(vocab), 1))
    else:
        max_id = max((max(t) for _, t in docs if t), default=0)
        if max_id >= cfg.vocab_size:
            raise InputError(
                f"corpus holds token id {max_id} but vocab_size is "
                f"{cfg.vocab_size}; raise --vocab-size")

    safe_ids = [_safe_id(d) for d, _ in docs]
    if len(set(safe_ids)) != len(safe_ids):
        raise InputError("document ids collide after filesystem sanitizing")

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "config.json", json.loads(cfg.canonical_json()))
    with open(out_dir / "config_hash.txt", "w", encoding="ascii", newline="\n") as fh:
        fh.write(cfg.config_hash() + "\n")
    if vocab is not None:
        _write_json(out_dir / "vocab.json", vocab)

    weights = init_weights(cfg.encoder_config())
    dec_cfg = cfg.decoder_config(max_len=len(_DECODE_PREFIX) + _DECODE_STEPS)

    def process(doc_id: str, tokens: tuple[int, ...], safe: str) -> None:
        run = run_document(tokens, cfg, weights=weights, doc_id=doc_id)
        doc_dir = out_dir / "docs" / safe
        doc_dir.mkdir(parents=True, exist_ok=True)
        _write_json(doc_dir / "segments.json",
                    segment_set_to_dict(run.segments))
        manifest = cumulation.fused_sequence_manifest(run.fused)
        manifest["doc_id"] = doc_id
        manifest["n_tokens"] = len(tokens)
        _write_json(doc_dir / "fused_manifest.json", manifest)
        save_matrix(run.fused.flattened, doc_dir / "fused_matrix.txt")
        generated = greedy_decode(_DECODE_PREFIX, run.fused, dec_cfg, _DECODE_STEPS)
        _write_json(doc_dir / "decode_demo.json", {
            "doc_id": doc_id,
            "prefix": _DECODE_PREFIX,
            "generated": generated[len(_DECODE_PREFIX):],
        })
        _, cross = decode_step(generated, run.fused, dec_cfg)
        mass = attention_mass_by_chunk(cross, run.fused.provenance)
        _write_csv(doc_dir / "attention_mass.csv",
                   [["chunk", "mass"],
                    *[[i + 1, repr(float(m))] for i, m in enumerate(mass)]])

    if args.workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(lambda t: process(*t),
                          [(d, toks, s) for (d, toks), s in zip(docs, safe_ids)]))
    else:
        for (doc_id, tokens), safe in zip(docs, safe_ids):
            process(doc_id, tokens, safe)

    _write_json(out_dir / "run_meta.json", {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "middle_seed_effective": cfg.effective_middle_seed(),
        "documents": [d for d, _ in docs],
        "vocab_size_effective": cfg.vocab_size,
        "corpus": str(args.corpus),
    })
    return 0


_AXES = {
    "alpha": "alpha",
    "middle-count": "middle_count",
    "overlap": "overlap",
}


def cmd_ablate(args: argparse.Namespace) -> int:
    field = _AXES[args.axis]
    cast = float if field == "alpha" else int

    # the swept field's base value is irrelevant (every row replaces it),
    # so seed it from the sweep list unless a flag pinned it explicitly
    if getattr(args, field, None) is None:
        for raw in args.values.split(","):
            try:
                setattr(args, field, cast(raw))
                break
            except ValueError:
                continue

    cfg = build_config(args)
    docs, vocab = load_corpus(args.corpus)
    if vocab is not None:
        cfg = cfg.with_vocab(max(len(vocab), 1))
    if not docs:
        raise InputError("ablation needs a non-empty corpus")
    rows: list[list] = [[args.axis, "probe_mse", "scale_rows", "fuse_seconds"]]
    weights = init_weights(cfg.encoder_config())

    for raw in args.values.split(","):
        try:
            value = cast(raw)
            variant = replace(cfg, **{field: value})
        except (ValueError, ConfigError) as exc:
            print(f"warning: skipping invalid {args.axis} value {raw!r}: {exc}",
                  file=sys.stderr)
            continue
        fuse_seconds = 0.0
        scale_rows = 0
        for doc_id, tokens in docs:
            _, fuse_s, rows_n = bench_mod.timed_run(tokens, variant, weights, doc_id)
            fuse_seconds += fuse_s
            scale_rows += rows_n
        probe = position_probe([t for _, t in docs], variant.alpha, variant,
                               weights=weights)
        rows.append([repr(float(value)) if field == "alpha" else value,
                     repr(probe.mse), scale_rows, repr(fuse_seconds)])

    out = (args.out_dir / "ablation.csv") if args.out_dir else None
    _write_csv(out, rows)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    lengths = [int(v) for v in args.lengths.split(",")]
    report = bench_mod.run_scaling(lengths, cfg, repeats=args.repeats)
    if not report.reliable:
        print("warning: smallest point ran under the reliable-timing floor; "
              "slope may be noise", file=sys.stderr)
    if args.out_dir is not None:
        _write_csv(args.out_dir / "scaling.csv", report.csv_rows())
        _write_json(args.out_dir / "verdict.json", report.verdict())
    else:
        _write_csv(None, report.csv_rows())
    print(json.dumps(report.verdict(), sort_keys=True))
    return 0


def cmd_rouge(args: argparse.Namespace) -> int:
    def read_lines(path: Path) -> list[str]:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return fh.read().splitlines()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc

    cand_lines = read_lines(args.candidates)
    ref_lines = read_lines(args.references)
    if len(cand_lines) != len(ref_lines):
        raise InputError(
            f"line count mismatch: {len(cand_lines)} candidate lines vs "
            f"{len(ref_lines)} reference lines")

    rows: list[list] = [["line", "rouge1_f1", "rouge2_f1", "rougeL_f1"]]
    sums = [0.0, 0.0, 0.0]
    for i, (cand, ref) in enumerate(zip(cand_lines, ref_lines), start=1):
        c, r = cand.split(), ref.split()
        scores = (rouge_n(c, r, 1).f1, rouge_n(c, r, 2).f1, rouge_l(c, r).f1)
        for j, s in enumerate(scores):
            sums[j] += s
        rows.append([i, *(repr(s) for s in scores)])
    n = max(len(cand_lines), 1)
    rows.append(["mean", *(repr(s / n) for s in sums)])

    out = (args.out_dir / "rouge.csv") if args.out_dir else None
    _write_csv(out, rows)
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    if args.corpus is not None:
        docs_pairs, vocab = load_corpus(args.corpus)
        if vocab is not None:
            cfg = cfg.with_vocab(max(len(vocab), 1))
        docs = [t for _, t in docs_pairs]
    else:
        docs = [make_repeated_chunk_doc(args.n_chunks, cfg.chunk_len, cfg.overlap,
                                        cfg.vocab_size, args.doc_seed + i)
                for i in range(args.n_docs)]
    weights = init_weights(cfg.encoder_config())

    rows: list[list] = [["alpha", "probe_mse"]]
    for raw in args.alphas.split(","):
        alpha = float(raw)
        result = position_probe(docs, alpha, cfg, weights=weights)
        rows.append([repr(alpha), repr(result.mse)])

    out = (args.out_dir / "probe.csv") if args.out_dir else None
    _write_csv(out, rows)
    return 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> _Parser:
    parser = _Parser(prog="chunkfuse",
                     description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="dump overlapping windows per document")
    _common_flags(p)
    p.add_argument("corpus", type=Path)
    p.add_argument("--include-tokens", action="store_true")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("pipeline", help="run the full pipeline over a corpus")
    _common_flags(p)
    p.add_argument("corpus", type=Path)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("ablate", help="sweep one axis and record probe/size/cost")
    _common_flags(p)
    p.add_argument("corpus", type=Path)
    p.add_argument("--axis", choices=sorted(_AXES), required=True)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bench", help="measure scaling against document length")
    _common_flags(p)
    p.add_argument("--lengths", default="8192,16384,32768,65536")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rouge", help="score candidate summaries against references")
    _common_flags(p)
    p.add_argument("candidates", type=Path)
    p.add_argument("references", type=Path)
    p.set_defaults(func=cmd_rouge)

    p = sub.add_parser("probe", help="position-probe mse across fusion ratios")
    _common_flags(p)
    p.add_argument("--corpus", type=Path, default=None)
    p.add_argument("--alphas", default="0.0,0.25,0.5,0.75,1.0")
    p.add_argument("--n-chunks", type=int, default=5)
    p.add_argument("--n-docs", type=int, default=3)
    p.add_argument("--doc-seed", type=int, default=11)
    p.set_defaults(func=cmd_probe)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ContractError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
