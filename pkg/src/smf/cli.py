"""Command-line interface: reproducible batch runs with on-disk artifacts.

Every command writes its outputs plus a ``manifest.json`` into ``--out-dir``
(default ``./smf-out``).  The manifest records the subcommand, every
resolved option, the SHA-256 of each input file, and the package version;
``smf rerun manifest.json`` re-executes the run and reproduces all output
files byte for byte (the manifest itself carries the wall-clock duration
and is excluded from that guarantee).

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .factors import FactorPair, Orientation
from .faces import (GrayImage, downsample_2x2, read_pgm, reconstruct,
                    reconstruction_error, retrieve, write_pgm)
from .identify import (DegenerateFactorError, analysis_report, natural_bounds,
                       sample_feasible_A)
from .matrixio import read_matrix, write_matrix_binary, write_matrix_csv
from .solver import (InvalidInputError, Mode, RankDeficientError, SolverConfig,
                     factorize)
from .topics import (TopicModel, build_corpus, fit_topics, read_corpus,
                     write_corpus, write_histogram_csv, write_top_terms_csv)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_MANIFEST_NAME = "manifest.json"


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _dump_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_matrix(matrix, out_dir: str, stem: str, binary: bool) -> str:
    name = f"{stem}.bin" if binary else f"{stem}.csv"
    path = os.path.join(out_dir, name)
    if binary:
        write_matrix_binary(path, matrix)
    else:
        write_matrix_csv(path, matrix)
    return path


def _write_manifest(command: str, options: dict, input_paths, out_dir: str,
                    duration: float) -> None:
    manifest = {
        "command": command,
        "options": options,
        "inputs": [{"path": p, "sha256": _sha256(p)} for p in input_paths],
        "version": __version__,
        "duration_seconds": duration,
    }
    _dump_json(manifest, os.path.join(out_dir, _MANIFEST_NAME))


def _prepare_out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _load_factors(w_path: str, h_path: str, orientation: Orientation) -> FactorPair:
    w = read_matrix(w_path)
    h = read_matrix(h_path)
    return FactorPair(w=w, h=h, orientation=orientation)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        rank=args.rank,
        orientation=Orientation(args.orientation),
        max_iter=args.max_iter,
        conv_tol=args.tol,
        penalty_sum1=args.weights[0],
        penalty_nonneg=args.weights[1],
        restarts=args.restarts,
        seed=args.seed,
        mode=Mode(args.mode),
    )


def _result_payload(result) -> dict:
    return {
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "best_restart": result.best_restart,
        "restart_objectives": list(result.restart_objectives),
        "objective_trace": list(result.objective_trace),
    }


# Each handler returns the list of input paths it consumed, so the shared
# driver can hash them into the manifest.

def _cmd_factorize(args, out_dir: str):
    x = read_matrix(args.input)
    config = _solver_config(args)
    result = factorize(x, config, threads=args.threads)
    _write_matrix(result.factors.w, out_dir, "W", args.binary)
    _write_matrix(result.factors.h, out_dir, "H", args.binary)
    _dump_json(_result_payload(result), os.path.join(out_dir, "result.json"))
    return [args.input]


def _cmd_analyze(args, out_dir: str):
    factors = _load_factors(args.w, args.h, Orientation(args.orientation))
    report = analysis_report(factors, zero_tol=args.zero_tol)
    if args.samples > 0:
        samples = sample_feasible_A(factors, args.samples, seed=args.seed,
                                    step=args.step, zero_tol=args.zero_tol)
        bounds = {(b.r1, b.r2): b for b in natural_bounds(factors, args.zero_tol)}
        row_dev = 0.0
        checked = outside = 0
        for s in samples:
            a = s.a
            row_dev = max(row_dev, float(np.max(np.abs(a.sum(axis=1) - 1.0))))
            off = a - np.diag(np.diag(a))
            nz = np.argwhere(np.abs(off) > 1e-12)
            if len(nz) == 1:
                r1, r2 = (int(v) for v in nz[0])
                b = bounds[(r1, r2)]
                checked += 1
                if not (b.lower - args.step <= a[r1, r2] <= b.upper + args.step):
                    outside += 1
        report["oracle"] = {
            "n_samples": args.samples,
            "seed": args.seed,
            "step": args.step,
            "max_row_sum_deviation": row_dev,
            "single_axis_checked": checked,
            "single_axis_outside_bounds": outside,
        }
    _dump_json(report, os.path.join(out_dir, "report.json"))
    return [args.w, args.h]


def _cmd_faces_ingest(args, out_dir: str):
    names = sorted(n for n in os.listdir(args.directory)
                   if n.lower().endswith(".pgm"))
    if not names:
        raise InvalidInputError(f"no .pgm files found in {args.directory}")
    rows = []
    paths = []
    for name in names:
        path = os.path.join(args.directory, name)
        paths.append(path)
        img = read_pgm(path)
        if img.pixels.shape == (19, 19):
            img = downsample_2x2(img)
        rows.append(img.flatten())
    widths = {r.size for r in rows}
    if len(widths) > 1:
        raise InvalidInputError("all images must share the same dimensions")
    _write_matrix(np.vstack(rows), out_dir, "X", args.binary)
    with open(os.path.join(out_dir, "files.txt"), "w", encoding="utf-8") as fh:
        for name in names:
            fh.write(name + "\n")
    return paths


def _cmd_faces_reconstruct(args, out_dir: str):
    factors = _load_factors(args.w, args.h, Orientation.W_ROWS_SUM_TO_1)
    if not (0 <= args.row < factors.w.shape[0]):
        raise InvalidInputError(
            f"--row must be in 0..{factors.w.shape[0] - 1}"
        )
    img = reconstruct(factors.w[args.row], factors.h)
    write_pgm(img, os.path.join(out_dir, "reconstruction.pgm"),
              binary=args.binary)
    return [args.w, args.h]


def _cmd_faces_retrieve(args, out_dir: str):
    factors = _load_factors(args.w, args.h, Orientation.W_ROWS_SUM_TO_1)
    query = read_pgm(args.query)
    index, distance = retrieve(query, factors)
    _dump_json({"index": index, "distance": distance},
               os.path.join(out_dir, "retrieval.json"))
    return [args.query, args.w, args.h]


def _cmd_faces_error(args, out_dir: str):
    factors = _load_factors(args.w, args.h, Orientation.W_ROWS_SUM_TO_1)
    x = read_matrix(args.input)
    err = reconstruction_error(x, factors)
    _dump_json({"reconstruction_error": err},
               os.path.join(out_dir, "error.json"))
    return [args.input, args.w, args.h]


def _cmd_topics_build(args, out_dir: str):
    with open(args.corpus, encoding="utf-8") as fh:
        documents = [line.rstrip("\n") for line in fh]
    documents = [d for d in documents if d.strip()]
    stop_words = ()
    inputs = [args.corpus]
    if args.stop_words:
        with open(args.stop_words, encoding="utf-8") as fh:
            stop_words = tuple(w.strip() for w in fh if w.strip())
        inputs.append(args.stop_words)
    corpus = build_corpus(documents, stop_words=stop_words,
                          min_doc_fraction=args.min_doc_fraction)
    write_corpus(corpus, os.path.join(out_dir, "doc_term.csv"),
                 os.path.join(out_dir, "vocab.txt"))
    return inputs


def _cmd_topics_fit(args, out_dir: str):
    corpus = read_corpus(args.doc_term, args.vocab)
    config = _solver_config(args)
    model = fit_topics(corpus, config, threads=args.threads)
    _write_matrix(model.factors.w, out_dir, "W", args.binary)
    _write_matrix(model.factors.h, out_dir, "H", args.binary)
    _dump_json(_result_payload(model.solve_result),
               os.path.join(out_dir, "result.json"))
    return [args.doc_term, args.vocab]


def _read_vocab(path: str) -> tuple:
    with open(path, encoding="utf-8") as fh:
        return tuple(line.strip() for line in fh if line.strip())


def _load_topic_model(args) -> TopicModel:
    from .solver import SolveResult

    factors = FactorPair(w=read_matrix(args.w), h=read_matrix(args.h),
                         orientation=Orientation.BOTH)
    dummy = SolveResult(factors=factors, objective=float("nan"),
                        objective_trace=[], iterations=0, converged=False,
                        best_restart=0)
    return TopicModel(factors=factors, vocabulary=_read_vocab(args.vocab),
                      solve_result=dummy)


def _cmd_topics_top_terms(args, out_dir: str):
    model = _load_topic_model(args)
    write_top_terms_csv(model, args.k, os.path.join(out_dir, "top_terms.csv"))
    return [args.w, args.h, args.vocab]


def _cmd_topics_histogram(args, out_dir: str):
    model = _load_topic_model(args)
    write_histogram_csv(model, os.path.join(out_dir, "histogram.csv"))
    return [args.w, args.h, args.vocab]


_HANDLERS = {
    "factorize": _cmd_factorize,
    "analyze": _cmd_analyze,
    "faces-ingest": _cmd_faces_ingest,
    "faces-reconstruct": _cmd_faces_reconstruct,
    "faces-retrieve": _cmd_faces_retrieve,
    "faces-error": _cmd_faces_error,
    "topics-build": _cmd_topics_build,
    "topics-fit": _cmd_topics_fit,
    "topics-top-terms": _cmd_topics_top_terms,
    "topics-histogram": _cmd_topics_histogram,
}


def _add_out_dir(parser) -> None:
    parser.add_argument("--out-dir", default="./smf-out",
                        help="output directory (default ./smf-out)")


def _add_solver_flags(parser) -> None:
    parser.add_argument("--rank", type=int, required=True,
                        help="number of factors R")
    parser.add_argument("--orientation", default="w-rows",
                        choices=[o.value for o in Orientation],
                        help="which factor rows sum to 1 (default w-rows)")
    parser.add_argument("--mode", default="penalty",
                        choices=[m.value for m in Mode],
                        help="constraint handling (default penalty)")
    parser.add_argument("--weights", nargs=2, type=float,
                        default=[100.0, 10.0], metavar=("SUM1", "NONNEG"),
                        help="penalty weights (default 100 10)")
    parser.add_argument("--restarts", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-iter", type=int, default=500)
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="relative objective convergence tolerance")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("SMF_THREADS", "1")),
                        help="restart parallelism (default $SMF_THREADS or 1)")
    parser.add_argument("--binary", action="store_true",
                        help="write matrices in the binary container")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smf",
        description="Row-stochastic matrix factorization toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", help="fit W,H to a data matrix")
    p.add_argument("input", help="data matrix (CSV or binary)")
    _add_solver_flags(p)
    _add_out_dir(p)

    p = sub.add_parser("analyze", help="uniqueness and bounds report")
    p.add_argument("w", help="W matrix path")
    p.add_argument("h", help="H matrix path")
    p.add_argument("--orientation", default="w-rows",
                   choices=[o.value for o in Orientation])
    p.add_argument("--zero-tol", type=float, default=1e-6,
                   help="threshold below which entries count as zero "
                        "(default 1e-6; use 0 for exact factors)")
    p.add_argument("--samples", type=int, default=1000,
                   help="feasible-A oracle samples (0 disables)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=0.05,
                   help="sampler proposal scale")
    _add_out_dir(p)

    faces = sub.add_parser("faces", help="gray-scale image pipeline")
    fsub = faces.add_subparsers(dest="faces_command", required=True)

    p = fsub.add_parser("ingest", help="directory of PGMs to a data matrix")
    p.add_argument("directory")
    p.add_argument("--binary", action="store_true")
    _add_out_dir(p)

    p = fsub.add_parser("reconstruct", help="rebuild one image from factors")
    p.add_argument("w")
    p.add_argument("h")
    p.add_argument("--row", type=int, required=True,
                   help="0-based image index")
    p.add_argument("--binary", action="store_true",
                   help="write binary (P5) instead of ASCII (P2)")
    _add_out_dir(p)

    p = fsub.add_parser("retrieve", help="nearest stored image for a query")
    p.add_argument("query", help="query image (PGM)")
    p.add_argument("w")
    p.add_argument("h")
    _add_out_dir(p)

    p = fsub.add_parser("error", help="mean squared reconstruction error")
    p.add_argument("input", help="data matrix the factors were fit to")
    p.add_argument("w")
    p.add_argument("h")
    _add_out_dir(p)

    topics = sub.add_parser("topics", help="bag-of-words topic pipeline")
    tsub = topics.add_subparsers(dest="topics_command", required=True)

    p = tsub.add_parser("build", help="corpus text to doc-term matrix")
    p.add_argument("corpus", help="one document per line, UTF-8")
    p.add_argument("--stop-words", default=None,
                   help="file with one stop word per line")
    p.add_argument("--min-doc-fraction", type=float, default=0.005,
                   help="minimum document frequency for a term (default 0.005)")
    _add_out_dir(p)

    p = tsub.add_parser("fit", help="fit topics to a doc-term matrix")
    p.add_argument("doc_term", help="doc-term count matrix (CSV or binary)")
    p.add_argument("vocab", help="vocabulary sidecar, one term per line")
    _add_solver_flags(p)
    p.set_defaults(orientation="both")
    _add_out_dir(p)

    p = tsub.add_parser("top-terms", help="most probable terms per topic")
    p.add_argument("w")
    p.add_argument("h")
    p.add_argument("vocab")
    p.add_argument("--k", type=int, default=5)
    _add_out_dir(p)

    p = tsub.add_parser("histogram", help="documents per most-probable topic")
    p.add_argument("w")
    p.add_argument("h")
    p.add_argument("vocab")
    _add_out_dir(p)

    p = sub.add_parser("rerun", help="re-execute a recorded run")
    p.add_argument("manifest", help="manifest.json from a previous run")
    p.add_argument("--out-dir", default=None,
                   help="override the recorded output directory")

    return parser


def _command_key(args) -> str:
    if args.command == "faces":
        return f"faces-{args.faces_command}"
    if args.command == "topics":
        return f"topics-{args.topics_command}"
    return args.command


_NON_OPTION_KEYS = {"command", "faces_command", "topics_command"}


def _options_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _NON_OPTION_KEYS}


def _execute(command: str, options: dict) -> None:
    handler = _HANDLERS[command]
    args = argparse.Namespace(**options)
    out_dir = _prepare_out_dir(args.out_dir)
    start = time.monotonic()
    inputs = handler(args, out_dir)
    duration = time.monotonic() - start
    _write_manifest(command, options, inputs, out_dir, duration)


def _rerun(args) -> None:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    if command not in _HANDLERS:
        raise InvalidInputError(f"manifest names unknown command {command!r}")
    options = dict(manifest["options"])
    for entry in manifest["inputs"]:
        digest = _sha256(entry["path"])
        if digest != entry["sha256"]:
            raise InvalidInputError(
                f"input {entry['path']} changed since the recorded run "
                f"(sha256 {digest} != {entry['sha256']})"
            )
    if args.out_dir is not None:
        options["out_dir"] = args.out_dir
    _execute(command, options)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            _rerun(args)
        else:
            _execute(_command_key(args), _options_dict(args))
    except (RankDeficientError, DegenerateFactorError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
