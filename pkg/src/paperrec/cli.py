"""Command-line client: one subcommand per pipeline stage.

Each stage reads its input files, posts one request to the service
(in-process unless --server points at a running instance), writes the
returned artifacts, and drops a run manifest next to the primary output.
Artifacts are written with a canonical JSON encoder so a rerun with the
same seed is byte-identical; manifests carry timings and are the only
rerun-variable files.

Exit codes: 0 ok, 1 unexpected error, 2 missing input, 3 schema mismatch
or invalid input, 4 diverged training, 5 output exists (use --force).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

import click

from .client import ServiceClient, ServiceError

EXIT_UNEXPECTED = 1
EXIT_MISSING_INPUT = 2
EXIT_SCHEMA = 3
EXIT_DIVERGED = 4
EXIT_OUTPUT_EXISTS = 5

DATA_ROOT_ENV = "PAPERREC_DATA_ROOT"


class StageError(RuntimeError):
    def __init__(self, exit_code: int, code: str, message: str):
        self.exit_code = exit_code
        self.code = code
        super().__init__(message)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


class Context:
    def __init__(self, config_path: str | None, server: str | None):
        self.server = server
        self.config: dict = {}
        if config_path:
            self.config = json.loads(Path(config_path).read_text(encoding="utf-8"))
        self.data_root = os.environ.get(DATA_ROOT_ENV)
        self.client = ServiceClient(server=server)

    def path(self, value: str) -> Path:
        p = Path(value)
        if not p.is_absolute() and self.data_root:
            return Path(self.data_root) / p
        return p

    def opt(self, stage: str, key: str, flag_value, default):
        """Precedence: explicit flag, then stage config, then default."""
        if flag_value is not None:
            return flag_value
        stage_cfg = self.config.get(stage, {})
        if key in stage_cfg:
            return stage_cfg[key]
        return default

    def seed(self, stage: str, flag_value) -> int:
        if flag_value is not None:
            return flag_value
        stage_cfg = self.config.get(stage, {})
        if "seed" in stage_cfg:
            return int(stage_cfg["seed"])
        return int(self.config.get("seed", 0))


def _read_text(ctx: Context, value: str) -> str:
    path = ctx.path(value)
    if not path.exists():
        raise StageError(EXIT_MISSING_INPUT, "missing_input", f"input not found: {path}")
    return path.read_text(encoding="utf-8")


def _read_json(ctx: Context, value: str) -> dict:
    text = _read_text(ctx, value)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise StageError(EXIT_SCHEMA, "schema_mismatch", f"{value}: {exc}")


def _read_jsonl(ctx: Context, value: str) -> list:
    text = _read_text(ctx, value)
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise StageError(EXIT_SCHEMA, "schema_mismatch", f"{value}:{lineno}: {exc}")
    return out


def _write_text(ctx: Context, value: str, text: str, force: bool) -> Path:
    path = ctx.path(value)
    if path.exists() and not force:
        raise StageError(EXIT_OUTPUT_EXISTS, "output_exists",
                         f"refusing to overwrite {path} (pass --force)")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(ctx: Context, stage: str, inputs: list[str], config: dict,
                    seed: int | None, outputs: list[Path], started: float,
                    force: bool) -> None:
    manifest = {
        "stage": stage,
        "inputs": {str(ctx.path(p)): _sha256(ctx.path(p)) for p in inputs},
        "config": config,
        "config_hash": hashlib.sha256(
            canonical_json(config).encode("utf-8")).hexdigest(),
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "duration_s": time.monotonic() - started,
    }
    target = Path(str(outputs[0]) + ".manifest.json")
    if target.exists() and not force:
        raise StageError(EXIT_OUTPUT_EXISTS, "output_exists",
                         f"refusing to overwrite {target} (pass --force)")
    target.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                      encoding="utf-8")


def _fail(stage: str, code: str, message: str, exit_code: int) -> None:
    sys.stderr.write(canonical_json(
        {"error": {"stage": stage, "code": code, "message": message}}))
    sys.exit(exit_code)


def _run(stage: str, ctx: Context, body) -> None:
    started = time.monotonic()
    try:
        body(started)
    except StageError as exc:
        _fail(stage, exc.code, str(exc), exc.exit_code)
    except ServiceError as exc:
        if exc.code == "diverged_training":
            _fail(stage, exc.code, str(exc.detail), EXIT_DIVERGED)
        elif exc.status_code == 422:
            _fail(stage, exc.code, str(exc.detail), EXIT_SCHEMA)
        else:
            _fail(stage, exc.code, str(exc.detail), EXIT_UNEXPECTED)
    except OSError as exc:
        _fail(stage, "io_error", str(exc), EXIT_UNEXPECTED)


def _csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; flags override its values.")
@click.option("--server", default=None,
              help="Base URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, server: str | None) -> None:
    """Topic-model and next-topic-prediction pipeline."""
    ctx.obj = Context(config_path, server)


@main.command()
@click.option("--corpus", "corpus_path", required=True, help="CSV with header doc_id,title.")
@click.option("--min-count", type=int, default=None)
@click.option("--out-tokens", required=True)
@click.option("--out-dictionary", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def preprocess(ctx: Context, corpus_path: str, min_count: int | None,
               out_tokens: str, out_dictionary: str, force: bool) -> None:
    """Tokenize raw titles and build the dictionary."""
    def body(started: float) -> None:
        from .corpus import CorpusFormatError, read_corpus_csv
        try:
            docs = read_corpus_csv(ctx.path(corpus_path))
        except FileNotFoundError:
            raise StageError(EXIT_MISSING_INPUT, "missing_input",
                             f"input not found: {ctx.path(corpus_path)}")
        except CorpusFormatError as exc:
            raise StageError(EXIT_SCHEMA, "schema_mismatch", str(exc))
        mc = ctx.opt("preprocess", "min_count", min_count, 1)
        resp = ctx.client.post("/preprocess", {
            "documents": [{"doc_id": d.doc_id, "title": d.title} for d in docs],
            "min_count": mc,
        })
        lines = "".join(canonical_json(d) for d in resp["documents"])
        out1 = _write_text(ctx, out_tokens, lines, force)
        out2 = _write_text(ctx, out_dictionary, canonical_json(resp["dictionary"]), force)
        if resp["empty_doc_ids"]:
            click.echo(f"flagged {len(resp['empty_doc_ids'])} empty documents", err=True)
        _write_manifest(ctx, "preprocess", [corpus_path], {"min_count": mc},
                        None, [out1, out2], started, force)
    _run("preprocess", ctx, body)


def _lda_request(ctx: Context, stage: str, tokens: str, dictionary: str,
                 k: int, alpha: float | None, beta: float | None,
                 iterations: int | None, burn_in: int | None, seed: int | None):
    docs = _read_jsonl(ctx, tokens)
    dict_payload = _read_json(ctx, dictionary)
    config = {
        "k": k,
        "alpha": ctx.opt(stage, "alpha", alpha, None),
        "beta": ctx.opt(stage, "beta", beta, 0.01),
        "iterations": ctx.opt(stage, "iterations", iterations, 200),
        "burn_in": ctx.opt(stage, "burn_in", burn_in, 50),
        "seed": ctx.seed(stage, seed),
    }
    return docs, dict_payload, config


@main.command("lda-train")
@click.option("--tokens", required=True, help="Tokenized JSONL from preprocess.")
@click.option("--dictionary", required=True)
@click.option("--k", type=int, required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-model", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def lda_train(ctx: Context, tokens: str, dictionary: str, k: int,
              alpha: float | None, beta: float | None, iterations: int | None,
              burn_in: int | None, seed: int | None, out_model: str,
              force: bool) -> None:
    """Train the topic model with collapsed Gibbs sampling."""
    def body(started: float) -> None:
        docs, dict_payload, config = _lda_request(
            ctx, "lda-train", tokens, dictionary, k, alpha, beta, iterations,
            burn_in, seed)
        resp = ctx.client.post("/lda/train", {
            "documents": docs, "dictionary": dict_payload, "config": config})
        out = _write_text(ctx, out_model, canonical_json(resp["model"]), force)
        _write_manifest(ctx, "lda-train", [tokens, dictionary], config,
                        config["seed"], [out], started, force)
    _run("lda-train", ctx, body)


@main.command("coherence-sweep")
@click.option("--tokens", required=True)
@click.option("--dictionary", required=True)
@click.option("--k", "k_list", required=True,
              help="Comma-separated candidate topic counts, e.g. 2,4,8.")
@click.option("--top-n", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-csv", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def coherence_sweep(ctx: Context, tokens: str, dictionary: str, k_list: str,
                    top_n: int | None, alpha: float | None, beta: float | None,
                    iterations: int | None, burn_in: int | None,
                    seed: int | None, out_csv: str, force: bool) -> None:
    """Train per candidate k and report mean topic coherence."""
    def body(started: float) -> None:
        try:
            candidates = [int(x) for x in k_list.split(",") if x.strip()]
        except ValueError:
            raise StageError(EXIT_SCHEMA, "schema_mismatch",
                             f"--k must be comma-separated integers, got {k_list!r}")
        if not candidates:
            raise StageError(EXIT_SCHEMA, "schema_mismatch", "--k list is empty")
        docs, dict_payload, config = _lda_request(
            ctx, "coherence-sweep", tokens, dictionary, candidates[0], alpha,
            beta, iterations, burn_in, seed)
        resp = ctx.client.post("/lda/coherence", {
            "documents": docs, "dictionary": dict_payload,
            "k_candidates": candidates, "config": config,
            "top_n": ctx.opt("coherence-sweep", "top_n", top_n, 10),
        })
        rows = [["k", "mean_coherence"]]
        for item in resp["scores"]:
            value = item["mean_coherence"]
            rows.append([item["k"], "-inf" if value is None else repr(value)])
        out = _write_text(ctx, out_csv, _csv_text(rows), force)
        click.echo(f"best k: {resp['best_k']}")
        _write_manifest(ctx, "coherence-sweep", [tokens, dictionary],
                        {**config, "k_candidates": candidates},
                        config["seed"], [out], started, force)
    _run("coherence-sweep", ctx, body)


@main.command("embed-train")
@click.option("--tokens", required=True)
@click.option("--dictionary", required=True)
@click.option("--dim", type=int, default=None)
@click.option("--window", type=int, default=None)
@click.option("--min-count", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-model", required=True)
@click.option("--out-csv", default=None, help="Optional word,v1..vN export.")
@click.option("--force", is_flag=True)
@click.pass_obj
def embed_train(ctx: Context, tokens: str, dictionary: str, dim: int | None,
                window: int | None, min_count: int | None, epochs: int | None,
                learning_rate: float | None, seed: int | None, out_model: str,
                out_csv: str | None, force: bool) -> None:
    """Train skip-gram word embeddings over the tokenized corpus."""
    def body(started: float) -> None:
        docs = _read_jsonl(ctx, tokens)
        dict_payload = _read_json(ctx, dictionary)
        config = {
            "dim": ctx.opt("embed-train", "dim", dim, 200),
            "window": ctx.opt("embed-train", "window", window, 6),
            "min_count": ctx.opt("embed-train", "min_count", min_count, 1),
            "epochs": ctx.opt("embed-train", "epochs", epochs, 5),
            "learning_rate": ctx.opt("embed-train", "learning_rate", learning_rate, 0.05),
            "seed": ctx.seed("embed-train", seed),
        }
        resp = ctx.client.post("/embed/train", {
            "documents": docs, "dictionary": dict_payload, "config": config})
        outputs = [_write_text(ctx, out_model, canonical_json(resp["model"]), force)]
        if out_csv:
            model = resp["model"]
            header = ["word"] + [f"v{i + 1}" for i in range(model["dim"])]
            rows = [header] + [[word] + [repr(float(x)) for x in vec]
                               for word, vec in sorted(model["vectors"].items())]
            outputs.append(_write_text(ctx, out_csv, _csv_text(rows), force))
        _write_manifest(ctx, "embed-train", [tokens, dictionary], config,
                        config["seed"], outputs, started, force)
    _run("embed-train", ctx, body)


@main.command()
@click.option("--lda-model", required=True)
@click.option("--embedding", required=True)
@click.option("--seeds-per-topic", type=int, default=None)
@click.option("--neighbors-per-seed", type=int, default=None)
@click.option("--similarity-threshold", type=float, default=None)
@click.option("--out-m2", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def fuse(ctx: Context, lda_model: str, embedding: str,
         seeds_per_topic: int | None, neighbors_per_seed: int | None,
         similarity_threshold: float | None, out_m2: str, force: bool) -> None:
    """Expand topic seed words through the embedding into the fused map."""
    def body(started: float) -> None:
        config = {
            "seeds_per_topic": ctx.opt("fuse", "seeds_per_topic", seeds_per_topic, 2),
            "neighbors_per_seed": ctx.opt("fuse", "neighbors_per_seed", neighbors_per_seed, 6),
            "similarity_threshold": ctx.opt("fuse", "similarity_threshold",
                                            similarity_threshold, 0.4),
        }
        resp = ctx.client.post("/fusion/build", {
            "lda_model": _read_json(ctx, lda_model),
            "embedding": _read_json(ctx, embedding),
            "config": config,
        })
        out = _write_text(ctx, out_m2, canonical_json(resp["m2"]), force)
        _write_manifest(ctx, "fuse", [lda_model, embedding], config, None,
                        [out], started, force)
    _run("fuse", ctx, body)


@main.command("assign-topics")
@click.option("--tokens", required=True)
@click.option("--m2", "m2_path", required=True)
@click.option("--out-csv", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def assign_topics(ctx: Context, tokens: str, m2_path: str, out_csv: str,
                  force: bool) -> None:
    """Label every document with its dominant topic (-1 when unassignable)."""
    def body(started: float) -> None:
        resp = ctx.client.post("/fusion/assign", {
            "documents": _read_jsonl(ctx, tokens),
            "m2": _read_json(ctx, m2_path),
        })
        rows = [["doc_id", "topic"]]
        for item in resp["assignments"]:
            topic = item["topic"]
            rows.append([item["doc_id"], -1 if topic is None else topic])
        out = _write_text(ctx, out_csv, _csv_text(rows), force)
        _write_manifest(ctx, "assign-topics", [tokens, m2_path], {}, None,
                        [out], started, force)
    _run("assign-topics", ctx, body)


@main.command()
@click.option("--num-users", type=int, default=None)
@click.option("--num-items", type=int, default=None)
@click.option("--num-topics", type=int, default=None)
@click.option("--events-per-user", type=int, default=None)
@click.option("--regime", type=click.Choice(["markov", "second_order"]), default=None)
@click.option("--dwell-mean", type=float, default=None)
@click.option("--session-gap-s", type=float, default=None)
@click.option("--liked-prob", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-log", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def simulate(ctx: Context, num_users: int | None, num_items: int | None,
             num_topics: int | None, events_per_user: int | None,
             regime: str | None, dwell_mean: float | None,
             session_gap_s: float | None, liked_prob: float | None,
             seed: int | None, out_log: str, force: bool) -> None:
    """Generate a synthetic interaction log."""
    def body(started: float) -> None:
        config = {
            "num_users": ctx.opt("simulate", "num_users", num_users, 50),
            "num_items": ctx.opt("simulate", "num_items", num_items, 5213),
            "num_topics": ctx.opt("simulate", "num_topics", num_topics, 8),
            "events_per_user": ctx.opt("simulate", "events_per_user", events_per_user, 200),
            "regime": {
                "kind": ctx.opt("simulate", "regime", regime, "markov"),
                "dwell_mean": ctx.opt("simulate", "dwell_mean", dwell_mean, 5.0),
                "transition_concentration": ctx.opt(
                    "simulate", "transition_concentration", None, 0.5),
            },
            "inter_click_median_s": ctx.opt("simulate", "inter_click_median_s", None, 60.0),
            "inter_click_sigma": ctx.opt("simulate", "inter_click_sigma", None, 1.0),
            "session_break_prob": ctx.opt("simulate", "session_break_prob", None, 0.05),
            "session_break_median_s": ctx.opt("simulate", "session_break_median_s", None, 7200.0),
            "session_gap_s": ctx.opt("simulate", "session_gap_s", session_gap_s, 1800.0),
            "liked_prob": ctx.opt("simulate", "liked_prob", liked_prob, 0.3),
            "seed": ctx.seed("simulate", seed),
        }
        resp = ctx.client.post("/sessions/simulate", {"config": config})
        lines = "".join(canonical_json(ev) for ev in resp["events"])
        out = _write_text(ctx, out_log, lines, force)
        _write_manifest(ctx, "simulate", [], config, config["seed"], [out],
                        started, force)
    _run("simulate", ctx, body)


@main.command("intent-train")
@click.option("--log", "log_path", required=True, help="JSONL event log.")
@click.option("--num-topics", type=int, required=True)
@click.option("--hidden", type=int, default=None)
@click.option("--lookback", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--batch", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--beta1", type=float, default=None)
@click.option("--beta2", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--train-fraction", type=float, default=None)
@click.option("--use-liked/--no-use-liked", default=None)
@click.option("--out-model", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def intent_train(ctx: Context, log_path: str, num_topics: int,
                 hidden: int | None, lookback: int | None, epochs: int | None,
                 batch: int | None, learning_rate: float | None,
                 beta1: float | None, beta2: float | None, eps: float | None,
                 seed: int | None, train_fraction: float | None,
                 use_liked: bool | None, out_model: str, force: bool) -> None:
    """Train the sequential next-topic predictor."""
    def body(started: float) -> None:
        events = _read_jsonl(ctx, log_path)
        config = {
            "num_topics": num_topics,
            "hidden": ctx.opt("intent-train", "hidden", hidden, 32),
            "lookback": ctx.opt("intent-train", "lookback", lookback, 5),
            "epochs": ctx.opt("intent-train", "epochs", epochs, 100),
            "batch": ctx.opt("intent-train", "batch", batch, 16),
            "learning_rate": ctx.opt("intent-train", "learning_rate", learning_rate, 1e-3),
            "beta1": ctx.opt("intent-train", "beta1", beta1, 0.9),
            "beta2": ctx.opt("intent-train", "beta2", beta2, 0.999),
            "eps": ctx.opt("intent-train", "eps", eps, 1e-8),
            "seed": ctx.seed("intent-train", seed),
            "use_liked": ctx.opt("intent-train", "use_liked", use_liked, False),
        }
        fraction = ctx.opt("intent-train", "train_fraction", train_fraction, 0.75)
        resp = ctx.client.post("/intent/train", {
            "events": events, "config": config, "train_fraction": fraction})
        out = _write_text(ctx, out_model, canonical_json(resp["model"]), force)
        click.echo(f"trained on {resp['train_windows']} windows "
                   f"({resp['test_windows']} held out)")
        _write_manifest(ctx, "intent-train", [log_path],
                        {**config, "train_fraction": fraction},
                        config["seed"], [out], started, force)
    _run("intent-train", ctx, body)


@main.command("intent-eval")
@click.option("--log", "log_path", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--train-fraction", type=float, default=None)
@click.option("--out-report", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def intent_eval(ctx: Context, log_path: str, model_path: str,
                train_fraction: float | None, out_report: str, force: bool) -> None:
    """Accuracy and RMSE of the trained predictor on both splits."""
    def body(started: float) -> None:
        fraction = ctx.opt("intent-eval", "train_fraction", train_fraction, 0.75)
        resp = ctx.client.post("/intent/evaluate", {
            "events": _read_jsonl(ctx, log_path),
            "model": _read_json(ctx, model_path),
            "train_fraction": fraction,
        })
        out = _write_text(ctx, out_report, canonical_json(resp["report"]), force)
        _write_manifest(ctx, "intent-eval", [log_path, model_path],
                        {"train_fraction": fraction}, None, [out], started, force)
    _run("intent-eval", ctx, body)


@main.command("baseline-eval")
@click.option("--log", "log_path", required=True)
@click.option("--num-topics", type=int, required=True)
@click.option("--train-fraction", type=float, default=None)
@click.option("--fpm-max-len", type=int, default=None)
@click.option("--out-report", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def baseline_eval(ctx: Context, log_path: str, num_topics: int,
                  train_fraction: float | None, fpm_max_len: int | None,
                  out_report: str, force: bool) -> None:
    """Evaluate the transition-matrix and frequent-pattern baselines."""
    def body(started: float) -> None:
        fraction = ctx.opt("baseline-eval", "train_fraction", train_fraction, 0.75)
        max_len = ctx.opt("baseline-eval", "fpm_max_len", fpm_max_len, 5)
        resp = ctx.client.post("/baselines/evaluate", {
            "events": _read_jsonl(ctx, log_path),
            "num_topics": num_topics,
            "train_fraction": fraction,
            "fpm_max_len": max_len,
        })
        out = _write_text(ctx, out_report,
                          canonical_json({"reports": resp["reports"]}), force)
        _write_manifest(ctx, "baseline-eval", [log_path],
                        {"num_topics": num_topics, "train_fraction": fraction,
                         "fpm_max_len": max_len},
                        None, [out], started, force)
    _run("baseline-eval", ctx, body)


@main.command("probe-eval")
@click.option("--tokens", required=True)
@click.option("--dictionary", required=True)
@click.option("--assignments", required=True, help="doc_id,topic CSV.")
@click.option("--pipeline-name", required=True,
              help="Label for the report rows, e.g. lda or hybrid.")
@click.option("--folds", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-report", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def probe_eval(ctx: Context, tokens: str, dictionary: str, assignments: str,
               pipeline_name: str, folds: int | None, seed: int | None,
               out_report: str, force: bool) -> None:
    """Cross-validated classification probe over a topic labelling."""
    def body(started: float) -> None:
        text = _read_text(ctx, assignments)
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != ["doc_id", "topic"]:
            raise StageError(EXIT_SCHEMA, "schema_mismatch",
                             f"{assignments}: expected header doc_id,topic")
        labels = []
        for row in reader:
            if len(row) != 2:
                raise StageError(EXIT_SCHEMA, "schema_mismatch",
                                 f"{assignments}: malformed row {row!r}")
            topic = int(row[1])
            labels.append({"doc_id": row[0], "topic": None if topic < 0 else topic})
        n_folds = ctx.opt("probe-eval", "folds", folds, 5)
        the_seed = ctx.seed("probe-eval", seed)
        resp = ctx.client.post("/eval/probe", {
            "documents": _read_jsonl(ctx, tokens),
            "dictionary": _read_json(ctx, dictionary),
            "assignments": labels,
            "pipeline": pipeline_name,
            "folds": n_folds,
            "seed": the_seed,
        })
        out = _write_text(ctx, out_report, canonical_json(resp["report"]), force)
        _write_manifest(ctx, "probe-eval", [tokens, dictionary, assignments],
                        {"folds": n_folds, "pipeline": pipeline_name},
                        the_seed, [out], started, force)
    _run("probe-eval", ctx, body)


@main.command("rank-eval")
@click.option("--queries", required=True,
              help="JSONL; each line has recommended, relevant, clicked lists.")
@click.option("--k", type=int, default=None)
@click.option("--out-report", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def rank_eval(ctx: Context, queries: str, k: int | None, out_report: str,
              force: bool) -> None:
    """Ranking metrics over recommendation queries."""
    def body(started: float) -> None:
        at_k = ctx.opt("rank-eval", "k", k, 10)
        resp = ctx.client.post("/ranking/evaluate", {
            "queries": _read_jsonl(ctx, queries), "k": at_k})
        out = _write_text(ctx, out_report, canonical_json(resp["report"]), force)
        _write_manifest(ctx, "rank-eval", [queries], {"k": at_k}, None, [out],
                        started, force)
    _run("rank-eval", ctx, body)


@main.command()
@click.argument("inputs", nargs=-1, required=True)
@click.option("--out-csv", required=True)
@click.option("--out-json", default=None)
@click.option("--force", is_flag=True)
@click.pass_obj
def report(ctx: Context, inputs: tuple[str, ...], out_csv: str,
           out_json: str | None, force: bool) -> None:
    """Merge stage reports into one comparison table."""
    def body(started: float) -> None:
        stage_reports = []
        for path in inputs:
            obj = _read_json(ctx, path)
            if "reports" in obj:
                stage_reports.extend(obj["reports"])
            elif "pipeline" in obj and "metrics" in obj:
                stage_reports.append(obj)
            else:
                raise StageError(EXIT_SCHEMA, "schema_mismatch",
                                 f"{path}: not a stage report")
        resp = ctx.client.post("/report/merge", {"reports": stage_reports})
        rows = [["metric", "value", "split", "pipeline"]]
        for row in resp["rows"]:
            rows.append([row["metric"], repr(row["value"]), row["split"], row["pipeline"]])
        outputs = [_write_text(ctx, out_csv, _csv_text(rows), force)]
        if out_json:
            outputs.append(_write_text(ctx, out_json,
                                       canonical_json({"rows": resp["rows"]}), force))
        _write_manifest(ctx, "report", list(inputs), {}, None, outputs,
                        started, force)
    _run("report", ctx, body)


if __name__ == "__main__":
    main()
