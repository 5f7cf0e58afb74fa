#!/usr/bin/env python3
r"""
bpAssist CLI – command reference
================================

A front‑end over the **bpAssist** pipeline stages (`bpAssist.steps`).
Four entry points are exposed:

* **advise** – breakpoint plan for a failing student program
* **repair** – obtain a fixed program (store lookup → generation) and optionally validate/upload it
* **eval**   – breakpoint or classifier evaluation
* **store**  – manage the solution store (`init`, `add`, `query`, `stats`)

-------------------------------------------------------------------------------
ADVISE
-------------------------------------------------------------------------------

```
bpAssist advise STUDENT --tests <json> --failed <test-id> [OPTIONS]
```

| Option | Purpose |
|--------|---------|
| `--fixed`               | Known fixed program; without it the repair step runs first |
| `--format`              | `json` (default) \| `pretty` \| `annotated-source` |
| `--store`               | Store file used when no `--fixed` is given |
| `--mock`                | Scripted provider fixture instead of `BPA_PROVIDER_URL` |
| `--max-breakpoints`     | Plan size cap (default **10**) |
| `--h1-include-exit / --no-h1-include-exit` | First line after a changed construct |
| `--emit-graph`          | Write the student dependence graph as DOT |

Exit codes: `0` plan printed, `2` student and fixed program do not differ,
`1` any error (one `E-…` line on stderr).

-------------------------------------------------------------------------------
REPAIR
-------------------------------------------------------------------------------

```
bpAssist repair STUDENT --tests <json> --failed <test-id> --store <jsonl> [--mock <json>] [--validate]
```

`--validate` executes every generated candidate against the whole suite and
stores the passing ones; `--verdicts-out` appends (predicted, actual) rows for
`eval classifier`.

-------------------------------------------------------------------------------
EVAL
-------------------------------------------------------------------------------

```
bpAssist eval breakpoints [--corpus <dir>] [--out <json>] [--output-dir <dir>] [--assert-min-f1 X]
bpAssist eval classifier --verdicts <jsonl> [--out <json>]
```

Exit codes: `0` evaluation completed, `1` corpus error, `3` micro F1 below
`--assert-min-f1`.

### Outputs (`--output-dir`)
```
<output>/
├── 01_plans/     <pair>.json
├── 02_metrics/   per_pair.tsv
└── report.json
```

-------------------------------------------------------------------------------
STORE
-------------------------------------------------------------------------------

```
bpAssist store init  --store s.jsonl
bpAssist store add   SOLUTION --tests <json> --store s.jsonl
bpAssist store query SOURCE --task-id sum --failed sum_3 --store s.jsonl
bpAssist store stats --store s.jsonl
```

-------------------------------------------------------------------------------
CONFIGURATION
-------------------------------------------------------------------------------
`--config <json>` mirrors `bpAssist.config.CliConfig`; flags override the
file.  `BPA_PROVIDER_URL`, `BPA_PROVIDER_TOKEN` and `BPA_EMBEDDER_URL` feed
the matching flags.
"""
from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NoReturn, Optional

import click

from .config import OUTPUT_FORMATS, CliConfig, load_config
from .errors import BpAssistError, ConfigError, EmptyDiff, StoreError
from .minilang import Program, Suite, TestCase, load_suite, parse, pretty_print, run_suite, run_test
from .steps.evaluation import (
    classifier_report, eval_breakpoints, load_verdict_rows, write_artifacts,
)
from .steps.explain import build_contexts, explain_plan
from .steps.providers import ExecutionClassifier, HttpEmbedder, HttpProvider, ScriptedProvider
from .steps.recommender import BreakpointKind, BreakpointPlan, analyze
from .steps.repair import Providers, repair, validate_and_upload, entry_id_for
from .steps.store import HashingEmbedder, RetrievalStore, StoreEntry

log = logging.getLogger("bpAssist")

# ---------------------------------------------------------------------------
# Locate the bundled corpus
# ---------------------------------------------------------------------------
try:
    CORPUS_DIR: Path = Path(resources.files("bpAssist") / "corpus")  # type: ignore[arg-type]
except (AttributeError, ModuleNotFoundError):
    CORPUS_DIR = Path(__file__).resolve().parent / "corpus"

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


# ---------------------------------------------------------------------------
# Context dataclass shared across commands
# ---------------------------------------------------------------------------
@dataclass
class Context:
    config: CliConfig
    base_dir: Optional[Path] = None

    # cache of numbered sub‑directories
    _step_dirs: dict[int, Path] = field(default_factory=dict, init=False, repr=False)

    def step_dir(self, idx: int, label: str) -> Path:
        if self.base_dir is None:
            raise ConfigError("no output directory given")
        if idx not in self._step_dirs:
            p = (self.base_dir / f"{idx:02d}_{label}").resolve()
            p.mkdir(parents=True, exist_ok=True)
            self._step_dirs[idx] = p
        return self._step_dirs[idx]


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def fail(exc: BpAssistError, code: int = 1) -> NoReturn:
    click.echo(f"{exc.prefix}: {exc}", err=True)
    sys.exit(code)


def read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        click.echo(f"E-FILE: {path}: {getattr(exc, 'strerror', None) or exc}", err=True)
        sys.exit(1)


def load_test(tests_file: Path, failed_test_id: str) -> tuple[Suite, TestCase]:
    read_text(tests_file)
    suite = load_suite(tests_file)
    return suite, suite.get(failed_test_id)


def open_store(cfg: CliConfig, create: bool = False) -> RetrievalStore:
    if cfg.store_path is None:
        raise ConfigError("this command needs a store; pass --store or set store_path in the config")
    return RetrievalStore.load(cfg.store_path, cfg.repair.retrieval.dimension, create=create)


def make_embedder(cfg: CliConfig):
    dim = cfg.repair.retrieval.dimension
    if cfg.embedder_url or cfg.repair.retrieval.embedder == "http":
        if not cfg.embedder_url:
            raise ConfigError("embedder 'http' needs BPA_EMBEDDER_URL or --embedder-url")
        return HttpEmbedder(cfg.embedder_url, cfg.provider_token, dim)
    return HashingEmbedder(dim)


def make_providers(cfg: CliConfig, mock: Optional[Path]) -> Providers:
    embedder = make_embedder(cfg)
    if mock is not None:
        scripted = ScriptedProvider.from_file(mock, ExecutionClassifier(cfg.step_limit))
        return Providers(embedder, scripted, scripted)
    if cfg.provider_url:
        http = HttpProvider(cfg.provider_url, cfg.provider_token)
        return Providers(embedder, http, http)
    return Providers(embedder)


def render_pretty(plan: BreakpointPlan) -> str:
    out = [f"task {plan.task_id or '-'} / failed test {plan.failed_test_id}"]
    if not plan.breakpoints:
        out.append("  (no breakpoints)")
    for bp in plan.breakpoints:
        mark = "●" if bp.kind is BreakpointKind.BUG_SITE else "○"
        out.append(f"  {mark} line {bp.line:<4} {bp.kind.value:<9} {', '.join(bp.provenance)}")
        if bp.explanation:
            out.append(f"      {bp.explanation}")
    return "\n".join(out) + "\n"


def render_annotated(source: str, plan: BreakpointPlan) -> str:
    by_line = {bp.line: bp for bp in plan.breakpoints}
    out = []
    for n, text in enumerate(source.splitlines(), start=1):
        bp = by_line.get(n)
        mark = " " if bp is None else ("●" if bp.kind is BreakpointKind.BUG_SITE else "○")
        out.append(f"{mark} {n:>3} | {text}".rstrip())
        if bp is not None and bp.explanation:
            indent = text[: len(text) - len(text.lstrip())]
            out.append(f"  {'':>3} | {indent}// {bp.explanation}")
    return "\n".join(out) + "\n"


def emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        click.echo(f"written ➜ {out}", err=True)


provider_options = [
    click.option("--provider-url", envvar="BPA_PROVIDER_URL", default=None, help="HTTP generator/classifier endpoint"),
    click.option("--provider-token", envvar="BPA_PROVIDER_TOKEN", default=None, help="Bearer token for the endpoints"),
    click.option("--embedder-url", envvar="BPA_EMBEDDER_URL", default=None, help="HTTP embedding endpoint"),
]


def with_provider_options(f):
    for opt in reversed(provider_options):
        f = opt(f)
    return f


# ---------------------------------------------------------------------------
# Click group
# ---------------------------------------------------------------------------
@click.group()
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="JSON configuration file")
@click.option("--log-level", type=click.Choice(LOG_LEVELS), default="WARNING", show_default=True)
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], log_level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, log_level),
        format="%(asctime)s | %(levelname)-8s | %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
        force=True,
    )
    try:
        ctx.obj = Context(load_config(config_path))
    except ConfigError as exc:
        fail(exc)


# ---------------------------------------------------------------------------
# advise
# ---------------------------------------------------------------------------
@cli.command()
@click.argument("student_file", type=click.Path(path_type=Path))
@click.option("--fixed", "fixed_file", type=click.Path(path_type=Path), default=None)
@click.option("--tests", "tests_file", type=click.Path(path_type=Path), required=True)
@click.option("--failed", "failed_test_id", required=True, help="id of the failing test")
@click.option("--task-id", default=None, help="defaults to the suite's task_id")
@click.option("--format", "output_format", type=click.Choice(OUTPUT_FORMATS), default=None)
@click.option("--store", "store_path", type=click.Path(path_type=Path), default=None)
@click.option("--mock", type=click.Path(path_type=Path), default=None)
@click.option("--max-breakpoints", type=click.IntRange(min=0), default=None)
@click.option("--h1-include-exit/--no-h1-include-exit", default=None)
@click.option("--emit-graph", type=click.Path(path_type=Path), default=None)
@with_provider_options
@click.pass_obj
def advise(obj: Context, student_file, fixed_file, tests_file, failed_test_id, task_id,
           output_format, store_path, mock, max_breakpoints, h1_include_exit, emit_graph,
           provider_url, provider_token, embedder_url):
    """Recommend explained breakpoints for a failing student program."""
    try:
        cfg = obj.config.override(
            store_path=store_path, output_format=output_format, max_breakpoints=max_breakpoints,
            h1_include_exit=h1_include_exit, provider_url=provider_url,
            provider_token=provider_token, embedder_url=embedder_url,
        )
        student_src = read_text(student_file)
        student = parse(student_src)
        suite, test = load_test(tests_file, failed_test_id)
        task = task_id or suite.task_id

        if fixed_file is not None:
            fixed = parse(read_text(fixed_file))
        else:
            store = open_store(cfg)
            outcome = repair(student_src, test, task, make_providers(cfg, mock), store, cfg.repair,
                             step_limit=cfg.step_limit)
            click.echo(f"fix obtained ({outcome.source.value}, {outcome.llm_calls} provider call(s))",
                       err=True)
            fixed = parse(outcome.fixed_source)

        rec = analyze(student, fixed, test, cfg.recommender, task, cfg.step_limit)
        if not rec.sites:
            fail(EmptyDiff(), code=2)
        if emit_graph is not None and rec.graph is not None:
            emit_graph.parent.mkdir(parents=True, exist_ok=True)
            emit_graph.write_text(rec.graph.to_dot(), encoding="utf-8")

        verdict = run_test(student, test, cfg.step_limit)
        text_provider = HttpProvider(cfg.provider_url, cfg.provider_token) if cfg.provider_url else None
        plan = explain_plan(rec.plan, build_contexts(rec.plan, student, test, verdict), text_provider)
    except BpAssistError as exc:
        fail(exc)

    if cfg.output_format == "pretty":
        click.echo(render_pretty(plan), nl=False)
    elif cfg.output_format == "annotated-source":
        click.echo(render_annotated(student_src, plan), nl=False)
    else:
        click.echo(plan.dumps(), nl=False)


# ---------------------------------------------------------------------------
# repair
# ---------------------------------------------------------------------------
@cli.command("repair")
@click.argument("student_file", type=click.Path(path_type=Path))
@click.option("--tests", "tests_file", type=click.Path(path_type=Path), required=True)
@click.option("--failed", "failed_test_id", required=True)
@click.option("--task-id", default=None)
@click.option("--store", "store_path", type=click.Path(path_type=Path), default=None)
@click.option("--mock", type=click.Path(path_type=Path), default=None)
@click.option("--reference", "reference_file", type=click.Path(path_type=Path), default=None,
              help="author's solution handed to the generator")
@click.option("--task-description", default="", help="task statement handed to the generator")
@click.option("--validate", is_flag=True, help="execute candidates and upload the passing ones")
@click.option("--verdicts-out", type=click.Path(path_type=Path), default=None,
              help="append (predicted, actual) rows as JSON lines")
@with_provider_options
@click.pass_obj
def repair_cmd(obj: Context, student_file, tests_file, failed_test_id, task_id, store_path, mock,
               reference_file, task_description, validate, verdicts_out,
               provider_url, provider_token, embedder_url):
    """Obtain a fixed program for the failing test."""
    try:
        cfg = obj.config.override(store_path=store_path, provider_url=provider_url,
                                  provider_token=provider_token, embedder_url=embedder_url)
        student_src = read_text(student_file)
        suite, test = load_test(tests_file, failed_test_id)
        task = task_id or suite.task_id
        reference = read_text(reference_file) if reference_file is not None else None
        store = open_store(cfg, create=True)
        providers = make_providers(cfg, mock)
        outcome = repair(student_src, test, task, providers, store, cfg.repair,
                         task_description=task_description, reference_source=reference,
                         step_limit=cfg.step_limit)
        doc = outcome.to_json()
        if validate:
            report = validate_and_upload(outcome, suite, store, task, providers.embedder, cfg.step_limit)
            doc["upload"] = report.to_json()
            if report.uploaded:
                store.save()
            if verdicts_out is not None:
                verdicts_out.parent.mkdir(parents=True, exist_ok=True)
                with verdicts_out.open("a", encoding="utf-8") as fh:
                    for row in report.rows:
                        fh.write(json.dumps(row.to_json()) + "\n")
    except BpAssistError as exc:
        fail(exc)
    click.echo(json.dumps(doc, indent=2, ensure_ascii=False))


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------
@cli.command("eval")
@click.argument("kind", type=click.Choice(["breakpoints", "classifier"]))
@click.option("--corpus", "corpus_path", type=click.Path(path_type=Path), default=None,
              help="corpus directory (default: bundled corpus)")
@click.option("--verdicts", "verdicts_path", type=click.Path(path_type=Path), default=None,
              help="JSON-lines verdict rows (classifier kind)")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="write the report here")
@click.option("--output-dir", type=click.Path(path_type=Path), default=None,
              help="also write plans and per-pair TSV under this directory")
@click.option("--assert-min-f1", type=click.FloatRange(0.0, 1.0), default=None)
@click.option("--max-breakpoints", type=click.IntRange(min=0), default=None)
@click.option("--h1-include-exit/--no-h1-include-exit", default=None)
@click.option("--n-jobs", type=int, default=1, show_default=True)
@click.pass_obj
def eval_cmd(obj: Context, kind, corpus_path, verdicts_path, out, output_dir, assert_min_f1,
             max_breakpoints, h1_include_exit, n_jobs):
    """Evaluate breakpoint plans or classifier predictions."""
    try:
        cfg = obj.config.override(corpus_path=corpus_path, max_breakpoints=max_breakpoints,
                                  h1_include_exit=h1_include_exit)
        if kind == "classifier":
            if verdicts_path is None:
                raise ConfigError("eval classifier needs --verdicts")
            doc = classifier_report(load_verdict_rows(verdicts_path))
            f1 = doc["f1"]
            text = json.dumps(doc, indent=2) + "\n"
        else:
            report = eval_breakpoints(cfg.corpus_path or CORPUS_DIR, cfg.recommender, n_jobs)
            if output_dir is not None:
                obj.base_dir = output_dir
                write_artifacts(report, obj.step_dir(1, "plans"), obj.step_dir(2, "metrics"),
                                output_dir / "report.json")
            f1 = report.micro.f1
            text = report.dumps()
    except BpAssistError as exc:
        fail(exc)

    emit(text, out)
    if assert_min_f1 is not None and f1 < assert_min_f1:
        click.echo(f"F1 {f1:.4f} is below the required {assert_min_f1:.4f}", err=True)
        sys.exit(3)


# ---------------------------------------------------------------------------
# store
# ---------------------------------------------------------------------------
@cli.group("store")
def store_grp():
    """Manage the solution store."""


store_option = click.option("--store", "store_path", type=click.Path(path_type=Path), default=None)


@store_grp.command("init")
@store_option
@click.option("--force", is_flag=True, help="overwrite an existing store")
@click.pass_obj
def store_init(obj: Context, store_path, force):
    """Create an empty store file."""
    try:
        cfg = obj.config.override(store_path=store_path)
        if cfg.store_path is None:
            raise ConfigError("pass --store or set store_path in the config")
        if cfg.store_path.exists() and not force:
            raise StoreError(f"{cfg.store_path} already exists (use --force to overwrite)")
        RetrievalStore(cfg.repair.retrieval.dimension, cfg.store_path).save()
    except BpAssistError as exc:
        fail(exc)
    click.echo(f"initialised empty store ➜ {cfg.store_path}")


@store_grp.command("add")
@click.argument("solution_file", type=click.Path(path_type=Path))
@click.option("--tests", "tests_file", type=click.Path(path_type=Path), required=True)
@click.option("--task-id", default=None)
@click.option("--entry-id", default=None, help="defaults to <task>-<content digest>")
@store_option
@click.pass_obj
def store_add(obj: Context, solution_file, tests_file, task_id, entry_id, store_path):
    """Execute a solution against its suite and store it if every test passes."""
    try:
        cfg = obj.config.override(store_path=store_path)
        program = parse(read_text(solution_file))
        read_text(tests_file)
        suite = load_suite(tests_file)
        task = task_id or suite.task_id
        verdicts = run_suite(program, suite, cfg.step_limit)
        failing = [v.test_id for v in verdicts if not v.passed]
        if failing:
            raise StoreError(f"solution fails test(s) {', '.join(failing)}; not added")
        store = open_store(cfg, create=True)
        canonical = pretty_print(program)
        eid = entry_id or entry_id_for(task, canonical)
        store.put(StoreEntry.create(eid, task, canonical, make_embedder(cfg).embed(canonical),
                                    [v.test_id for v in verdicts], validated=True))
        store.save()
    except BpAssistError as exc:
        fail(exc)
    click.echo(f"added {eid} ({len(verdicts)} passing test(s))")


@store_grp.command("query")
@click.argument("source_file", type=click.Path(path_type=Path))
@click.option("--task-id", required=True)
@click.option("--failed", "failed_test_id", required=True)
@store_option
@click.pass_obj
def store_query(obj: Context, source_file, task_id, failed_test_id, store_path):
    """Print the best validated match for a program, or "none"."""
    try:
        cfg = obj.config.override(store_path=store_path)
        program: Program = parse(read_text(source_file))
        store = open_store(cfg)
        q = make_embedder(cfg).embed(pretty_print(program))
        hit = store.query(task_id, failed_test_id, q, cfg.repair.retrieval)
    except BpAssistError as exc:
        fail(exc)
    if hit is None:
        click.echo("none")
    else:
        click.echo(json.dumps({"entry_id": hit.entry.entry_id,
                               "similarity": round(hit.similarity, 6)}, indent=2))


@store_grp.command("stats")
@store_option
@click.pass_obj
def store_stats(obj: Context, store_path):
    """Entry counts per task."""
    try:
        store = open_store(obj.config.override(store_path=store_path))
    except BpAssistError as exc:
        fail(exc)
    click.echo(f"{len(store)} entries")
    table = store.stats()
    if len(table):
        click.echo(table.to_csv(sep="\t", index=False), nl=False)


if __name__ == "__main__":
    cli()
