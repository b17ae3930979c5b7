"""Command-line entry point orchestrating the full pipeline.

Subcommands: synth, embed, assign, simulate, analyze, report. All commands are
seeded and write machine-first outputs (JSON/CSV/JSONL); with the same inputs,
flags, and seed a command produces byte-identical files. Exit codes: 0 success,
2 usage error, 3 domain error, 4 I/O error.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import sys
from pathlib import Path

import click

from . import __version__, codeprep, corpus, embed, stats, synth
from .assign import (
    ALGORITHMS,
    AssignmentConfig,
    build_assignment,
    load_assignment,
    save_assignment,
)
from .errors import SimgradeError
from .simulate import (
    ErrorModel,
    ProblemInstance,
    SimulationConfig,
    compare_algorithms,
    pairwise_similarity,
    simulate_session,
    write_report_csv,
    write_report_json,
)


def default_seed() -> int:
    return int(os.environ.get("SIMGRADE_SEED", "0"))


def handle_domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SimgradeError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(exc.exit_code)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)

    return wrapper


def write_manifest(out_dir: Path, command: str, config: dict) -> None:
    """Provenance sidecar for commands whose outputs are line- or binary-
    oriented and cannot carry the config inline."""
    manifest = {"tool": "simgrade", "version": __version__, "command": command,
                "config": config}
    with open(out_dir / f"{command}_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


@click.group()
@click.version_option(version=__version__)
def main():
    """Similarity-aware grader assignment and grading-error simulation."""


@main.command("synth")
@click.option("--grammar", "grammar_path", type=click.Path(), default=None,
              help="Grammar JSON file (default: packaged demo grammar).")
@click.option("--n", "n_programs", type=int, required=True, help="Number of programs.")
@click.option("--problem-id", default="p1", show_default=True)
@click.option("--seed", type=int, default=None, help="Random seed (default: $SIMGRADE_SEED or 0).")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Output directory for submissions.jsonl and labels.jsonl.")
@handle_domain_errors
def cmd_synth(grammar_path, n_programs, problem_id, seed, out_dir):
    """Sample labeled synthetic submissions from a weighted grammar."""
    if n_programs < 0:
        raise click.UsageError("--n must be >= 0")
    seed = default_seed() if seed is None else seed
    grammar = (
        synth.load_demo_grammar() if grammar_path is None
        else synth.load_grammar(grammar_path)
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    subs_path = out / "submissions.jsonl"
    labels_path = out / "labels.jsonl"
    with open(subs_path, "w", encoding="utf-8") as sf, \
            open(labels_path, "w", encoding="utf-8") as lf:
        for i in range(n_programs):
            program = synth.sample_program(grammar, seed=seed + i)
            sid = f"s{i:06d}"
            sf.write(json.dumps({
                "id": sid,
                "problem_id": problem_id,
                "source_text": program.source_text,
            }) + "\n")
            lf.write(json.dumps({
                "id": sid,
                "labels": sorted(program.labels),
            }) + "\n")
    write_manifest(out, "synth", {
        "grammar": grammar_path or str(synth.DEMO_GRAMMAR_PATH.name),
        "n": n_programs, "problem_id": problem_id, "seed": seed,
    })
    click.echo(f"wrote {n_programs} programs to {subs_path}")


@main.command("embed")
@click.option("--submissions", "subs_path", type=click.Path(), required=True)
@click.option("--dim", type=int, default=50, show_default=True)
@click.option("--window", type=int, default=5, show_default=True)
@click.option("--negatives", type=int, default=5, show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--lr", type=float, default=0.025, show_default=True)
@click.option("--min-count", type=int, default=5, show_default=True)
@click.option("--mask-len", type=int, default=codeprep.DEFAULT_MASK_LEN, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Output directory for embeddings.bin / embeddings.csv / programs.jsonl.")
@handle_domain_errors
def cmd_embed(subs_path, dim, window, negatives, epochs, lr, min_count, mask_len,
              seed, out_dir):
    """Preprocess, train token embeddings, and write program embeddings."""
    seed = default_seed() if seed is None else seed
    subs = corpus.load_submissions(subs_path)
    streams = [
        codeprep.preprocess(s.source_text, s.id, mask_len=mask_len) for s in subs
    ]
    vocab = codeprep.build_vocab(streams, min_count=min_count)
    cfg = embed.EmbedConfig(dim=dim, window=window, negatives=negatives,
                            epochs=epochs, learning_rate=lr, seed=seed)
    token_emb = embed.train_embeddings(streams, vocab, cfg)
    program_embs = [embed.embed_program(s, token_emb) for s in streams]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    embed.save_embeddings(token_emb, out / "embeddings.bin")
    embed.export_embeddings_csv(token_emb, out / "embeddings.csv")
    embed.save_program_embeddings(program_embs, out / "programs.jsonl")
    write_manifest(out, "embed", {
        "submissions": str(subs_path), "dim": dim, "window": window,
        "negatives": negatives, "epochs": epochs, "lr": lr,
        "min_count": min_count, "mask_len": mask_len, "seed": seed,
    })
    click.echo(f"trained {len(vocab)}-token embeddings for {len(program_embs)} programs")


@main.command("assign")
@click.option("--embeddings", "emb_path", type=click.Path(), required=True,
              help="Program embeddings JSONL (from `simgrade embed`).")
@click.option("--algorithm", type=click.Choice(ALGORITHMS), required=True)
@click.option("--k", "n_graders", type=int, required=True, help="Number of graders.")
@click.option("--n-validations", type=int, default=5, show_default=True)
@click.option("--mcmc-iterations", type=int, default=50_000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_domain_errors
def cmd_assign(emb_path, algorithm, n_graders, n_validations, mcmc_iterations,
               seed, out_path):
    """Build a grader assignment from program embeddings."""
    seed = default_seed() if seed is None else seed
    embs = embed.load_program_embeddings(emb_path)
    cfg = AssignmentConfig(
        n_graders=n_graders, algorithm=algorithm, n_validations=n_validations,
        seed=seed, mcmc_iterations=mcmc_iterations,
    )
    ids = [e.submission_id for e in embs]
    assignment = build_assignment(_IdSet(ids), embs, cfg)
    save_assignment(assignment, out_path, extra={
        "tool_version": __version__,
        "config": {
            "embeddings": str(emb_path), "algorithm": algorithm, "k": n_graders,
            "n_validations": n_validations, "mcmc_iterations": mcmc_iterations,
            "seed": seed,
        },
    })
    click.echo(f"wrote assignment for {n_graders} graders to {out_path}")


class _IdSet:
    """Adapter giving build_assignment its ids() view without a full corpus."""

    def __init__(self, ids):
        self._ids = list(ids)

    def ids(self):
        return list(self._ids)


@main.command("simulate")
@click.option("--embeddings", "emb_paths", type=click.Path(), multiple=True,
              required=True, help="Program embeddings JSONL; repeat per problem.")
@click.option("--assignment", "assignment_path", type=click.Path(), default=None,
              help="Simulate one saved assignment instead of comparing algorithms.")
@click.option("--algorithms", "algorithms_csv", default=None,
              help="Comma-separated algorithm list to compare.")
@click.option("--k", "n_graders", type=int, default=10, show_default=True)
@click.option("--reps", type=int, default=20, show_default=True)
@click.option("--n-validations", type=int, default=5, show_default=True)
@click.option("--window", type=int, default=3, show_default=True)
@click.option("--cold-start-similarity", type=float, default=0.80, show_default=True)
@click.option("--error-intercept", type=float, default=52.7, show_default=True)
@click.option("--error-slope", type=float, default=-50.0, show_default=True)
@click.option("--bootstrap-trials", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@handle_domain_errors
def cmd_simulate(emb_paths, assignment_path, algorithms_csv, n_graders, reps,
                 n_validations, window, cold_start_similarity, error_intercept,
                 error_slope, bootstrap_trials, seed, out_dir):
    """Predict grading error for an assignment, or compare algorithms."""
    seed = default_seed() if seed is None else seed
    if (assignment_path is None) == (algorithms_csv is None):
        raise click.UsageError("pass exactly one of --assignment or --algorithms")
    model = ErrorModel(intercept=error_intercept, slope=error_slope)
    sim_cfg = SimulationConfig(
        window=window, cold_start_similarity=cold_start_similarity,
        error_model=model, seed=seed,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_echo = {
        "window": window, "cold_start_similarity": cold_start_similarity,
        "error_model": {"intercept": error_intercept, "slope": error_slope},
        "seed": seed, "tool_version": __version__,
    }

    if assignment_path is not None:
        if len(emb_paths) != 1:
            raise click.UsageError("--assignment mode takes exactly one --embeddings")
        embs = embed.load_program_embeddings(emb_paths[0])
        assignment = load_assignment(assignment_path)
        result = simulate_session(assignment, pairwise_similarity(embs), sim_cfg)
        record = {
            "algorithm": result.algorithm,
            "mean_error_pct": result.mean_error,
            "validation_distance": result.validation_distance,
            "per_grader_errors": result.per_grader_errors,
            "config": config_echo,
        }
        with open(out / "simulation.json", "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2)
            fh.write("\n")
        click.echo(f"mean error {result.mean_error:.3f}% -> {out / 'simulation.json'}")
        return

    algorithms = [a.strip() for a in algorithms_csv.split(",") if a.strip()]
    for a in algorithms:
        if a not in ALGORITHMS:
            raise click.UsageError(f"unknown algorithm {a!r}")
    problems = []
    for idx, path in enumerate(emb_paths):
        embs = embed.load_program_embeddings(path)
        ids = [e.submission_id for e in embs]
        problems.append(ProblemInstance(subs=_IdSet(ids), embeddings=embs,
                                        name=f"problem{idx}"))
    report = compare_algorithms(
        problems, algorithms, n_graders=n_graders, sim_cfg=sim_cfg,
        n_repetitions=reps, n_validations=n_validations,
        bootstrap_trials=bootstrap_trials,
    )
    write_report_csv(report, out / "comparison.csv",
                     header_comment=json.dumps(config_echo, sort_keys=True))
    write_report_json(report, out / "comparison.json", config=config_echo)
    click.echo(f"compared {len(algorithms)} algorithms -> {out / 'comparison.csv'}")


@main.command("analyze")
@click.option("--logs", "logs_path", type=click.Path(), required=True)
@click.option("--embeddings", "emb_path", type=click.Path(), default=None,
              help="Program embeddings JSONL; enables the window-similarity analysis.")
@click.option("--window", type=int, default=3, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@handle_domain_errors
def cmd_analyze(logs_path, emb_path, window, out_dir):
    """Grader-accuracy analytics from grading logs (validation entries)."""
    logs = corpus.load_grading_logs(logs_path)
    analysis = stats.grader_error_analysis(logs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "grader_errors.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["grader_id", "mean_abs_pct_error"])
        for grader_id in sorted(analysis.per_grader_error):
            writer.writerow([grader_id, f"{analysis.per_grader_error[grader_id]:.6f}"])

    summary = {
        "rmse_pct": analysis.rmse,
        "assigned_on_true_fit": analysis.fit.to_record(),
        "n_graders": len(analysis.per_grader_error),
        "config": {"logs": str(logs_path), "window": window,
                   "tool_version": __version__},
    }

    if emb_path is not None:
        embs = embed.load_program_embeddings(emb_path)
        window_analysis = stats.window_similarity_analysis(logs, embs, window=window)
        with open(out / "window_similarity.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["max_window_similarity", "pct_error"])
            for max_sim, error in window_analysis.pairs:
                writer.writerow([f"{max_sim:.8f}", f"{error:.6f}"])
        summary["window_similarity_fit"] = (
            window_analysis.fit.to_record() if window_analysis.fit else None
        )

    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    click.echo(f"rmse {analysis.rmse:.3f}% -> {out / 'summary.json'}")


@main.command("report")
@click.option("--input", "input_path", type=click.Path(), required=True,
              help="comparison.json produced by `simgrade simulate`.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the table here instead of stdout.")
@handle_domain_errors
def cmd_report(input_path, out_path):
    """Render a comparison JSON as a plain-text table."""
    path = Path(input_path)
    if not path.exists():
        click.echo(f"error: no such file {input_path}", err=True)
        sys.exit(4)
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    lines = [
        f"{'algorithm':<14} {'mean error %':>12} {'val distance':>12} {'p vs random':>12}"
    ]
    for row in record["algorithms"]:
        p = row["p_vs_random"]
        lines.append(
            f"{row['algorithm']:<14} {row['mean_error_pct']:>12.3f} "
            f"{row['validation_distance']:>12.4f} "
            f"{(f'{p:.2g}' if p is not None else '-'):>12}"
        )
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
