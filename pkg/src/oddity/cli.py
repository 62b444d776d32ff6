"""Command-line entry point: ``oddity solve | report | generate | explain | list-features``.

Exit codes: 0 answered, 2 skipped, 1 error. Panels are numbered 1..6 in
human-readable output and 0..5 in JSON.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import os
import sys
from dataclasses import replace

import click

from . import generator
from .config import RunConfig
from .errors import OddityError
from .export import dump_clouds
from .features import DEFAULT_CELL, active_features
from .matrix import CENTERS
from .raster import POLARITIES, compose_sheet, load_grayscale, save_pgm
from .report import parse_manifest, render_csv, render_json, render_text, run_batch, suite_entries, tally
from .solver import PANEL_NAMES, encode_problem, matrix_from_inputs, solve_matrix, split_sheet

EXIT_ANSWER, EXIT_ERROR, EXIT_SKIPPED = 0, 1, 2
FORMATS = ("text", "json", "csv")


class CliError(click.ClickException):
    exit_code = EXIT_ERROR


def _parse_rank(ctx, param, values):
    ranks = {}
    for item in values:
        fid, sep, rank = item.partition("=")
        if not sep or not rank.strip().isdigit():
            raise click.BadParameter(f"expected FEATURE=RANK, got {item!r}")
        ranks[fid.strip()] = int(rank)
    return ranks


def pipeline_options(fn):
    """Options shared by every command that runs the solver."""
    options = [
        click.option("--binarize-threshold", "threshold", type=click.IntRange(0, 255), default=128,
                     show_default=True, help="Intensity a pixel must exceed (after polarity) to count as ink."),
        click.option("--z-threshold", type=float, default=2.0, show_default=True,
                     help="Minimum |z| for a feature to vote."),
        click.option("--center", type=click.Choice(CENTERS), default="mean", show_default=True,
                     help="Centre of the standard score."),
        click.option("--rounding", "cloud_decimals", type=click.IntRange(0, 4), default=1, show_default=True,
                     help="Decimal places kept on normalized point coordinates."),
        click.option("--feature-rounding", "feature_decimals", type=click.IntRange(0, 4), default=2,
                     show_default=True, help="Decimal places kept on feature values."),
        click.option("--symmetry-cell", type=float, default=DEFAULT_CELL, show_default=True,
                     help="Bucket width for symmetry profiles and mirror matching."),
        click.option("--polarity", type=click.Choice(POLARITIES), default="ink", show_default=True,
                     help="'ink': dark figures on light paper; 'bright': light figures on dark."),
        click.option("--crop-caption", is_flag=True, help="Blank the caption corner of the first panel."),
        click.option("--no-gutter-fallback", is_flag=True,
                     help="Fail instead of cutting a sheet into exact thirds and halves."),
        click.option("--enable-chirality-feature/--disable-chirality-feature", "chirality", default=False,
                     show_default=True, help="Add the signed third-moment handedness feature."),
        click.option("--rank", "ranks", multiple=True, callback=_parse_rank, metavar="FEATURE=RANK",
                     help="Override a feature's tie-break rank (repeatable)."),
    ]
    for option in reversed(options):
        fn = option(fn)

    @functools.wraps(fn)
    def wrapper(threshold, z_threshold, center, cloud_decimals, feature_decimals, symmetry_cell,
                polarity, crop_caption, no_gutter_fallback, chirality, ranks, **kwargs):
        try:
            config = RunConfig(
                threshold=threshold, z_threshold=z_threshold, cloud_decimals=cloud_decimals,
                feature_decimals=feature_decimals, polarity=polarity, center=center,
                complexity=ranks, crop_caption=crop_caption, gutter_fallback=not no_gutter_fallback,
                chirality_feature=chirality, symmetry_cell=symmetry_cell,
                parallelism=kwargs.pop("parallel", 1),
            )
            active_features(config.chirality_feature, config.complexity or None)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        return fn(config=config, **kwargs)

    return wrapper


format_option = click.option("--format", "fmt", type=click.Choice(FORMATS), default="text", show_default=True)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _load_inputs(paths, config: RunConfig):
    """Six panels (plus the config to solve them with) from one sheet or six files."""
    try:
        if len(paths) == 1:
            panels = split_sheet(load_grayscale(paths[0]), config)
            # the caption was blanked on the sheet already
            return panels, replace(config, crop_caption=False)
        if len(paths) == 6:
            return [load_grayscale(p) for p in paths], config
    except (OddityError, OSError) as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from exc
    raise CliError(f"expected one sheet or six panel images, got {len(paths)} paths")


def _analyse(paths, config: RunConfig, problem_id: str | None):
    panels, config = _load_inputs(paths, config)
    try:
        inputs = encode_problem(panels, config)
        matrix = matrix_from_inputs(inputs, config)
    except (OddityError, ValueError) as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from exc
    verdict = solve_matrix(matrix, config)
    verdict.problem_id = problem_id
    return inputs, matrix, verdict


def _verdict_csv(verdict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["problem_id", "outcome", "panel", "votes", "features"])
    writer.writerow([
        verdict.problem_id or "", verdict.outcome, "" if verdict.skipped else verdict.panel + 1,
        " ".join(map(str, verdict.votes)),
        " ".join(f"{s.feature_id}@{s.panel + 1}:{s.z:.3f}" for s in verdict.selected),
    ])
    return buf.getvalue()


def _render_verdict(verdict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(verdict.to_dict(), sort_keys=True) + "\n"
    if fmt == "csv":
        return _verdict_csv(verdict)
    lines = [verdict.explanation]
    lines += [f"warning: {w}" for w in verdict.warnings]
    return "\n".join(lines) + "\n"


def dump_clouds_to(inputs, out_dir):
    dump_clouds([p.normalized for p in inputs], out_dir)


class OddityGroup(click.Group):
    """Click exits with 2 on usage errors; here 2 means "skipped", so those exit 1."""

    def main(self, *args, standalone_mode: bool = True, **kwargs):
        if not standalone_mode:
            return super().main(*args, standalone_mode=False, **kwargs)
        try:
            code = super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_ERROR if isinstance(exc, click.UsageError) else exc.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_ERROR)
        sys.exit(code if isinstance(code, int) else EXIT_ANSWER)


@click.group(cls=OddityGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Find the odd panel in six-panel geometry problems."""


@main.command()
@click.argument("images", nargs=-1, required=True, type=click.Path(dir_okay=False))
@pipeline_options
@format_option
@click.option("--out", type=click.Path(dir_okay=False), help="Write the verdict here instead of stdout.")
@click.option("--dump-clouds", type=click.Path(file_okay=False), help="Write normalized clouds (SVG, CSV) here.")
@click.option("--id", "problem_id", help="Problem identifier to carry into the output.")
def solve(images, config, fmt, out, dump_clouds, problem_id):
    """Solve one problem: a composite 3x2 sheet or six panel images in row-major order."""
    inputs, _, verdict = _analyse(images, config, problem_id)
    if dump_clouds:
        dump_clouds_to(inputs, dump_clouds)
    _emit(_render_verdict(verdict, fmt), out)
    sys.exit(EXIT_SKIPPED if verdict.skipped else EXIT_ANSWER)


@main.command()
@click.argument("images", nargs=-1, required=True, type=click.Path(dir_okay=False))
@pipeline_options
@format_option
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Directory for matrix.csv, zscores.csv, verdict.json and the cloud dumps.")
def explain(images, config, fmt, out):
    """Solve one problem and write every intermediate artefact to --out."""
    inputs, matrix, verdict = _analyse(images, config, None)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "matrix.csv"), "w", encoding="utf-8") as fh:
        fh.write(matrix.to_csv())
    with open(os.path.join(out, "zscores.csv"), "w", encoding="utf-8") as fh:
        fh.write("feature," + ",".join(f"panel{k + 1}" for k in range(6)) + "\n")
        for fid, row in zip(matrix.feature_ids, matrix.zscores):
            fh.write(fid + "," + ",".join(f"{z:.6f}" for z in row) + "\n")
    with open(os.path.join(out, "verdict.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(verdict.to_dict(), sort_keys=True, indent=1) + "\n")
    dump_clouds_to(inputs, os.path.join(out, "clouds"))

    if fmt == "text":
        lines = ["feature matrix:", matrix.to_csv().rstrip(), "", verdict.explanation, "", "warnings:"]
        lines += [f"  {w}" for w in verdict.warnings] or ["  none"]
        click.echo("\n".join(lines))
    else:
        click.echo(_render_verdict(verdict, fmt), nl=False)
    sys.exit(EXIT_SKIPPED if verdict.skipped else EXIT_ANSWER)


@main.command()
@click.argument("manifest", required=False, type=click.Path(dir_okay=False, exists=True))
@pipeline_options
@format_option
@click.option("--out", type=click.Path(dir_okay=False), help="Write the report here instead of stdout.")
@click.option("--parallel", type=click.IntRange(1, None), default=1, show_default=True,
              help="Problems solved concurrently (processes).")
@click.option("--suite", "suite", help="Comma-separated concepts to generate instead of reading a manifest.")
@click.option("--count", type=click.IntRange(1, None), default=200, show_default=True,
              help="Problems per concept with --suite.")
@click.option("--seed", type=int, default=1000, show_default=True, help="First seed with --suite.")
def report(manifest, config, fmt, out, suite, count, seed):
    """Per-concept accuracy over a JSON-lines MANIFEST or a generated --suite.

    Each manifest line holds "concept", a 0-based "odd_index" and one of
    "image" (3x2 sheet), "panels" (six paths) or "seed" (regenerate).
    Skipped and failed problems count as incorrect.
    """
    if (manifest is None) == (suite is None):
        raise CliError("give either a MANIFEST or --suite")
    if suite:
        concepts = [c.strip() for c in suite.split(",") if c.strip()]
        unknown = [c for c in concepts if c not in generator.CONCEPTS]
        if unknown:
            raise CliError(f"unknown concepts: {', '.join(unknown)}")
        entries, errors = suite_entries(concepts, count, seed), []
    else:
        with open(manifest, encoding="utf-8") as fh:
            entries, errors = parse_manifest(fh.read(), os.path.dirname(os.path.abspath(manifest)))
    results = run_batch(entries, config)
    table = tally(entries, results, errors)
    if fmt == "json":
        text = render_json(table, config)
    elif fmt == "csv":
        text = render_csv(table)
        for err in table.errors:
            click.echo(f"error: {err}", err=True)
    else:
        text = render_text(table)
    _emit(text, out)


@main.command()
@click.option("--concept", type=click.Choice(generator.CONCEPTS), required=True)
@click.option("--seed", type=click.IntRange(0, None), default=0, show_default=True)
@click.option("--count", type=click.IntRange(1, None), default=1, show_default=True,
              help="Problems to write; more than one goes to numbered subdirectories.")
@click.option("--size", type=click.IntRange(32, None), default=generator.DEFAULT_SIZE, show_default=True)
@click.option("--sheet", is_flag=True, help="Also write the composite 3x2 sheet.pgm.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def generate(concept, seed, count, size, sheet, out):
    """Write six PGM panels and a manifest.json per generated problem.

    A manifest.jsonl in --out lists every problem for the report command.
    """
    os.makedirs(out, exist_ok=True)
    rows = []
    for problem in generator.generate_suite(concept, count, seed, size):
        folder = out if count == 1 else os.path.join(out, problem.problem_id)
        os.makedirs(folder, exist_ok=True)
        names = [f"panel{k + 1}.pgm" for k in range(6)]
        for name, panel in zip(names, problem.panels):
            save_pgm(panel, os.path.join(folder, name))
        with open(os.path.join(folder, "manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(problem.manifest(), sort_keys=True, indent=1) + "\n")
        if sheet:
            save_pgm(compose_sheet(problem.panels), os.path.join(folder, "sheet.pgm"))
        rel = os.path.relpath(folder, out)
        rows.append({"id": problem.problem_id, "concept": concept, "odd_index": problem.odd_index,
                     "panels": [os.path.normpath(os.path.join(rel, n)) for n in names]})
        click.echo(f"{problem.problem_id}: odd panel {problem.odd_index + 1} "
                   f"({PANEL_NAMES[problem.odd_index]}) -> {folder}")
    with open(os.path.join(out, "manifest.jsonl"), "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


@main.command("list-features")
@click.option("--enable-chirality-feature/--disable-chirality-feature", "chirality", default=True,
              show_default=True, help="Include the optional handedness feature in the listing.")
@format_option
def list_features(chirality, fmt):
    """Registered features with tie-break rank and input stage."""
    rows = [(d.id, d.complexity_rank, d.stage, "optional" if d.optional else "")
            for d in active_features(chirality)]
    if fmt == "json":
        click.echo(json.dumps([{"id": i, "complexity_rank": r, "stage": s, "optional": bool(o)}
                               for i, r, s, o in rows], indent=1))
    elif fmt == "csv":
        click.echo("id,complexity_rank,stage,optional")
        for i, r, s, o in rows:
            click.echo(f"{i},{r},{s},{bool(o)}")
    else:
        width = max(len(r[0]) for r in rows)
        for i, r, s, o in rows:
            click.echo(f"{i.ljust(width)}  {r:>2}  {s:<10} {o}".rstrip())


if __name__ == "__main__":
    main()
