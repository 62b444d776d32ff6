"""Batch runs over labelled problems and per-concept accuracy tables."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

from .config import RunConfig
from .errors import OddityError
from .generator import generate
from .matrix import N_PANELS
from .raster import load_grayscale
from .solver import solve_problem, solve_sheet


@dataclass(frozen=True)
class ProblemEntry:
    """One labelled problem: either a composite sheet, six panel files, or a
    generator recipe (concept + seed)."""

    problem_id: str
    concept: str
    odd_index: int
    image: str | None = None
    panels: tuple[str, ...] | None = None
    seed: int | None = None
    human: float | None = None


@dataclass(frozen=True)
class ConceptReport:
    concept: str
    correct: int
    total: int
    skipped: int
    human: float | None = None

    @property
    def incorrect(self) -> int:
        return self.total - self.correct - self.skipped

    @property
    def ratio(self) -> float | None:
        return self.correct / self.total if self.total else None


@dataclass
class BatchReport:
    concepts: list[ConceptReport]
    results: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def overall(self) -> ConceptReport:
        return ConceptReport(
            "overall",
            sum(c.correct for c in self.concepts),
            sum(c.total for c in self.concepts),
            sum(c.skipped for c in self.concepts),
        )


def _format_ratio(ratio: float | None) -> str:
    return "n/a" if ratio is None else f"{ratio:.2f}"


def parse_manifest(text: str, base_dir: str = ".") -> tuple[list[ProblemEntry], list[str]]:
    """Read a JSON-lines manifest. Bad lines are reported, good ones kept.

    Each line needs ``concept`` and a 0-based ``odd_index`` plus one of
    ``image`` (a 3x2 sheet), ``panels`` (six files) or ``seed`` (regenerate).
    Relative paths resolve against ``base_dir``.
    """
    entries, errors = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            row = json.loads(line)
            if not isinstance(row, dict):
                raise ValueError("expected a JSON object")
            concept = str(row["concept"])
            odd = int(row["odd_index"])
            if not 0 <= odd < N_PANELS:
                raise ValueError(f"odd_index {odd} outside 0..{N_PANELS - 1}")
            image = row.get("image")
            panels = row.get("panels")
            seed = row.get("seed")
            if sum(x is not None for x in (image, panels, seed)) != 1:
                raise ValueError("give exactly one of image, panels or seed")
            if panels is not None:
                if len(panels) != N_PANELS:
                    raise ValueError(f"panels needs {N_PANELS} paths, got {len(panels)}")
                panels = tuple(os.path.join(base_dir, p) for p in panels)
            if image is not None:
                image = os.path.join(base_dir, image)
            human = row.get("human")
            entries.append(ProblemEntry(
                problem_id=str(row.get("id", f"line{lineno}")),
                concept=concept,
                odd_index=odd,
                image=image,
                panels=panels,
                seed=None if seed is None else int(seed),
                human=None if human is None else float(human),
            ))
        except (ValueError, KeyError, TypeError) as exc:
            errors.append(f"line {lineno}: {type(exc).__name__}: {exc}")
    return entries, errors


def suite_entries(concepts, count: int, base_seed: int) -> list[ProblemEntry]:
    """Generator recipes for ``count`` problems per concept (no pixels yet)."""
    entries = []
    for concept in concepts:
        for seed in range(base_seed, base_seed + count):
            # odd_index is only known after generation; -1 marks "ask the generator"
            entries.append(ProblemEntry(f"{concept}-{seed}", concept, -1, seed=seed))
    return entries


def solve_entry(entry: ProblemEntry, config: RunConfig) -> dict:
    """Solve one entry; failures become an ``error`` record instead of raising."""
    config = replace(config, parallelism=1)
    truth = entry.odd_index
    try:
        if entry.seed is not None:
            problem = generate(entry.concept, entry.seed)
            truth = problem.odd_index if truth < 0 else truth
            verdict = solve_problem(problem.panels, config, entry.problem_id)
        elif entry.image is not None:
            verdict = solve_sheet(load_grayscale(entry.image), config, entry.problem_id)
        else:
            verdict = solve_problem([load_grayscale(p) for p in entry.panels], config, entry.problem_id)
    except (OddityError, OSError, ValueError) as exc:
        return {"problem_id": entry.problem_id, "concept": entry.concept, "truth": truth,
                "error": f"{type(exc).__name__}: {exc}"}
    record = verdict.to_dict()
    record.update(concept=entry.concept, truth=truth, correct=verdict.panel == truth)
    return record


def _solve_star(args):
    return solve_entry(*args)


def run_batch(entries, config: RunConfig) -> list[dict]:
    """Solve every entry, in input order, using up to ``config.parallelism`` processes."""
    entries = list(entries)
    if config.parallelism <= 1 or len(entries) < 2:
        return [solve_entry(e, config) for e in entries]
    chunk = max(1, len(entries) // (config.parallelism * 4))
    with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
        return list(pool.map(_solve_star, [(e, config) for e in entries], chunksize=chunk))


def tally(entries, results, errors=()) -> BatchReport:
    """Per-concept counts. Skipped and failed problems count against accuracy."""
    order: dict[str, dict] = {}
    for entry, res in zip(entries, results):
        row = order.setdefault(entry.concept, {"correct": 0, "total": 0, "skipped": 0, "human": None})
        row["total"] += 1
        if entry.human is not None and row["human"] is None:
            row["human"] = entry.human
        if "error" in res:
            continue
        if res["skipped"]:
            row["skipped"] += 1
        elif res["correct"]:
            row["correct"] += 1
    concepts = [ConceptReport(name, r["correct"], r["total"], r["skipped"], r["human"])
                for name, r in sorted(order.items())]
    all_errors = list(errors) + [f"{r['problem_id']}: {r['error']}" for r in results if "error" in r]
    return BatchReport(concepts, list(results), all_errors)


def render_text(report: BatchReport) -> str:
    show_human = any(c.human is not None for c in report.concepts)
    header = ["concept", "correct", "total", "ratio", "skipped"] + (["human"] if show_human else [])
    rows = []
    for c in report.concepts + [report.overall]:
        row = [c.concept, str(c.correct), str(c.total), _format_ratio(c.ratio), str(c.skipped)]
        if show_human:
            row.append("" if c.human is None else f"{c.human:.2f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.insert(len(lines) - 1, "  ".join("-" * w for w in widths))
    if report.errors:
        lines.append("")
        lines.append(f"errors ({len(report.errors)}):")
        lines.extend(f"  {e}" for e in report.errors)
    return "\n".join(lines) + "\n"


def render_csv(report: BatchReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["concept", "correct", "total", "ratio", "skipped", "human"])
    for c in report.concepts + [report.overall]:
        writer.writerow([c.concept, c.correct, c.total, _format_ratio(c.ratio), c.skipped,
                         "" if c.human is None else c.human])
    return buf.getvalue()


def render_json(report: BatchReport, config: RunConfig | None = None) -> str:
    def concept_dict(c: ConceptReport) -> dict:
        d = asdict(c)
        d["ratio"] = c.ratio
        return d

    payload = {
        "concepts": [concept_dict(c) for c in report.concepts],
        "overall": concept_dict(report.overall),
        "errors": report.errors,
        "problems": report.results,
    }
    if config is not None:
        # parallelism is a scheduling detail, not part of the result
        payload["config"] = {k: v for k, v in config.as_dict().items() if k != "parallelism"}
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"
