"""Scoring of predicted molecules and edit actions.

Headline metrics, all in percent except similarity:

* validity rate: predictions that parse, over all records
* success rate: valid predictions improving the goal property by more than
  the margin, over all records
* mean similarity: ECFP4 Tanimoto to the source, over valid predictions
* execution accuracy: predictions (or executed actions) found among the
  ground truths, over records that have ground truths
* consistency rate: predictions equal to a product of their own actions,
  over records with parseable actions and an explicit prediction
"""

from __future__ import annotations

import json
import math
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from moledit.chem.canon import canonical_smiles
from moledit.chem.descriptors import descriptors, mol_weight
from moledit.chem.graph import Molecule
from moledit.editor import EditScript, apply_script, normalize_action, parse_action
from moledit.errors import EmptyInput, JsonError, MolEditError, OracleError, UnknownOracle
from moledit.fprint import ecfp, tanimoto
from moledit.smiles import parse_smiles

Oracle = Callable[[Molecule], float]


@dataclass(frozen=True)
class ExternalOracle:
    """Property from an external program: SMILES on stdin, one number on stdout."""

    command: tuple[str, ...]
    timeout: float = 60.0

    def __call__(self, mol: Molecule) -> float:
        smi = canonical_smiles(mol)
        try:
            proc = subprocess.run(
                list(self.command), input=smi + "\n", capture_output=True, text=True, timeout=self.timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise OracleError(f"oracle {self.command[0]} failed: {exc}") from exc
        if proc.returncode != 0:
            raise OracleError(f"oracle exited with status {proc.returncode} for {smi}")
        try:
            return float(proc.stdout.strip().splitlines()[0])
        except (ValueError, IndexError) as exc:
            raise OracleError(f"oracle printed no number for {smi}") from exc


def _heavy(m: Molecule) -> float:
    return float(m.num_heavy)


def _rings(m: Molecule) -> float:
    return float(len(m.rings))


def _hbd(m: Molecule) -> float:
    return float(descriptors(m).hbd)


def _hba(m: Molecule) -> float:
    return float(descriptors(m).hba)


_BUILTIN: dict[str, Oracle] = {
    "mol_weight": mol_weight,
    "heavy_atoms": _heavy,
    "ring_count": _rings,
    "hbd": _hbd,
    "hba": _hba,
}


class OracleRegistry(dict):
    def __missing__(self, key):
        raise UnknownOracle(f"no oracle named {key!r}; known: {', '.join(sorted(self))}")

    def register(self, name: str, fn: Oracle) -> None:
        self[name] = fn

    def register_command(self, name: str, command: Sequence[str]) -> None:
        self[name] = ExternalOracle(tuple(command))


def builtin_oracles() -> OracleRegistry:
    return OracleRegistry(_BUILTIN)


@dataclass(frozen=True)
class OptimizationGoal:
    oracle_id: str
    direction: str = "increase"
    margin: float = 0.0

    def __post_init__(self):
        if self.direction not in ("increase", "decrease"):
            raise ValueError("direction must be 'increase' or 'decrease'")


@dataclass
class PredictionRecord:
    id: str
    source: str
    actions: list[str] | None = None
    predicted: str | None = None
    ground_truths: list[str] | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "PredictionRecord":
        if "source" not in d:
            raise JsonError("prediction record lacks 'source'")
        actions = d.get("actions")
        if actions is not None and not isinstance(actions, list):
            raise JsonError("'actions' must be a list of strings")
        if actions is None and d.get("predicted") is None:
            raise JsonError("prediction record needs 'actions' or 'predicted'")
        return cls(
            id=str(d.get("id", "")),
            source=d["source"],
            actions=actions,
            predicted=d.get("predicted"),
            ground_truths=d.get("ground_truths"),
        )


@dataclass
class RecordResult:
    id: str
    valid: bool
    success: bool | None
    similarity: float | None
    improvement: float | None
    correct: bool | None
    consistent: bool | None
    products: list[str] = field(default_factory=list)
    error: str | None = None


@dataclass
class Metrics:
    n: int
    validity_rate: float
    success_rate: float | None
    mean_similarity: float | None
    consistency_rate: float | None
    execution_accuracy: float | None
    mean_improvement: float | None = None
    n_valid: int = 0
    n_success: int = 0
    n_consistent: int = 0
    n_consistency_eligible: int = 0
    n_correct: int = 0
    n_with_ground_truth: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [
            ("records", str(self.n)),
            ("validity_rate", _fmt(self.validity_rate)),
            ("success_rate", _fmt(self.success_rate)),
            ("mean_similarity", _fmt(self.mean_similarity, 4)),
            ("consistency_rate", _fmt(self.consistency_rate)),
            ("execution_accuracy", _fmt(self.execution_accuracy)),
            ("mean_improvement", _fmt(self.mean_improvement, 4)),
        ]
        w = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows)


def _fmt(v: float | None, digits: int = 2) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}"


def _canon(smi: str) -> str | None:
    try:
        return canonical_smiles(parse_smiles(smi))
    except MolEditError:
        return None


def score_record(
    rec: PredictionRecord,
    goal: OptimizationGoal | None = None,
    seed: int = 0,
    oracles: OracleRegistry | None = None,
) -> RecordResult:
    """Per-record scoring used by :func:`evaluate`."""
    oracle = (oracles or builtin_oracles())[goal.oracle_id] if goal else None
    try:
        src = parse_smiles(rec.source)
    except MolEditError as exc:
        return RecordResult(rec.id, False, False if goal else None, None, None, None, None, error=f"source: {exc}")
    products: list[str] = []
    actions_ok = False
    error = None
    if rec.actions:
        try:
            script = EditScript(tuple(parse_action(normalize_action(a)) for a in rec.actions))
            actions_ok = True
            products = apply_script(src, script, seed).smiles
        except MolEditError as exc:
            error = str(exc)

    pred_mol = None
    if rec.predicted is not None:
        try:
            pred_mol = parse_smiles(rec.predicted)
        except MolEditError as exc:
            error = error or f"predicted: {exc}"
    elif products:
        pred_mol = parse_smiles(products[0])
    valid = pred_mol is not None
    pred_key = canonical_smiles(pred_mol) if valid else None

    correct = None
    if rec.ground_truths:
        truths = {k for k in (_canon(g) for g in rec.ground_truths) if k is not None}
        if rec.predicted is not None:
            correct = pred_key in truths
        else:
            correct = any(p in truths for p in products)

    consistent = None
    if actions_ok and rec.predicted is not None:
        consistent = valid and pred_key in products

    similarity = improvement = None
    success = None
    if valid:
        similarity = tanimoto(ecfp(src), ecfp(pred_mol))
    if goal is not None:
        success = False
        if valid:
            try:
                delta = oracle(pred_mol) - oracle(src)
            except OracleError as exc:
                error = error or str(exc)
            else:
                improvement = delta if goal.direction == "increase" else -delta
                success = improvement > goal.margin
    return RecordResult(rec.id, valid, success, similarity, improvement, correct, consistent, products, error)


def _pct(k: int, n: int) -> float | None:
    return None if n == 0 else 100.0 * k / n


def aggregate(results: Sequence[RecordResult], goal: OptimizationGoal | None) -> Metrics:
    n = len(results)
    if n == 0:
        raise EmptyInput("no prediction records")
    n_valid = sum(r.valid for r in results)
    n_success = sum(bool(r.success) for r in results)
    sims = [r.similarity for r in results if r.similarity is not None]
    imps = [r.improvement for r in results if r.improvement is not None]
    elig = [r for r in results if r.consistent is not None]
    gt = [r for r in results if r.correct is not None]
    return Metrics(
        n=n,
        validity_rate=100.0 * n_valid / n,
        success_rate=_pct(n_success, n) if goal else None,
        mean_similarity=math.fsum(sims) / len(sims) if sims else None,
        consistency_rate=_pct(sum(r.consistent for r in elig), len(elig)),
        execution_accuracy=_pct(sum(r.correct for r in gt), len(gt)),
        mean_improvement=math.fsum(imps) / len(imps) if imps else None,
        n_valid=n_valid,
        n_success=n_success,
        n_consistent=sum(r.consistent for r in elig),
        n_consistency_eligible=len(elig),
        n_correct=sum(r.correct for r in gt),
        n_with_ground_truth=len(gt),
    )


def _score_star(args):
    return score_record(*args)


def score_records(
    records: Sequence[PredictionRecord],
    goal: OptimizationGoal | None = None,
    seed: int = 0,
    oracles: OracleRegistry | None = None,
    jobs: int = 1,
) -> list[RecordResult]:
    """Results in input order; ``jobs > 1`` scores in worker processes."""
    args = [(r, goal, seed, oracles) for r in records]
    if jobs > 1 and len(records) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_score_star, args, chunksize=max(1, len(args) // (4 * jobs))))
    return [score_record(*a) for a in args]


def evaluate(
    records: Sequence[PredictionRecord],
    goal: OptimizationGoal | None = None,
    seed: int = 0,
    oracles: OracleRegistry | None = None,
    jobs: int = 1,
) -> Metrics:
    """Metrics over prediction records.

    Raises:
        EmptyInput: no records.
        UnknownOracle: the goal names an unregistered oracle.
    """
    if not records:
        raise EmptyInput("no prediction records")
    if goal is not None:
        (oracles or builtin_oracles())[goal.oracle_id]
    return aggregate(score_records(records, goal, seed, oracles, jobs), goal)


def iter_predictions(path: str | Path) -> Iterator[tuple[int, PredictionRecord | MolEditError]]:
    """(line number, record or error) for each non-blank JSONL line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, PredictionRecord.from_dict(json.loads(line))
            except json.JSONDecodeError as exc:
                yield lineno, JsonError(f"line {lineno}: {exc}")
            except MolEditError as exc:
                yield lineno, exc


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    out = []
    for _, rec in iter_predictions(path):
        if isinstance(rec, MolEditError):
            raise rec
        out.append(rec)
    return out
