"""Command-line front end.

Exit status: 0 on success, 1 when some input records could not be
processed (diagnostics on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence, TextIO

from moledit import __version__
from moledit.chem.canon import canonical_smiles
from moledit.editor import (
    EditScript,
    apply_script,
    emit_rdkit_snippet,
    normalize_action,
    parse_action,
    parse_wrapper_json,
)
from moledit.errors import MolEditError
from moledit.smiles import SmiReadStats, SmilesDialect, iter_smi, number_atoms, parse_smiles, write_smiles

log = logging.getLogger("moledit")

DEFAULT_SEED = 42


class _Run:
    """Per-invocation state: output stream and error count."""

    def __init__(self, out: TextIO, err: TextIO):
        self.out = out
        self.err = err
        self.errors = 0

    def fail(self, where: str, exc: Exception | str) -> None:
        self.errors += 1
        print(f"error: {where}: {exc}", file=self.err)

    def summary(self, done: int, what: str = "records") -> None:
        print(f"{done} {what} processed, {self.errors} error(s)", file=self.err)


def _open_out(path: str | None, default: TextIO) -> TextIO:
    return open(path, "w", encoding="utf-8") if path and path != "-" else default


def _emit_rows(run: _Run, rows: list[dict], fmt: str, fh: TextIO | None = None) -> None:
    fh = fh or run.out
    if fmt == "json":
        for r in rows:
            fh.write(json.dumps(r) + "\n")
        return
    if not rows:
        return
    w = csv.writer(fh, delimiter="\t", lineterminator="\n")
    cols = list(rows[0])
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r[c] is None else r[c] for c in cols])


def _script_from_args(args) -> EditScript:
    if args.script:
        return EditScript.from_json(Path(args.script).read_text())
    if not args.action:
        raise MolEditError("give --action (repeatable) or --script")
    return EditScript(tuple(parse_action(normalize_action(a)) for a in args.action))


# ------------------------------------------------------------ commands


def cmd_canon(args, run: _Run) -> None:
    dialect = SmilesDialect(kekulized_output=args.kekulize)
    items = list(args.smiles)
    if args.input:
        stats = SmiReadStats()
        for rec, mol in iter_smi(args.input, stats):
            if mol is None:
                continue
            tail = f"\t{rec.id}" if rec.id else ""
            print(write_smiles(mol, dialect) + tail, file=run.out)
        run.errors += stats.malformed
        for lineno, msg in stats.errors or []:
            print(f"error: line {lineno}: {msg}", file=run.err)
    for s in items:
        try:
            print(write_smiles(parse_smiles(s), dialect), file=run.out)
        except MolEditError as exc:
            run.fail(s, exc)


def cmd_number(args, run: _Run) -> None:
    for s in args.smiles:
        try:
            print(number_atoms(parse_smiles(s), args.order), file=run.out)
        except MolEditError as exc:
            run.fail(s, exc)


def cmd_edit_apply(args, run: _Run) -> None:
    mol = parse_smiles(args.mol)
    script = _script_from_args(args)
    out = apply_script(mol, script, args.seed, strict=args.strict)
    for w in out.warnings:
        print(f"warning: {w}", file=run.err)
    for s in out.smiles:
        print(s, file=run.out)


def _exec_one(rec: dict, seed: int) -> dict:
    src = rec.get("source")
    resp = rec.get("response", rec)
    row = {"id": rec.get("id"), "source": src, "products": [], "claimed_target": None,
           "consistent": None, "repairs": [], "failures": [], "error": None}
    try:
        parsed = parse_wrapper_json(resp)
        row["claimed_target"] = parsed.claimed_target
        row["repairs"] = parsed.repairs
        row["failures"] = [f"action {k}: {m}" for k, m in parsed.failures]
        if parsed.failures or not parsed.actions:
            raise MolEditError("not every action parsed")
        out = apply_script(parse_smiles(src), parsed.actions, seed)
        row["products"] = out.smiles
        if parsed.claimed_target:
            try:
                row["consistent"] = canonical_smiles(parse_smiles(parsed.claimed_target)) in out.smiles
            except MolEditError:
                row["consistent"] = False
    except MolEditError as exc:
        row["error"] = str(exc)
    return row


def cmd_edit_exec_json(args, run: _Run) -> None:
    text = Path(args.input).read_text(encoding="utf-8")
    records = []
    try:
        whole = json.loads(text)
    except json.JSONDecodeError:
        whole = None
    if isinstance(whole, dict) and "Action Description" in whole:
        if not args.mol:
            raise MolEditError("a single wrapper object needs --mol")
        records.append({"id": "0", "source": args.mol, "response": whole})
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                run.fail(f"line {lineno}", exc)
                continue
            if args.mol and "source" not in rec:
                rec["source"] = args.mol
            records.append(rec)
    for rec in records:
        row = _exec_one(rec, args.seed)
        if row["error"]:
            run.fail(f"record {row['id']}", row["error"])
        run.out.write(json.dumps(row) + "\n")
    run.summary(len(records))


def _synth_job(item):
    smi, seed, iterations = item
    from moledit.synthgen import generate_sample

    s = generate_sample(parse_smiles(smi), None, iterations, seed)
    return None if s is None else s.to_json()


def cmd_gen_synth(args, run: _Run) -> None:
    stats = SmiReadStats()
    smiles = [rec.smiles for rec, mol in iter_smi(args.input, stats) if mol is not None]
    if args.limit:
        smiles = smiles[: args.limit]
    for lineno, msg in stats.errors or []:
        run.fail(f"line {lineno}", msg)
    items = [(s, args.seed + k, args.iterations) for k, s in enumerate(smiles)]
    fh = _open_out(args.output, run.out)
    n = 0
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = pool.map(_synth_job, items, chunksize=16)
                for r in results:
                    if r is not None:
                        fh.write(r + "\n")
                        n += 1
        else:
            for it in items:
                r = _synth_job(it)
                if r is not None:
                    fh.write(r + "\n")
                    n += 1
    finally:
        if fh is not run.out:
            fh.close()
    print(f"{n} samples from {len(smiles)} molecules", file=run.err)


def _read_grouped(path: str, group: str | None, run: _Run) -> list[tuple[str, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if group is not None:
                out.append((parts[0], group))
            elif len(parts) >= 2:
                out.append((parts[0], parts[1]))
            else:
                run.fail(f"line {lineno}", "expected SMILES<TAB>group_id")
    return out


def cmd_mmp_extract(args, run: _Run) -> None:
    from moledit.mmp import pair_index

    records = []
    for path in args.input:
        grp = args.group if args.group else (Path(path).stem if path.endswith(".smi") else None)
        records.extend(_read_grouped(path, grp, run))
    pairs = pair_index(records, args.max_cuts)
    _emit_rows(run, [p.to_dict() for p in pairs], args.format)
    print(f"{len(pairs)} pairs from {len(records)} records", file=run.err)


def cmd_mmp_classify(args, run: _Run) -> None:
    from moledit.mmp import MatchedPair, _with_class

    rows = []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                p = MatchedPair(d["mol_a"], d["mol_b"], d["core"], d["frag_a"], d["frag_b"],
                                int(d.get("arity", 1)), str(d.get("group_id", "")))
                rows.append(_with_class(p).to_dict())
            except (json.JSONDecodeError, KeyError, MolEditError) as exc:
                run.fail(f"line {lineno}", exc)
    _emit_rows(run, rows, args.format)


def cmd_rxn_diff(args, run: _Run) -> None:
    from moledit.mmp import diff_mapped_reaction

    n = kept = 0
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            n += 1
            row = {"line": lineno, "reaction": text.split()[0]}
            try:
                res = diff_mapped_reaction(text)
            except MolEditError as exc:
                run.fail(f"line {lineno}", exc)
                continue
            if res is None:
                row["status"] = "rejected"
            else:
                core, action = res
                kept += 1
                row.update(status="extracted", core=canonical_smiles(core),
                           script=EditScript((action,)).to_dict())
            run.out.write(json.dumps(row) + "\n")
    print(f"{kept} edits extracted from {n} reactions, {run.errors} error(s)", file=run.err)


def cmd_filter(args, run: _Run) -> None:
    from moledit.prepfilter import FilterConfig, filter_compound

    cfg = FilterConfig(min_mw=args.min_mw, max_mw=args.max_mw, max_chain=args.max_chain)
    stats = SmiReadStats()
    out = _open_out(args.output, run.out)
    rej = open(args.rejects, "w", encoding="utf-8") if args.rejects else None
    n = passed = 0
    try:
        for rec, mol in iter_smi(args.input, stats):
            if mol is None:
                continue
            n += 1
            rep = filter_compound(mol, cfg)
            tail = f"\t{rec.id}" if rec.id else ""
            if rep.passed:
                passed += 1
                out.write(rep.kept_fragment + tail + "\n")
            elif rej:
                reasons = "; ".join(f"{f.rule}: {f.detail}" for f in rep.failures)
                rej.write(f"{rec.smiles}\t{rec.id or ''}\t{reasons}\n")
    finally:
        if out is not run.out:
            out.close()
        if rej:
            rej.close()
    for lineno, msg in stats.errors or []:
        run.fail(f"line {lineno}", msg)
    print(f"{passed}/{n} passed", file=run.err)


def _read_pairs(path: str) -> list[tuple[str, str]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            a, b = line.split("\t")[:2] if "\t" in line else line.split()[:2]
            out.append((a.strip(), b.strip()))
    return out


def cmd_decon(args, run: _Run) -> None:
    from moledit.prepfilter import decontaminate

    pairs = _read_pairs(args.test)
    train = [mol for _, mol in iter_smi(args.train) if mol is not None]
    parsed, keep_idx = [], []
    for k, (a, b) in enumerate(pairs):
        try:
            parsed.append((parse_smiles(a), parse_smiles(b)))
            keep_idx.append(k)
        except MolEditError as exc:
            run.fail(f"pair {k + 1}", exc)
    kept = decontaminate(parsed, train, args.threshold)
    for k in kept:
        a, b = pairs[keep_idx[k]]
        print(f"{a}\t{b}", file=run.out)
    print(f"{len(kept)}/{len(pairs)} pairs kept", file=run.err)


def cmd_fp_sim(args, run: _Run) -> None:
    from moledit.fprint import ecfp, tanimoto

    pairs = list(zip(args.smiles[0::2], args.smiles[1::2])) if args.smiles else []
    if args.smiles and len(args.smiles) % 2:
        raise MolEditError("fp sim takes SMILES in pairs")
    if args.input:
        pairs.extend(_read_pairs(args.input))
    rows = []
    for a, b in pairs:
        try:
            s = tanimoto(ecfp(parse_smiles(a), args.radius, args.nbits), ecfp(parse_smiles(b), args.radius, args.nbits))
        except MolEditError as exc:
            run.fail(f"{a} {b}", exc)
            continue
        rows.append({"a": a, "b": b, "similarity": round(s, 6)})
    _emit_rows(run, rows, args.format)


def cmd_eval(args, run: _Run) -> None:
    from moledit.evalx import OptimizationGoal, builtin_oracles, evaluate, iter_predictions, aggregate, score_records

    oracles = builtin_oracles()
    for spec in args.oracle_cmd or []:
        name, _, cmd = spec.partition("=")
        if not cmd:
            raise MolEditError(f"--oracle-cmd expects NAME=COMMAND, got {spec!r}")
        oracles.register_command(name, cmd.split())
    goal = OptimizationGoal(args.oracle, args.direction, args.margin) if args.oracle else None
    if goal:
        oracles[goal.oracle_id]
    records = []
    for lineno, rec in iter_predictions(args.input):
        if isinstance(rec, MolEditError):
            run.fail(f"line {lineno}", rec)
        else:
            records.append(rec)
    results = score_records(records, goal, args.seed, oracles, args.jobs)
    metrics = aggregate(results, goal)
    if args.format == "json":
        run.out.write(json.dumps(metrics.to_dict(), indent=2) + "\n")
    else:
        run.out.write(metrics.table() + "\n")
    if args.plot_dir:
        from moledit.report import write_report

        for p in write_report(metrics, results, args.plot_dir):
            print(f"wrote {p}", file=run.err)


def cmd_emit(args, run: _Run) -> None:
    from moledit.synthgen import render_prompt_parts

    mol = parse_smiles(args.mol)
    script = _script_from_args(args)
    if args.kind == "prompt":
        run.out.write(render_prompt_parts(number_atoms(mol), script.actions) + "\n")
    else:
        run.out.write(emit_rdkit_snippet(mol, script))


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default %(default)s)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for batch commands")
    common.add_argument("--format", choices=("json", "tsv"), default="json", help="tabular output format")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="moledit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    c = sub.add_parser("canon", parents=[common], help="canonical SMILES")
    c.add_argument("smiles", nargs="*")
    c.add_argument("-i", "--input", help=".smi file")
    c.add_argument("--kekulize", action="store_true", help="write Kekulé bonds")
    c.set_defaults(func=cmd_canon)

    c = sub.add_parser("number", parents=[common], help="atom-numbered SMILES")
    c.add_argument("smiles", nargs="+")
    c.add_argument("--order", choices=("canonical", "input"), default="canonical")
    c.set_defaults(func=cmd_number)

    edit = sub.add_parser("edit", help="execute edit actions").add_subparsers(dest="edit_cmd", required=True)
    c = edit.add_parser("apply", parents=[common], help="apply actions to one molecule")
    c.add_argument("--mol", required=True)
    c.add_argument("--action", action="append", help="replace ... with ... (repeatable)")
    c.add_argument("--script", help="edit script JSON file")
    c.add_argument("--strict", action="store_true", help="fail on ambiguous sites instead of using the seed")
    c.set_defaults(func=cmd_edit_apply)
    c = edit.add_parser("exec-json", parents=[common], help="run wrapper-JSON responses")
    c.add_argument("input", help="JSONL of {id, source, response} or one wrapper object")
    c.add_argument("--mol", help="source molecule when not given per record")
    c.set_defaults(func=cmd_edit_exec_json)

    gen = sub.add_parser("gen", help="dataset generation").add_subparsers(dest="gen_cmd", required=True)
    c = gen.add_parser("synth", parents=[common], help="synthetic edit samples")
    c.add_argument("input", help=".smi file of source molecules")
    c.add_argument("-o", "--output", help="JSONL output (default stdout)")
    c.add_argument("--iterations", type=int, help="edits per sample (default: random 1-3)")
    c.add_argument("--limit", type=int, help="use only the first N molecules")
    c.set_defaults(func=cmd_gen_synth)

    mmp = sub.add_parser("mmp", help="matched molecular pairs").add_subparsers(dest="mmp_cmd", required=True)
    c = mmp.add_parser("extract", parents=[common], help="index pairs within groups")
    c.add_argument("input", nargs="+", help="TSV smiles<TAB>group, or .smi files (group = file stem)")
    c.add_argument("--group", help="treat every input line as this group")
    c.add_argument("--max-cuts", type=int, choices=(1, 2), default=2)
    c.set_defaults(func=cmd_mmp_extract)
    c = mmp.add_parser("classify", parents=[common], help="(re)classify pairs from JSONL")
    c.add_argument("input")
    c.set_defaults(func=cmd_mmp_classify)

    rxn = sub.add_parser("rxn", help="reaction tools").add_subparsers(dest="rxn_cmd", required=True)
    c = rxn.add_parser("diff", parents=[common], help="single-site edits from mapped reactions")
    c.add_argument("input")
    c.set_defaults(func=cmd_rxn_diff)

    c = sub.add_parser("filter", parents=[common], help="compound preprocessing filters")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.add_argument("--rejects", help="write rejected records with reasons")
    c.add_argument("--min-mw", type=float, default=100.0)
    c.add_argument("--max-mw", type=float, default=800.0)
    c.add_argument("--max-chain", type=int, default=6)
    c.set_defaults(func=cmd_filter)

    c = sub.add_parser("decon", parents=[common], help="drop test pairs similar to training moieties")
    c.add_argument("--test", required=True, help="TSV of frag_a<TAB>frag_b")
    c.add_argument("--train", required=True, help=".smi of training moieties")
    c.add_argument("--threshold", type=float, default=0.6)
    c.set_defaults(func=cmd_decon)

    fp = sub.add_parser("fp", help="fingerprints").add_subparsers(dest="fp_cmd", required=True)
    c = fp.add_parser("sim", parents=[common], help="Tanimoto similarity of SMILES pairs")
    c.add_argument("smiles", nargs="*")
    c.add_argument("-i", "--input", help="TSV of SMILES pairs")
    c.add_argument("--radius", type=int, default=2)
    c.add_argument("--nbits", type=int, default=2048)
    c.set_defaults(func=cmd_fp_sim)

    c = sub.add_parser("eval", parents=[common], help="score a predictions JSONL file")
    c.add_argument("input")
    c.add_argument("--oracle", help="property oracle for success rate")
    c.add_argument("--direction", choices=("increase", "decrease"), default="increase")
    c.add_argument("--margin", type=float, default=0.0)
    c.add_argument("--oracle-cmd", action="append", metavar="NAME=COMMAND", help="register an external oracle")
    c.add_argument("--plot-dir", help="write metrics.json, records.tsv and PNG figures here")
    c.set_defaults(func=cmd_eval)

    emit = sub.add_parser("emit", help="render prompt or code text")
    emit_sub = emit.add_subparsers(dest="kind", required=True)
    for kind in ("prompt", "code"):
        c = emit_sub.add_parser(kind, parents=[common])
        c.add_argument("--mol", required=True)
        c.add_argument("--action", action="append")
        c.add_argument("--script")
        c.set_defaults(func=cmd_emit)
    return p


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    run = _Run(out, err)
    try:
        args.func(args, run)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=err)
        return 2
    except (MolEditError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return 1
    return 1 if run.errors else 0


if __name__ == "__main__":
    sys.exit(main())
