"""Command-line driver.

Exit codes: 0 no errors, 1 at least one error (or a warning under --strict),
2 input unreadable or unparsable.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .analysis import (CI_ERROR, CI_WARNING, ERROR_KINDS, USELESS, analyze, ci_analyze, cs_latent_errors,
                       cs_reachable_errors)
from .counterexample import Witness, witnesses_for
from .frontend import GrammarSyntaxError, parse_grammar
from .model import GrammarStructureError, normalize, validate
from .transition_graph import build_graph, emit_dot

SCHEMA_VERSION = 1
MODES = ("up", "ci", "cs")
DEFAULT_REPEATS = 30


@dataclass
class RunConfig:
    path: str
    modes: tuple = MODES
    fmt: str = "text"
    dot: Optional[str] = None
    witnesses: bool = False
    timing: Optional[int] = None  # repeat count
    strict: bool = False
    collapse_seq: bool = False


def level_of(kind: str) -> str:
    return "error" if kind in ERROR_KINDS else "warning"


def _location(path: str, d) -> str:
    return f"{path}:{d.span.line}:{d.span.col}" if d.span is not None else path


def format_report(diags: list, witnesses: list, fmt: str, grammar: str = "<input>",
                  states: tuple = (), timings: Optional[dict] = None) -> str:
    if fmt == "json":
        obj = {
            "schema_version": SCHEMA_VERSION,
            "grammar": grammar,
            "states": list(states),
            "diagnostics": [_diag_json(grammar, d) for d in diags],
            "witnesses": [_witness_json(w) for w in witnesses],
            "timings": dict(timings or {}),
        }
        return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
    lines = []
    for d in diags:
        parts = [level_of(d.kind).upper(), d.kind, d.nonterminal or "-"]
        if d.state is not None:
            parts.append(d.state)
        parts += [_location(grammar, d), d.message]
        lines.append(" ".join(parts))
    for w in witnesses:
        f = w.failure
        lines.append(f"WITNESS {w.target} {w.state} {json.dumps(w.text, ensure_ascii=False)} "
                     f"rejected at {f.position} in {f.state}: {f.reason}")
    for name, ms in (timings or {}).items():
        lines.append(f"TIMING {name} {ms:.3f} ms")
    if not diags and not witnesses:
        lines.insert(0, "no issues found")
    return "\n".join(lines) + "\n"


def _diag_json(path: str, d) -> dict:
    return {
        "level": level_of(d.kind),
        "kind": d.kind,
        "nonterminal": d.nonterminal,
        "state": d.state,
        "offending_states": list(d.offending_states),
        "file": path,
        "line": d.span.line if d.span else None,
        "col": d.span.col if d.span else None,
        "message": d.message,
    }


def _witness_json(w: Witness) -> dict:
    return {
        "target": w.target,
        "state": w.state,
        "text": w.text,
        "tokens": list(w.tokens),
        "path": [{"nonterminal": s.nonterminal, "state": s.state} for s in w.path.steps],
        "relaxed_path": w.path.relaxed,
        "failure": {"position": w.failure.position, "state": w.failure.state,
                    "reason": w.failure.reason},
        "verified": w.verified,
    }


def witness_targets(g, cs) -> list:
    """Reachable-tier pairs, then one latent pair for each non-terminal with a CI error."""
    pairs = list(cs_reachable_errors(g, cs))
    latent = cs_latent_errors(g, cs)
    for d in ci_analyze(g):
        if d.kind == CI_ERROR:
            pairs += [p for p in latent if p[0] == d.nonterminal][:1]
    return list(dict.fromkeys(pairs))


def _load(path: str):
    text = Path(path).read_text(encoding="utf-8")
    g = normalize(parse_grammar(text))
    problems = validate(g)
    if problems:
        d = problems[0]
        raise GrammarStructureError(d.message, d.span)
    return g


def _time_modes(path: str, modes: tuple, repeats: int) -> dict:
    """Average wall-clock per analysis, each including reading and parsing the file."""
    out = {}
    for mode in ("parse",) + modes:
        total = 0.0
        for _ in range(repeats):
            t0 = time.perf_counter()
            g = _load(path)
            if mode != "parse":
                analyze(g, (mode,))
            total += time.perf_counter() - t0
        out[mode] = total * 1000.0 / repeats
    return out


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        g = _load(cfg.path)
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: cannot read {cfg.path}: {e}", file=err)
        return 2
    except (GrammarSyntaxError, GrammarStructureError) as e:
        print(f"error: {cfg.path}: {e}", file=err)
        return 2

    result = analyze(g, cfg.modes)
    diags = result.diagnostics
    witnesses = []
    if cfg.witnesses or cfg.dot:
        tg = build_graph(g, result.cs, result.ci, collapse_seq=cfg.collapse_seq)
        if cfg.witnesses:
            witnesses = witnesses_for(tg, witness_targets(g, tg.cs))
        if cfg.dot:
            try:
                Path(cfg.dot).write_text(emit_dot(tg), encoding="utf-8")
            except OSError as e:
                print(f"error: cannot write {cfg.dot}: {e}", file=err)
                return 2
    timings = _time_modes(cfg.path, tuple(cfg.modes), cfg.timing) if cfg.timing else None
    out.write(format_report(diags, witnesses, cfg.fmt, cfg.path, g.states, timings))

    if any(d.kind in ERROR_KINDS for d in diags):
        return 1
    if cfg.strict and any(d.kind in (CI_WARNING, USELESS) for d in diags):
        return 1
    return 0


def _modes(text: str) -> tuple:
    picked = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in picked if m not in MODES]
    if bad or not picked:
        raise argparse.ArgumentTypeError(f"modes must be a comma list of {','.join(MODES)}")
    return tuple(m for m in MODES if m in picked)


def _repeats(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("repeat count must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lexstate-lint",
                                description="Find lexical-state errors in JavaCC grammars.")
    p.add_argument("grammar", help="grammar file (.jj)")
    p.add_argument("--mode", type=_modes, default=MODES,
                   help="analyses to run: comma list of up,ci,cs (default: all)")
    p.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")
    p.add_argument("--dot", metavar="PATH", help="write the lexical-transition graph as DOT")
    p.add_argument("--witnesses", action="store_true", help="generate verified counter-examples")
    p.add_argument("--timing", type=_repeats, nargs="?", const=DEFAULT_REPEATS, default=None,
                   metavar="REPEATS", help=f"report average run time (default {DEFAULT_REPEATS} runs)")
    p.add_argument("--strict", action="store_true", help="warnings also give exit code 1")
    p.add_argument("--collapse-seq", action="store_true", help="contract sequence boxes in the graph")
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.grammar, args.mode, args.fmt, args.dot, args.witnesses, args.timing,
                    args.strict, args.collapse_seq)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
