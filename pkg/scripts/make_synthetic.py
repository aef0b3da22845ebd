#!/usr/bin/env python3
"""Write the large synthetic benchmark grammar (about 3000 lines, 7 lexical states).

The layout imitates a template language: DEFAULT text with six embedded
sub-languages, each entered by an opening token and left by a closing one.
A handful of productions deliberately use a token from the wrong state so
the analyses have something to report. Output is deterministic.
"""
import argparse
import random
from pathlib import Path

STATES = ["DEFAULT", "EXPR", "ATTR", "STYLE", "SCRIPT", "COMMENT", "MACRO"]
PER_REGION = 62
KEYWORDS = 6


def keyword(k: int, i: int) -> str:
    return f"KW_{STATES[k]}_{i}"


def generate(seed: int) -> str:
    rng = random.Random(seed)
    out = ["/* Synthetic template-language grammar used for timing runs. */", ""]
    out.append("options {\n  STATIC = false;\n}\n")
    out.append("PARSER_BEGIN(Synthetic)\npublic class Synthetic {}\nPARSER_END(Synthetic)\n")
    for k, st in enumerate(STATES):
        out.append(f"<{st}> TOKEN : {{")
        entries = [f'  <{keyword(k, i)}: "{st.lower()}{i}">' for i in range(KEYWORDS)]
        entries.append(f'  <ID_{st}: ["a"-"z"] (["a"-"z", "0"-"9", "_"])*>')
        entries.append(f'  <NUM_{st}: (["0"-"9"])+>')
        if k > 0:
            entries.append(f'  <CLOSE_{st}: "</{st.lower()}>"> : DEFAULT')
        out.append("\n| ".join(entries))
        out.append("}\n")
    out.append("<DEFAULT> TOKEN : {")
    out.append("\n| ".join(f'  <OPEN_{st}: "<{st.lower()}>"> : {st}' for st in STATES[1:]))
    out.append("}\n")

    out.append("void Start() : {}\n{\n  ( Region0_0() )* <EOF>\n}\n")
    for k, st in enumerate(STATES):
        kids = {i: [] for i in range(PER_REGION)}
        for i in range(1, PER_REGION):
            kids[rng.randrange(max(0, i - 8), i)].append(i)
        for i in range(PER_REGION):
            items = []
            for c in kids[i]:
                call = f"Region{k}_{c}()"
                items.append(rng.choice([call, call, f"[ {call} ]", f"( {call} )*"]))
            for _ in range(rng.randint(1, 3)):
                r = rng.random()
                if r < 0.04:
                    # wrong state: a keyword from another region
                    other = (k + rng.randint(1, len(STATES) - 1)) % len(STATES)
                    items.append(f"<{keyword(other, rng.randrange(KEYWORDS))}>")
                elif r < 0.5:
                    items.append(f"<{keyword(k, rng.randrange(KEYWORDS))}>")
                elif r < 0.7:
                    items.append(f"<ID_{st}>")
                else:
                    items.append(f"( <NUM_{st}> | <ID_{st}> <{keyword(k, rng.randrange(KEYWORDS))}> )")
            rng.shuffle(items)
            if k == 0 and i < len(STATES) - 1:
                j = i + 1
                items.append(f"<OPEN_{STATES[j]}> Region{j}_0() <CLOSE_{STATES[j]}>")
            lines = [f"void Region{k}_{i}() : {{}}", "{"]
            if len(items) > 2 and rng.random() < 0.3:
                half = len(items) // 2
                lines.append("  " + " ".join(items[:half]))
                lines.append("| " + " ".join(items[half:]))
            else:
                for item in items:
                    lines.append("  " + item)
            lines.append("}")
            lines.append("")
            out.extend(lines)
    return "\n".join(out)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                         / "src/lexstate_lint/fixtures/synthetic_large.jj"))
    args = ap.parse_args()
    text = generate(args.seed)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {args.out}: {text.count(chr(10)) + 1} lines")


if __name__ == "__main__":
    main()
