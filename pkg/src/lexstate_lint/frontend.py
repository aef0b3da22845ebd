"""Reader for the JavaCC-style grammar format and token regex utilities.

Only the subset needed for lexical-state analysis is understood: ``TOKEN``
sections with state prefixes and out-states, and BNF productions built from
terminal references, non-terminal calls, sequence, ``|``, grouping and the
``*``, ``+``, ``?`` and ``[...]`` operators. Java code blocks, ``LOOKAHEAD``
specs, ``options`` and ``PARSER_BEGIN``/``PARSER_END`` sections are skipped.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Optional, Union

DEFAULT_STATE = "DEFAULT"
EOF_TOKEN = "EOF"

# Alphabet used to interpret negated character classes.
ALPHABET = frozenset(["\t", "\n"] + [chr(c) for c in range(0x20, 0x7F)])


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    offset: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class GrammarSyntaxError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class OutOfScopeError(GrammarSyntaxError):
    """Construct recognised but deliberately not supported (SKIP, MORE, JAVACODE...)."""


class EmptyLanguage(ValueError):
    pass


class BoundExceeded(ValueError):
    pass


# --------------------------------------------------------------------------
# Regex AST

@dataclass(frozen=True)
class Literal:
    text: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CharClass:
    chars: frozenset
    negated: bool = False
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def members(self) -> frozenset:
        return ALPHABET - self.chars if self.negated else self.chars


@dataclass(frozen=True)
class Concat:
    items: tuple
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Alt:
    items: tuple
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Star:
    node: "RegexNode"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Plus:
    node: "RegexNode"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Ref:
    name: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)


RegexNode = Union[Literal, CharClass, Concat, Alt, Star, Plus, Ref]


# --------------------------------------------------------------------------
# Expansion AST

@dataclass(frozen=True)
class TermRef:
    """``<NAME>`` or an inline ``"literal"`` (resolved against declared tokens)."""

    name: Optional[str]
    literal: Optional[str] = None
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    name: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    items: tuple
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Choice:
    items: tuple
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Repeat:
    """Postfix operator: ``*``, ``+``, ``?`` or bracketed ``[]``."""

    node: "ExpansionNode"
    op: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)


ExpansionNode = Union[TermRef, Call, Seq, Choice, Repeat]


@dataclass(frozen=True)
class TokenEntry:
    name: str
    regex: RegexNode
    out_state: Optional[str] = None
    private: bool = False
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TokenSection:
    # ("*",) stands for every lexical state.
    in_states: tuple
    entries: tuple
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Production:
    name: str
    body: ExpansionNode
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SurfaceGrammar:
    token_sections: tuple
    productions: tuple

    def states(self) -> list[str]:
        """Lexical states in order of first appearance, DEFAULT first."""
        seen = [DEFAULT_STATE]
        for sec in self.token_sections:
            for s in sec.in_states:
                if s != "*" and s not in seen:
                    seen.append(s)
            for e in sec.entries:
                if e.out_state and e.out_state not in seen:
                    seen.append(e.out_state)
        return seen

    def tokens(self) -> dict[str, tuple[TokenSection, TokenEntry]]:
        return {e.name: (sec, e) for sec in self.token_sections for e in sec.entries}


# --------------------------------------------------------------------------
# Lexer for the grammar file itself

_LEX = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<char>'(?:[^'\\\n]|\\.)*')
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<number>[0-9][0-9A-Za-z_.]*)
  | (?P<op>.)
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f",
            '"': '"', "'": "'", "\\": "\\"}


class _Tok(NamedTuple):
    kind: str
    text: str
    span: Span


def _unescape(body: str, span: Span) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        i += 1
        if i >= len(body):
            raise GrammarSyntaxError("dangling escape in string literal", span)
        e = body[i]
        if e in _ESCAPES:
            out.append(_ESCAPES[e])
            i += 1
        elif e == "u":
            out.append(chr(int(body[i + 1:i + 5], 16)))
            i += 5
        elif e in "01234567":
            j = i
            while j < len(body) and j < i + 3 and body[j] in "01234567":
                j += 1
            out.append(chr(int(body[i:j], 8)))
            i = j
        else:
            raise GrammarSyntaxError(f"unknown escape \\{e}", span)
    return "".join(out)


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _LEX.match(text, pos)
        if m is None:  # unterminated comment or string
            span = Span(line, pos - line_start + 1, pos, 1)
            raise GrammarSyntaxError("unterminated comment or literal", span)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "op" and value in "\"'":
                span = Span(line, pos - line_start + 1, pos, 1)
                raise GrammarSyntaxError("unterminated literal", span)
            toks.append(_Tok(kind, value, Span(line, pos - line_start + 1, pos, len(value))))
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", Span(line, pos - line_start + 1, pos, 0)))
    return toks


_TOKEN_KINDS = ("TOKEN", "SKIP", "MORE", "SPECIAL_TOKEN")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    # -- helpers
    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "ident") and t.text == text

    def next(self) -> _Tok:
        t = self.peek()
        self.i += 1
        return t

    def expect(self, text: str, what: Optional[str] = None) -> _Tok:
        if not self.at(text):
            self.fail(f"expected {what or repr(text)}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> _Tok:
        if self.peek().kind != "ident":
            self.fail(f"expected {what}")
        return self.next()

    def fail(self, message: str):
        t = self.peek()
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise GrammarSyntaxError(f"{message}, found {found}", t.span)

    def skip_balanced(self, open_: str, close: str) -> None:
        self.expect(open_)
        depth = 1
        while depth:
            t = self.next()
            if t.kind == "eof":
                raise GrammarSyntaxError(f"unbalanced {open_!r}", t.span)
            if t.kind == "op":
                if t.text == open_:
                    depth += 1
                elif t.text == close:
                    depth -= 1

    # -- top level
    def grammar(self) -> SurfaceGrammar:
        sections, prods = [], []
        token_names: dict[str, Span] = {}
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "ident" and t.text == "options" and self.at("{", 1):
                self.next()
                self.skip_balanced("{", "}")
            elif t.kind == "ident" and t.text == "PARSER_BEGIN":
                self._skip_parser_block()
            elif self.at("<") or (t.kind == "ident" and t.text in _TOKEN_KINDS):
                sec = self.token_section()
                for e in sec.entries:
                    if e.name in token_names:
                        raise GrammarSyntaxError(f"duplicate token name {e.name}", e.span)
                    token_names[e.name] = e.span
                sections.append(sec)
            elif t.kind == "ident" and t.text == "JAVACODE":
                raise OutOfScopeError("JAVACODE productions are out of scope", t.span)
            elif t.kind == "ident":
                prods.append(self.production())
            else:
                self.fail("expected TOKEN section or production")
        if not prods:
            self.fail("expected TOKEN section or production")
        return SurfaceGrammar(tuple(sections), tuple(prods))

    def _skip_parser_block(self) -> None:
        self.next()
        self.skip_balanced("(", ")")
        while not (self.peek().kind == "ident" and self.peek().text == "PARSER_END"):
            if self.peek().kind == "eof":
                self.fail("expected PARSER_END")
            self.next()
        self.next()
        self.skip_balanced("(", ")")

    def token_section(self) -> TokenSection:
        start = self.peek().span
        states: tuple = (DEFAULT_STATE,)
        if self.at("<"):
            self.next()
            if self.at("*"):
                self.next()
                states = ("*",)
            else:
                names = [self.expect_ident("lexical state name").text]
                while self.at(","):
                    self.next()
                    names.append(self.expect_ident("lexical state name").text)
                states = tuple(names)
            self.expect(">")
        kind = self.expect_ident("TOKEN")
        if kind.text in ("SKIP", "MORE", "SPECIAL_TOKEN"):
            raise OutOfScopeError(f"{kind.text} sections are out of scope", kind.span)
        if kind.text != "TOKEN":
            raise GrammarSyntaxError(f"expected TOKEN, found {kind.text!r}", kind.span)
        if self.at("["):
            self.skip_balanced("[", "]")
        self.expect(":")
        self.expect("{")
        entries = [self.token_entry()]
        while self.at("|"):
            self.next()
            entries.append(self.token_entry())
        self.expect("}", "'|' or '}'")
        return TokenSection(states, tuple(entries), start)

    def token_entry(self) -> TokenEntry:
        start = self.expect("<", "token definition '<NAME: regex>'").span
        private = False
        if self.at("#"):
            self.next()
            private = True
        name = self.expect_ident("token name").text
        self.expect(":")
        regex = self.regex()
        self.expect(">", "'>'")
        if self.at("{"):
            self.skip_balanced("{", "}")
        out = None
        if self.at(":"):
            self.next()
            out = self.expect_ident("lexical state name").text
        return TokenEntry(name, regex, out, private, start)

    # -- regular expressions
    def regex(self) -> RegexNode:
        start = self.peek().span
        branches = [self.regex_seq()]
        while self.at("|"):
            self.next()
            branches.append(self.regex_seq())
        return branches[0] if len(branches) == 1 else Alt(tuple(branches), start)

    def regex_seq(self) -> RegexNode:
        start = self.peek().span
        items = [self.regex_unit()]
        while not (self.at("|") or self.at(")") or self.at(">")):
            items.append(self.regex_unit())
        return items[0] if len(items) == 1 else Concat(tuple(items), start)

    def regex_unit(self) -> RegexNode:
        start = self.peek().span
        t = self.peek()
        if t.kind == "string":
            self.next()
            node: RegexNode = Literal(_unescape(t.text[1:-1], t.span), t.span)
        elif self.at("~") or self.at("["):
            negated = False
            if self.at("~"):
                self.next()
                negated = True
            node = CharClass(self.char_class(), negated, start)
        elif self.at("("):
            self.next()
            node = self.regex()
            self.expect(")")
        elif self.at("<"):
            self.next()
            if self.at("#"):
                self.next()
            name = self.expect_ident("token name").text
            if self.at(":"):
                raise OutOfScopeError("nested labelled regular expressions are out of scope", start)
            self.expect(">")
            node = Ref(name, start)
        else:
            self.fail("expected regular expression")
        while self.at("*") or self.at("+") or self.at("?"):
            op = self.next().text
            if op == "*":
                node = Star(node, start)
            elif op == "+":
                node = Plus(node, start)
            else:
                node = Alt((node, Literal("")), start)
        return node

    def char_class(self) -> frozenset:
        self.expect("[")
        chars: set[str] = set()
        while not self.at("]"):
            a = self._class_char()
            if self.at("-"):
                self.next()
                b = self._class_char()
                chars.update(chr(c) for c in range(ord(a), ord(b) + 1))
            else:
                chars.add(a)
            if not self.at("]"):
                self.expect(",", "',' or ']'")
        self.next()
        return frozenset(chars)

    def _class_char(self) -> str:
        t = self.peek()
        if t.kind != "string":
            self.fail("expected character literal in class")
        self.next()
        s = _unescape(t.text[1:-1], t.span)
        if len(s) != 1:
            raise GrammarSyntaxError("character class items must be single characters", t.span)
        return s

    # -- productions
    def production(self) -> Production:
        start = self.peek().span
        self._type()
        name = self.expect_ident("production name").text
        self.skip_balanced("(", ")")
        if self.at("throws"):
            self.next()
            self.expect_ident()
            while self.at(","):
                self.next()
                self.expect_ident()
        self.expect(":")
        self.skip_balanced("{", "}")
        self.expect("{")
        body = self.expansion()
        self.expect("}", "'}'")
        return Production(name, body, start)

    def _type(self) -> None:
        self.expect_ident("return type")
        while self.at("."):
            self.next()
            self.expect_ident()
        if self.at("<"):
            self.skip_balanced("<", ">")
        while self.at("[") and self.at("]", 1):
            self.next()
            self.next()

    def expansion(self) -> ExpansionNode:
        start = self.peek().span
        branches = [self.expansion_seq()]
        while self.at("|"):
            self.next()
            branches.append(self.expansion_seq())
        return branches[0] if len(branches) == 1 else Choice(tuple(branches), start)

    def expansion_seq(self) -> ExpansionNode:
        start = self.peek().span
        items = []
        while not (self.at("|") or self.at(")") or self.at("]") or self.at("}")):
            if self.peek().kind == "eof":
                self.fail("expected '}'")
            unit = self.expansion_unit()
            if unit is not None:
                items.append(unit)
        return items[0] if len(items) == 1 else Seq(tuple(items), start)

    def expansion_unit(self) -> Optional[ExpansionNode]:
        start = self.peek().span
        t = self.peek()
        if t.kind == "ident" and t.text == "LOOKAHEAD":
            self.next()
            self.skip_balanced("(", ")")
            return None
        if self.at("{"):
            self.skip_balanced("{", "}")
            return None
        if self.at("("):
            self.next()
            inner = self.expansion()
            self.expect(")", "')'")
            if self.at("*") or self.at("+") or self.at("?"):
                return Repeat(inner, self.next().text, start)
            return inner
        if self.at("["):
            self.next()
            inner = self.expansion()
            self.expect("]", "']'")
            return Repeat(inner, "[]", start)
        # optional Java assignment target: ``x = ...``
        if t.kind == "ident" and self.at("=", 1):
            self.next()
            self.next()
        return self._atom(start)

    def _atom(self, start: Span) -> ExpansionNode:
        t = self.peek()
        if t.kind == "string":
            self.next()
            node: ExpansionNode = TermRef(None, _unescape(t.text[1:-1], t.span), start)
        elif self.at("<"):
            self.next()
            name = self.expect_ident("token name").text
            if self.at(":"):
                raise OutOfScopeError("inline token definitions are out of scope", start)
            self.expect(">")
            node = TermRef(name, None, start)
        elif t.kind == "ident":
            self.next()
            self.skip_balanced("(", ")")
            node = Call(t.text, start)
        else:
            self.fail("expected expansion unit")
        # ``.image`` style member access on a matched token
        while self.at(".") and self.peek(1).kind == "ident":
            self.next()
            self.next()
        return node


def parse_grammar(text: str) -> SurfaceGrammar:
    """Parse grammar source text into a :class:`SurfaceGrammar`."""
    return _Parser(text).grammar()


# --------------------------------------------------------------------------
# Pretty printing (inverse of parse_grammar up to spans and whitespace)

def _quote(s: str) -> str:
    out = []
    for c in s:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == "\r":
            out.append("\\r")
        elif not c.isprintable():
            out.append(f"\\u{ord(c):04x}")
        else:
            out.append(c)
    return '"' + "".join(out) + '"'


def format_regex(r: RegexNode) -> str:
    if isinstance(r, Literal):
        return _quote(r.text)
    if isinstance(r, CharClass):
        items = ", ".join(_quote(c) for c in sorted(r.chars))
        return ("~" if r.negated else "") + "[" + items + "]"
    if isinstance(r, Concat):
        return " ".join(_wrap_regex(x) for x in r.items)
    if isinstance(r, Alt):
        return " | ".join(_wrap_regex(x) for x in r.items)
    if isinstance(r, Star):
        return "(" + format_regex(r.node) + ")*"
    if isinstance(r, Plus):
        return "(" + format_regex(r.node) + ")+"
    if isinstance(r, Ref):
        return f"<{r.name}>"
    raise TypeError(r)


def _wrap_regex(r: RegexNode) -> str:
    return "(" + format_regex(r) + ")" if isinstance(r, Alt) else format_regex(r)


def format_expansion(e: ExpansionNode) -> str:
    if isinstance(e, TermRef):
        return _quote(e.literal) if e.name is None else f"<{e.name}>"
    if isinstance(e, Call):
        return f"{e.name}()"
    if isinstance(e, Seq):
        return " ".join(_wrap_expansion(x) for x in e.items)
    if isinstance(e, Choice):
        return " | ".join(_wrap_expansion(x) if isinstance(x, Choice) else format_expansion(x)
                          for x in e.items)
    if isinstance(e, Repeat):
        if e.op == "[]":
            return "[" + format_expansion(e.node) + "]"
        return "(" + format_expansion(e.node) + ")" + e.op
    raise TypeError(e)


def _wrap_expansion(e: ExpansionNode) -> str:
    if isinstance(e, Choice) or (isinstance(e, Seq) and not e.items):
        return "(" + format_expansion(e) + ")"
    return format_expansion(e)


def format_grammar(g: SurfaceGrammar) -> str:
    lines = []
    for sec in g.token_sections:
        lines.append(f"<{', '.join(sec.in_states)}> TOKEN : {{")
        for k, e in enumerate(sec.entries):
            lead = "  " if k == 0 else "| "
            out = f" : {e.out_state}" if e.out_state else ""
            hash_ = "#" if e.private else ""
            lines.append(f"{lead}<{hash_}{e.name}: {format_regex(e.regex)}>{out}")
        lines.append("}")
    for p in g.productions:
        lines.append(f"void {p.name}() : {{}} {{ {format_expansion(p.body)} }}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Regex semantics

def _resolve(r: RegexNode, defs: Optional[Mapping[str, RegexNode]]) -> RegexNode:
    if defs is None or r.name not in defs:
        raise KeyError(f"undefined token reference <{r.name}>")
    return defs[r.name]


def match_ends(r: RegexNode, text: str, pos: int,
               defs: Optional[Mapping[str, RegexNode]] = None) -> frozenset:
    """All end offsets ``e`` such that ``text[pos:e]`` is matched by ``r``."""
    if isinstance(r, Literal):
        return frozenset([pos + len(r.text)]) if text.startswith(r.text, pos) else frozenset()
    if isinstance(r, CharClass):
        if pos < len(text) and text[pos] in r.members():
            return frozenset([pos + 1])
        return frozenset()
    if isinstance(r, Concat):
        ends = frozenset([pos])
        for item in r.items:
            ends = frozenset(e2 for e in ends for e2 in match_ends(item, text, e, defs))
            if not ends:
                break
        return ends
    if isinstance(r, Alt):
        return frozenset().union(*(match_ends(x, text, pos, defs) for x in r.items))
    if isinstance(r, (Star, Plus)):
        seen = {pos} if isinstance(r, Star) else set()
        frontier = [pos]
        while frontier:
            nxt = []
            for p in frontier:
                for e in match_ends(r.node, text, p, defs):
                    if e not in seen:
                        seen.add(e)
                        nxt.append(e)
            frontier = nxt
        return frozenset(seen)
    if isinstance(r, Ref):
        return match_ends(_resolve(r, defs), text, pos, defs)
    raise TypeError(r)


def matches(r: RegexNode, text: str, defs: Optional[Mapping[str, RegexNode]] = None) -> bool:
    return len(text) in match_ends(r, text, 0, defs)


def to_python_regex(r: RegexNode, defs: Optional[Mapping[str, RegexNode]] = None) -> str:
    """Translate to a Python ``re`` pattern (used as an independent matcher)."""
    if isinstance(r, Literal):
        return "(?:" + re.escape(r.text) + ")"
    if isinstance(r, CharClass):
        members = sorted(r.members())
        if not members:
            return "(?!)"
        return "[" + "".join(re.escape(c) for c in members) + "]"
    if isinstance(r, Concat):
        return "(?:" + "".join(to_python_regex(x, defs) for x in r.items) + ")"
    if isinstance(r, Alt):
        if not r.items:
            return "(?!)"
        return "(?:" + "|".join(to_python_regex(x, defs) for x in r.items) + ")"
    if isinstance(r, Star):
        return "(?:" + to_python_regex(r.node, defs) + ")*"
    if isinstance(r, Plus):
        return "(?:" + to_python_regex(r.node, defs) + ")+"
    if isinstance(r, Ref):
        return to_python_regex(_resolve(r, defs), defs)
    raise TypeError(r)


def _shortest(r: RegexNode, defs, active: frozenset) -> Optional[str]:
    if isinstance(r, Literal):
        return r.text
    if isinstance(r, CharClass):
        members = r.members()
        return min(members) if members else None
    if isinstance(r, Concat):
        parts = []
        for item in r.items:
            s = _shortest(item, defs, active)
            if s is None:
                return None
            parts.append(s)
        return "".join(parts)
    if isinstance(r, Alt):
        options = [s for s in (_shortest(x, defs, active) for x in r.items) if s is not None]
        return min(options, key=lambda s: (len(s), s)) if options else None
    if isinstance(r, Star):
        return ""
    if isinstance(r, Plus):
        return _shortest(r.node, defs, active)
    if isinstance(r, Ref):
        if r.name in active:
            return None
        return _shortest(_resolve(r, defs), defs, active | {r.name})
    raise TypeError(r)


def sample_string(r: Optional[RegexNode], bound: int = 256,
                  defs: Optional[Mapping[str, RegexNode]] = None) -> str:
    """Shortest string matched by ``r``; ties go to the smallest code points.

    ``None`` stands for the end-of-file token and yields the empty string.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if r is None:
        return ""
    s = _shortest(r, defs, frozenset())
    if s is None:
        raise EmptyLanguage(f"regular expression matches nothing: {format_regex(r)}")
    if len(s) > bound:
        raise BoundExceeded(f"shortest witness has length {len(s)} > {bound}")
    return s


def iter_regex(r: RegexNode) -> Iterator[RegexNode]:
    yield r
    if isinstance(r, (Concat, Alt)):
        for x in r.items:
            yield from iter_regex(x)
    elif isinstance(r, (Star, Plus)):
        yield from iter_regex(r.node)
