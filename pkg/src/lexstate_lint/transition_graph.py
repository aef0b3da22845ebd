"""Lexical-transition graph: one component per useful production, rendered as DOT.

Every node carries an in-port and an out-port per lexical state. Edges link
ports in the order a parser would move through them; only token nodes
change state. A port from which no continuation exists is marked as an error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .analysis import CiStateMaps, CsOutStates, ci_state_maps, cs_build_out_states, useful_nonterminals
from .model import ERROR, Alternate, CoreGrammar, Epsilon, Sequence, Terminal, nullable

Port = tuple  # (node id, "in" | "out", state)


@dataclass
class Node:
    id: str
    kind: str  # head, seq, alt, token, leaf, eps
    label: str
    nonterminal: Optional[str]
    in_ports: list
    out_ports: list


@dataclass(frozen=True)
class Edge:
    src: Port
    dst: Port
    label: Optional[str] = None


@dataclass(frozen=True)
class ErrorMark:
    port: Port
    reason: str
    at: str  # node whose wiring exposed the dead end


@dataclass
class Component:
    name: str
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    marks: list = field(default_factory=list)

    @property
    def marked(self) -> bool:
        return bool(self.marks)

    def node(self, node_id: str) -> Node:
        return next(n for n in self.nodes if n.id == node_id)


@dataclass
class TransitionGraph:
    grammar: CoreGrammar
    cs: CsOutStates
    maps: CiStateMaps
    components: list
    useful: frozenset = frozenset()
    relaxed: Optional[CsOutStates] = None  # filled on demand by counter-example search

    def component(self, name: str) -> Component:
        return next(c for c in self.components if c.name == name)

    @property
    def marked_components(self) -> list:
        return [c.name for c in self.components if c.marked]


_OPERATOR = {"seq": "•", "alt": "|"}
_ORIGIN_TAG = {"star": "*", "plus": "+", "opt": "?"}


class _Builder:
    def __init__(self, g: CoreGrammar, cs: CsOutStates, maps: CiStateMaps):
        self.g = g
        self.cs = cs
        self.maps = maps
        self.nulls = nullable(g)

    def ports(self, states) -> list:
        return self.g.sort_states(states)

    def out_ports(self, n: str) -> list:
        # a nullable node can also hand its in-state straight through
        outs = set(self.maps.out_states.get(n, ()))
        if n in self.nulls:
            outs |= set(self.maps.in_states.get(n, ()))
        return self.ports(outs)

    def component(self, name: str, members: list) -> Component:
        g = self.g
        comp = Component(name)
        ids: dict = {}
        by_id: dict = {}
        edge_set: set = set()
        seen_ids: set = set()

        def new_id(base: str) -> str:
            k = 0
            cand = base
            while cand in seen_ids:
                k += 1
                cand = f"{base}@{k}"
            seen_ids.add(cand)
            return cand

        for n in members:
            body = g.rules[n]
            ins = self.ports(self.maps.in_states.get(n, ()))
            outs = self.out_ports(n)
            if isinstance(body, Terminal) and n != name:
                decl = g.tokens[body.token]
                node = Node(new_id(n), "token", body.token, n, self.ports(decl.in_states),
                            self.ports(decl.out_states()))
            elif isinstance(body, Epsilon):
                node = Node(new_id(n), "eps", "ε", n, [], [])
            else:
                kind = "head" if n == name else ("seq" if isinstance(body, Sequence) else "alt")
                if isinstance(body, Terminal):
                    label = n
                else:
                    op = _OPERATOR["seq" if isinstance(body, Sequence) else "alt"]
                    tag = _ORIGIN_TAG.get(g.origin.get(n, ""), "")
                    label = f"{n} {op}{tag}"
                node = Node(new_id(n), kind, label, n, ins, outs)
            ids[n] = node.id
            by_id[node.id] = node
            comp.nodes.append(node)

        def add_edge(src: Port, dst: Port, label: Optional[str] = None) -> None:
            e = Edge(src, dst, label)
            if e not in edge_set:
                edge_set.add(e)
                comp.edges.append(e)

        def child(parent: str, idx: int, c: str) -> Node:
            if c in ids:
                return by_id[ids[c]]
            leaf = Node(new_id(f"{parent}.{idx}"), "leaf", c, c,
                        self.ports(self.maps.in_states.get(c, ())),
                        self.out_ports(c))
            comp.nodes.append(leaf)
            for s in leaf.in_ports:
                outs = self.cs.get(c, s) - {ERROR}
                for t in self.g.sort_states(outs):
                    if t in leaf.out_ports:
                        add_edge((leaf.id, "in", s), (leaf.id, "out", t))
                if not outs:
                    comp.marks.append(ErrorMark((leaf.id, "in", s), f"{c} cannot be parsed in state {s}",
                                                leaf.id))
            return leaf

        for n in members:
            body = g.rules[n]
            me = by_id[ids[n]]
            if me.kind == "token":
                decl = g.tokens[body.token]
                for s in me.in_ports:
                    add_edge((me.id, "in", s), (me.id, "out", decl.out_state_for[s]), body.token)
            elif me.kind == "eps":
                continue
            elif isinstance(body, Terminal):
                continue  # wired by _token_head
            elif isinstance(body, Alternate):
                kids = [(0, body.left)] + ([(1, body.right)] if body.right != body.left else [])
                for idx, c in kids:
                    cn = child(n, idx, c)
                    for s in me.in_ports:
                        if s in cn.in_ports:
                            add_edge((me.id, "in", s), (cn.id, "in", s))
                    for s in cn.out_ports:
                        if s in me.out_ports:
                            add_edge((cn.id, "out", s), (me.id, "out", s))
            else:
                x = child(n, 0, body.left)
                y = child(n, 1, body.right)
                for s in me.in_ports:
                    if s in x.in_ports:
                        add_edge((me.id, "in", s), (x.id, "in", s))
                    if body.left in self.nulls and s in y.in_ports:
                        add_edge((me.id, "in", s), (y.id, "in", s))
                for s in x.out_ports:
                    if s in y.in_ports:
                        add_edge((x.id, "out", s), (y.id, "in", s))
                    else:
                        comp.marks.append(ErrorMark((x.id, "out", s),
                                                    f"no continuation in {body.right} from state {s}",
                                                    me.id))
                    if body.right in self.nulls and s in me.out_ports:
                        add_edge((x.id, "out", s), (me.id, "out", s))
                for s in y.out_ports:
                    if s in me.out_ports:
                        add_edge((y.id, "out", s), (me.id, "out", s))
        return comp


def _token_head(b: _Builder, comp: Component, name: str) -> None:
    """A production that is a single token gets a separate token node under its head."""
    g = b.g
    decl = g.tokens[g.rules[name].token]
    head = comp.nodes[0]
    tok = Node(f"{name}.0", "token", decl.name, None, b.ports(decl.in_states), b.ports(decl.out_states()))
    comp.nodes.append(tok)
    for s in head.in_ports:
        if s in tok.in_ports:
            comp.edges.append(Edge((head.id, "in", s), (tok.id, "in", s)))
    for s in tok.in_ports:
        comp.edges.append(Edge((tok.id, "in", s), (tok.id, "out", decl.out_state_for[s]), decl.name))
    for s in tok.out_ports:
        if s in head.out_ports:
            comp.edges.append(Edge((tok.id, "out", s), (head.id, "out", s)))


def _collapse(comp: Component) -> None:
    """Contract unmarked sequence nodes, joining their predecessors to their successors."""
    detected = {m.at for m in comp.marks} | {m.port[0] for m in comp.marks}
    for node in [n for n in comp.nodes if n.kind == "seq" and n.id not in detected]:
        edges = comp.edges
        for side, states in (("in", node.in_ports), ("out", node.out_ports)):
            for s in states:
                p = (node.id, side, s)
                preds = [e for e in edges if e.dst == p and e.src[0] != node.id]
                succs = [e for e in edges if e.src == p and e.dst[0] != node.id]
                for a in preds:
                    for z in succs:
                        e = Edge(a.src, z.dst, a.label or z.label)
                        if e not in edges:
                            edges.append(e)
        comp.edges = [e for e in edges if e.src[0] != node.id and e.dst[0] != node.id]
        comp.nodes = [n for n in comp.nodes if n.id != node.id]


def build_graph(g: CoreGrammar, cs: Optional[CsOutStates] = None, maps: Optional[CiStateMaps] = None,
                collapse_seq: bool = False) -> TransitionGraph:
    cs = cs_build_out_states(g) if cs is None else cs
    maps = ci_state_maps(g) if maps is None else maps
    b = _Builder(g, cs, maps)
    useful = set(useful_nonterminals(g))
    comps = []
    for name in g.nonterminals:
        if name not in useful or g.owner_of(name) != name:
            continue
        members = [n for n in g.nonterminals if n in useful and g.owner_of(n) == name]
        comp = b.component(name, members)
        if isinstance(g.rules[name], Terminal):
            _token_head(b, comp, name)
        if collapse_seq:
            _collapse(comp)
        comps.append(comp)
    return TransitionGraph(g, cs, maps, comps, frozenset(useful))


# --------------------------------------------------------------------------
# DOT output

def _esc(text: str) -> str:
    out = []
    for ch in text:
        if ch in '{}|<>"\\':
            out.append("\\" + ch)
        else:
            out.append(ch)
    return "".join(out)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(tg: TransitionGraph) -> str:
    """Deterministic DOT text; dead-end ports get a red edge to the component's error point."""
    order = tg.grammar.state_order
    lines = ["digraph lexical_transitions {", "  rankdir=TB;", "  compound=true;",
             '  node [shape=record, fontname="Helvetica"];', '  edge [fontname="Helvetica"];']
    for ci, comp in enumerate(tg.components):
        ids = {n.id: f"c{ci}n{k}" for k, n in enumerate(comp.nodes)}

        def port_ref(p: Port) -> str:
            node_id, side, s = p
            return f"{ids[node_id]}:{'i' if side == 'in' else 'o'}{order[s]}"

        lines.append(f"  subgraph cluster_{ci} {{")
        lines.append(f"    label={_quote(comp.name)};")
        if comp.marked:
            lines.append("    color=red;")
        for n in comp.nodes:
            ins = "|".join(f"<i{order[s]}> {_esc(s)}" for s in n.in_ports) or " "
            outs = "|".join(f"<o{order[s]}> {_esc(s)}" for s in n.out_ports) or " "
            label = f"{{{{{ins}}}|{_esc(n.label)}|{{{outs}}}}}"
            lines.append(f"    {ids[n.id]} [label={_quote(label)}];")
        for e in comp.edges:
            attrs = f" [label={_quote(e.label)}]" if e.label else ""
            lines.append(f"    {port_ref(e.src)} -> {port_ref(e.dst)}{attrs};")
        if comp.marked:
            lines.append(f'    c{ci}err [shape=point, color=red, width=0.15, label=""];')
            for m in comp.marks:
                lines.append(f"    {port_ref(m.port)} -> c{ci}err [color=red, tooltip={_quote(m.reason)}];")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
