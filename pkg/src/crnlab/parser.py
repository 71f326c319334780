"""Text format for reaction networks (``.crn`` files).

Grammar, one reaction per line::

    model    := { line }
    line     := reaction | comment | blank
    reaction := side ("->" | "<->") side "@" rate [ "," rate ]
    side     := "0" | term { "+" term }
    term     := [ integer ] species
    species  := identifier
    rate     := positive decimal

``<->`` expands to two reactions, forward rate first; the backward rate is
mandatory for ``<->`` and forbidden for ``->``.  ``#`` starts a comment.
Species indices follow first appearance; duplicate species within a side sum
their coefficients; declaring the same (source, target) pair twice is an
error (rates are per-reaction constants, not additive).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .network import Complex, Reaction, ReactionNetwork


@dataclass(frozen=True)
class ModelSource:
    """A model text plus a name used in error messages."""

    text: str
    name: str = "<string>"


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow><->|->)
  | (?P<at>@)
  | (?P<comma>,)
  | (?P<plus>\+)
  | (?P<number>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


def _tokenize(line: str, lineno: int) -> list[tuple[str, str, int]]:
    """Token stream for one line: (kind, text, 1-based column)."""
    out = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise ParseError(lineno, pos + 1, f"unknown token {line[pos]!r}", line[pos])
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append((kind, m.group(), pos + 1))
        pos = m.end()
    return out


class _LineParser:
    def __init__(self, tokens, lineno, species_index, species_names):
        self.toks = tokens
        self.i = 0
        self.lineno = lineno
        self.species_index = species_index
        self.species_names = species_names

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, kind=None):
        tok = self.peek()
        if tok is None:
            last = self.toks[-1]
            raise ParseError(self.lineno, last[2] + len(last[1]), "unexpected end of line")
        if kind is not None and tok[0] != kind:
            raise ParseError(self.lineno, tok[2], f"expected {kind}, got {tok[1]!r}", tok[1])
        self.i += 1
        return tok

    def side(self) -> dict[int, int]:
        tok = self.peek()
        if tok is not None and tok[0] == "number" and tok[1] == "0":
            nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
            if nxt is None or nxt[0] != "ident":
                self.take()
                return {}
        counts: dict[int, int] = {}
        while True:
            coeff = 1
            tok = self.peek()
            if tok is not None and tok[0] == "number":
                kind, text, col = self.take()
                if not text.isdigit():
                    raise ParseError(self.lineno, col, f"coefficient must be an integer, got {text!r}", text)
                coeff = int(text)
                if coeff == 0:
                    raise ParseError(self.lineno, col, "coefficient must be positive", text)
            kind, name, col = self.take("ident")
            if name not in self.species_index:
                self.species_index[name] = len(self.species_names)
                self.species_names.append(name)
            idx = self.species_index[name]
            counts[idx] = counts.get(idx, 0) + coeff
            tok = self.peek()
            if tok is not None and tok[0] == "plus":
                self.take()
                continue
            return counts

    def rate(self) -> float:
        kind, text, col = self.take()
        if kind != "number":
            raise ParseError(self.lineno, col, f"missing rate, got {text!r}", text)
        value = float(text)
        if not value > 0:
            raise ParseError(self.lineno, col, f"rate must be positive, got {text}", text)
        return value


def parse_network(src: ModelSource | str) -> ReactionNetwork:
    """Parse model text into a ReactionNetwork; raises ParseError on bad input."""
    if isinstance(src, str):
        src = ModelSource(src)
    species_index: dict[str, int] = {}
    species_names: list[str] = []
    raw: list[tuple[dict, dict, float, int, int]] = []  # source, target, rate, line, col

    for lineno, line in enumerate(src.text.splitlines(), start=1):
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        p = _LineParser(tokens, lineno, species_index, species_names)
        start_col = tokens[0][2]
        lhs = p.side()
        kind, arrow, col = p.take("arrow")
        rhs = p.side()
        p.take("at")
        fwd = p.rate()
        bwd = None
        tok = p.peek()
        if tok is not None and tok[0] == "comma":
            p.take()
            bwd = p.rate()
        if p.peek() is not None:
            k, text, col = p.peek()
            raise ParseError(lineno, col, f"unexpected token {text!r} after reaction", text)
        if arrow == "<->" and bwd is None:
            raise ParseError(lineno, col, "missing backward rate for '<->'", arrow)
        if arrow == "->" and bwd is not None:
            raise ParseError(lineno, col, "second rate given for one-way '->'", arrow)
        raw.append((lhs, rhs, fwd, lineno, start_col))
        if arrow == "<->":
            raw.append((rhs, lhs, bwd, lineno, start_col))

    n = len(species_names)

    def to_complex(counts: dict[int, int]) -> Complex:
        return Complex(tuple(counts.get(i, 0) for i in range(n)))

    reactions = []
    seen: dict[tuple[Complex, Complex], int] = {}
    for lhs, rhs, rate, lineno, col in raw:
        source, target = to_complex(lhs), to_complex(rhs)
        if source == target:
            raise ParseError(lineno, col, "self-loop reaction (source equals target)")
        key = (source, target)
        if key in seen:
            raise ParseError(
                lineno, col, f"duplicate reaction (already declared on line {seen[key]})"
            )
        seen[key] = lineno
        reactions.append(Reaction(source, target, rate))

    return ReactionNetwork(tuple(species_names), tuple(reactions))


def _fmt_rate(value: float) -> str:
    return repr(float(value))


def _fmt_side(counts, names) -> str:
    terms = []
    for i, c in enumerate(counts):
        if c == 0:
            continue
        terms.append(names[i] if c == 1 else f"{c} {names[i]}")
    return " + ".join(terms) if terms else "0"


def render_network(net: ReactionNetwork) -> str:
    """Canonical text that round-trips: parse(render(net)) equals net.

    One ``->`` line per reaction, coefficient 1 omitted, empty complex as 0.
    """
    names = net.species_names
    lines = [
        f"{_fmt_side(r.source.counts, names)} -> {_fmt_side(r.target.counts, names)}"
        f" @ {_fmt_rate(r.rate_constant)}"
        for r in net.reactions
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def load_network(path) -> ReactionNetwork:
    """Read and parse a ``.crn`` file (UTF-8)."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(ModelSource(fh.read(), str(path)))
