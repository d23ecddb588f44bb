"""A small language for fuzzy rule groups.

::

    # comments run to end of line
    GROUP breakout {
      GUARD x2 > 0 OR x3 < 0;
      WIDTH 0.01;
      IF x2 IS PS THEN ed IS BS;
      IF x5 IS PS AND x8 IS P THEN ed IS BM;
    }

Conjunctions multiply memberships; a block is compiled to a center-average
fuzzy system.  ``GUARD`` clauses combine with the usual precedence (``AND``
binds tighter than ``OR``).  Keywords are case-sensitive.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional, Union

from .errors import FuzzMarketError
from .fuzzy import AGGREGATES, CENTERS, TERMS, TermFamily, fired
from .indicators import FEATURES, FeatureVector
from .rulegroups import INACTIVE, ExcessDemand

KEYWORDS = {"GROUP", "GUARD", "WIDTH", "IF", "AND", "OR", "THEN", "IS"}
ACTIONS = tuple(CENTERS)
DEFAULT_WIDTH = 0.01


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class RuleSyntaxError(FuzzMarketError):
    def __init__(self, diagnostics: list[ParseDiagnostic], path: Optional[str] = None):
        self.diagnostics = diagnostics
        self.path = path
        prefix = f"{path}:" if path else ""
        super().__init__("\n".join(prefix + str(d) for d in diagnostics))


@dataclass(frozen=True)
class Predicate:
    feature: str
    op: str
    value: float

    def holds(self, x: Optional[float]) -> bool:
        if x is None:
            return False
        return x < self.value if self.op == "<" else x > self.value


# A guard is a disjunction of conjunctions of predicates.
Guard = tuple[tuple[Predicate, ...], ...]


@dataclass(frozen=True)
class Rule:
    antecedents: tuple[tuple[str, str], ...]
    action: str


@dataclass(frozen=True)
class RuleBlock:
    name: str
    rules: tuple[Rule, ...]
    guard: Optional[Guard] = None
    width: Optional[float] = None

    @property
    def features(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for rule in self.rules:
            for feat, _ in rule.antecedents:
                seen.setdefault(feat)
        return tuple(seen)


@dataclass
class Token:
    kind: str  # ident, number, punct, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{};<>])
    """,
    re.VERBOSE,
)


def tokenize(source: str, diags: list[ParseDiagnostic]) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            diags.append(ParseDiagnostic(line, col, f"unexpected character {source[pos]!r}"))
            pos += 1
            continue
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("number", "ident", "punct"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Abort(Exception):
    pass


class _Parser:
    def __init__(self, tokens: list[Token], diags: list[ParseDiagnostic]):
        self.toks = tokens
        self.i = 0
        self.diags = diags

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> None:
        tok = tok or self.tok
        self.diags.append(ParseDiagnostic(tok.line, tok.col, message))

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("ident", "punct") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
            raise _Abort
        return self.advance()

    def ident(self, what: str) -> Token:
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            found = self.tok.text or "end of input"
            self.error(f"expected {what}, found {found!r}")
            raise _Abort
        return self.advance()

    def number(self) -> float:
        tok = self.tok
        if tok.kind != "number":
            self.error(f"expected a number, found {tok.text or 'end of input'!r}")
            raise _Abort
        self.advance()
        value = float(tok.text)
        if not math.isfinite(value):
            self.error(f"number {tok.text} is not finite", tok)
        return value

    def sync(self) -> None:
        # Skip to just past the next ';' (or stop at '}' / eof).
        while self.tok.kind != "eof" and not self.at("}"):
            if self.advance().text == ";":
                return

    def feature(self) -> str:
        tok = self.ident("a feature name")
        if tok.text not in FEATURES:
            self.error(f"unknown feature {tok.text}", tok)
        return tok.text

    def block(self) -> Optional[RuleBlock]:
        try:
            self.expect("GROUP")
            name = self.ident("a group name").text
            self.expect("{")
        except _Abort:
            return None
        guard = None
        width = None
        rules: list[Rule] = []
        while not self.at("}") and self.tok.kind != "eof":
            try:
                if self.at("GUARD"):
                    if guard is not None or rules:
                        self.error("GUARD must appear once, before the rules")
                    self.advance()
                    guard = self.guard()
                    self.expect(";")
                elif self.at("WIDTH"):
                    if width is not None or rules:
                        self.error("WIDTH must appear once, before the rules")
                    tok = self.advance()
                    width = self.number()
                    if not width > 0:
                        self.error("WIDTH must be positive", tok)
                    self.expect(";")
                else:
                    rules.append(self.rule())
            except _Abort:
                self.sync()
        close = self.tok
        try:
            self.expect("}")
        except _Abort:
            return None
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r} after end of group")
        if not rules:
            self.error(f"group {name} has no rules", close)
        return RuleBlock(name, tuple(rules), guard, width)

    def guard(self) -> Guard:
        terms = [[self.predicate()]]
        while self.at("AND") or self.at("OR"):
            op = self.advance().text
            pred = self.predicate()
            if op == "AND":
                terms[-1].append(pred)
            else:
                terms.append([pred])
        return tuple(tuple(t) for t in terms)

    def predicate(self) -> Predicate:
        feat = self.feature()
        if not (self.at("<") or self.at(">")):
            self.error(f"expected '<' or '>', found {self.tok.text or 'end of input'!r}")
            raise _Abort
        op = self.advance().text
        return Predicate(feat, op, self.number())

    def rule(self) -> Rule:
        self.expect("IF")
        conds = [self.cond()]
        while self.at("AND"):
            self.advance()
            conds.append(self.cond())
        self.expect("THEN")
        self.expect("ed")
        self.expect("IS")
        tok = self.ident("an action")
        if tok.text not in ACTIONS:
            self.error(f"unknown action {tok.text}", tok)
        self.expect(";")
        return Rule(tuple(conds), tok.text)

    def cond(self) -> tuple[str, str]:
        feat = self.feature()
        self.expect("IS")
        tok = self.ident("a term")
        if tok.text not in TERMS and tok.text not in AGGREGATES:
            self.error(f"unknown term {tok.text}", tok)
        return feat, tok.text


def check_rule_source(source: Union[str, bytes]) -> tuple[Optional[RuleBlock], list[ParseDiagnostic]]:
    """Parse without raising; returns ``(block or None, diagnostics)``."""
    diags: list[ParseDiagnostic] = []
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, [ParseDiagnostic(1, 1, f"source is not valid UTF-8: {exc.reason} at byte {exc.start}")]
    tokens = tokenize(source, diags)
    block = _Parser(tokens, diags).block()
    if diags:
        return None, diags
    return block, diags


def parse_rule_block(source: Union[str, bytes], path: Optional[str] = None) -> RuleBlock:
    block, diags = check_rule_source(source)
    if diags:
        raise RuleSyntaxError(diags, path)
    return block


def load_rule_file(path) -> RuleBlock:
    with open(path, "rb") as fh:
        return parse_rule_block(fh.read(), str(path))


def _num(x: float) -> str:
    return repr(float(x))


def format_rule_block(block: RuleBlock) -> str:
    lines = [f"GROUP {block.name} {{"]
    if block.guard is not None:
        disj = " OR ".join(" AND ".join(f"{p.feature} {p.op} {_num(p.value)}" for p in conj) for conj in block.guard)
        lines.append(f"  GUARD {disj};")
    if block.width is not None:
        lines.append(f"  WIDTH {_num(block.width)};")
    for rule in block.rules:
        conds = " AND ".join(f"{f} IS {t}" for f, t in rule.antecedents)
        lines.append(f"  IF {conds} THEN ed IS {rule.action};")
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass
class CompiledBlock:
    """Excess-demand function compiled from a :class:`RuleBlock`."""

    block: RuleBlock
    family: TermFamily
    centers: Mapping[str, float] = field(default_factory=lambda: dict(CENTERS))

    @property
    def features(self) -> tuple[str, ...]:
        return self.block.features

    def __call__(self, features: Union[FeatureVector, Mapping[str, Optional[float]]]) -> ExcessDemand:
        values = {name: features.get(name) for name in self.features}
        if all(v is None for v in values.values()):
            return INACTIVE
        guard = self.block.guard
        if guard is not None and not any(all(p.holds(features.get(p.feature)) for p in conj) for conj in guard):
            return INACTIVE
        firings = []
        for rule in self.block.rules:
            degree = 1.0
            for feat, term in rule.antecedents:
                x = values[feat]
                degree *= 0.0 if x is None else self.family.membership(term, x)
            firings.append((degree, self.centers[rule.action]))
        value, active = fired(firings)
        return ExcessDemand(value, True) if active else INACTIVE


def compile_rule_block(
    block: RuleBlock, family: Optional[TermFamily] = None, centers: Mapping[str, float] = CENTERS
) -> CompiledBlock:
    """Bind a block to a term family; the block's own WIDTH wins if set."""
    if block.width is not None:
        family = TermFamily(block.width)
    elif family is None:
        family = TermFamily(DEFAULT_WIDTH)
    return CompiledBlock(block, family, dict(centers))


def standard_block(name: str) -> RuleBlock:
    """One of the bundled rule files (``ed1`` .. ``ed12``, ``ed8_push``)."""
    resource = resources.files(__package__).joinpath("rules", f"{name}.frg")
    if not resource.is_file():
        raise KeyError(f"no bundled rule group {name!r}")
    return parse_rule_block(resource.read_bytes(), f"rules/{name}.frg")


class PhasedBlocks:
    """Dispatch to a different compiled block per manipulator phase."""

    def __init__(self, by_phase: Mapping[int, CompiledBlock]):
        self.by_phase = dict(by_phase)

    def __call__(self, features, phase: Optional[int]) -> ExcessDemand:
        block = self.by_phase.get(phase)
        return INACTIVE if block is None else block(features)


def compile_manipulator(family: Optional[TermFamily] = None) -> PhasedBlocks:
    """Pump-and-dump group built from the bundled big-buyer/push/big-seller files."""
    return PhasedBlocks(
        {
            1: compile_rule_block(standard_block("ed7"), family),
            2: compile_rule_block(standard_block("ed8_push"), family),
            3: compile_rule_block(standard_block("ed6"), family),
        }
    )
