"""Propositional rules in a small ASP subset.

Supported text: ``head :- lit, lit.`` and facts ``head.``, where a literal is
``atom`` or ``not atom``, plus ``%`` comments. Programs must be acyclic, so
negation-as-failure is evaluated stratum by stratum with no search; because
inputs are total assignments this coincides with classical negation.

Two comment lines are meaningful: ``% inputs: a b`` and ``% targets: p q``
declare atoms that no rule mentions, so atom sets survive a round trip.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

ATOM_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")


class AspSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class RuleSetError(ValueError):
    """Structurally invalid program (cycle, bad atom, unknown input)."""


@dataclass(frozen=True, order=True)
class Literal:
    atom: str
    negated: bool = False

    def __post_init__(self):
        if not ATOM_RE.match(self.atom) or self.atom == "not":
            raise RuleSetError(f"invalid atom name {self.atom!r}")

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else self.atom


@dataclass(frozen=True)
class Rule:
    head: str
    body: tuple[Literal, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        Literal(self.head)
        if len(set(self.body)) != len(self.body):
            raise RuleSetError(f"duplicate literal in rule for {self.head}")
        atoms = [lit.atom for lit in self.body]
        if len(set(atoms)) != len(atoms):
            raise RuleSetError(f"atom both positive and negated in rule for {self.head}")

    def sort_key(self):
        return (self.head, [(lit.atom, lit.negated) for lit in self.body])

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class RuleSet:
    """Rules plus the input / auxiliary / target atom partition.

    Atom sets not given are inferred: auxiliaries are heads used in some
    body, targets are the remaining heads, inputs are body atoms that are
    never heads.
    """

    rules: tuple[Rule, ...] = ()
    input_atoms: frozenset = frozenset()
    aux_atoms: frozenset = frozenset()
    target_atoms: frozenset = frozenset()

    def __post_init__(self):
        unique = {r: None for r in self.rules}
        rules = tuple(sorted(unique, key=Rule.sort_key))
        heads = {r.head for r in rules}
        used = {lit.atom for r in rules for lit in r.body}
        aux = (used & heads) | set(self.aux_atoms)
        targets = (heads - aux) | set(self.target_atoms)
        inputs = (used - heads) | set(self.input_atoms)
        if targets & aux or inputs & heads or targets & inputs:
            raise RuleSetError("atom classified in more than one role")
        if used & targets:
            raise RuleSetError(f"target atoms used in rule bodies: {sorted(used & targets)}")
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "input_atoms", frozenset(inputs))
        object.__setattr__(self, "aux_atoms", frozenset(aux))
        object.__setattr__(self, "target_atoms", frozenset(targets))
        object.__setattr__(self, "_order", _topological_heads(rules))

    def __len__(self) -> int:
        return len(self.rules)

    def rules_for(self, head: str) -> list[Rule]:
        return [r for r in self.rules if r.head == head]

    def _declared_extras(self) -> tuple[set, set]:
        heads = {r.head for r in self.rules}
        used = {lit.atom for r in self.rules for lit in r.body}
        return set(self.input_atoms) - used, set(self.target_atoms) - heads


def _topological_heads(rules: Sequence[Rule]) -> list[str]:
    deps: dict[str, set] = {}
    for r in rules:
        deps.setdefault(r.head, set()).update(lit.atom for lit in r.body)
    order, state = [], {}

    def visit(atom, stack):
        if state.get(atom) == 2:
            return
        if state.get(atom) == 1:
            raise RuleSetError(f"program is not stratified: cycle through {' -> '.join(stack + [atom])}")
        state[atom] = 1
        for d in sorted(deps.get(atom, ())):
            if d in deps:
                visit(d, stack + [atom])
        state[atom] = 2
        order.append(atom)

    for head in sorted(deps):
        visit(head, [])
    return order


def evaluate(rules: RuleSet, assignment: Mapping[str, bool]) -> frozenset:
    """True target atoms under a total assignment of the input atoms."""
    missing = sorted(a for a in rules.input_atoms if a not in assignment)
    if missing:
        raise RuleSetError(f"assignment missing input atom(s): {', '.join(missing)}")
    truth = {a: bool(assignment[a]) for a in rules.input_atoms}
    for head in rules._order:
        truth[head] = any(
            all(truth[lit.atom] != lit.negated for lit in r.body) for r in rules.rules_for(head)
        )
    return frozenset(a for a in rules.target_atoms if truth.get(a, False))


def evaluate_matrix(
    rules: RuleSet,
    X: np.ndarray,
    attribute_names: Sequence[str],
    target_names: Sequence[str],
) -> np.ndarray:
    """Vectorised ``evaluate`` over rows of a 0/1 attribute matrix.

    Returns a boolean (n, len(target_names)) matrix; targets without rules
    are false everywhere.
    """
    X = np.asarray(X, dtype=bool)
    col = {name: i for i, name in enumerate(attribute_names)}
    unknown = sorted(a for a in rules.input_atoms if a not in col)
    if unknown:
        raise RuleSetError(f"rules reference unknown attribute(s): {', '.join(unknown)}")
    truth = {a: X[:, col[a]] for a in rules.input_atoms}
    n = X.shape[0]
    for head in rules._order:
        acc = np.zeros(n, dtype=bool)
        for r in rules.rules_for(head):
            term = np.ones(n, dtype=bool)
            for lit in r.body:
                term &= ~truth[lit.atom] if lit.negated else truth[lit.atom]
            acc |= term
        truth[head] = acc
    out = np.zeros((n, len(target_names)), dtype=bool)
    for j, name in enumerate(target_names):
        if name in truth and name not in rules.input_atoms:
            out[:, j] = truth[name]
    return out


def emit_asp(rules: RuleSet) -> str:
    lines = []
    extra_inputs, extra_targets = rules._declared_extras()
    if extra_inputs:
        lines.append("% inputs: " + " ".join(sorted(rules.input_atoms)))
    if extra_targets:
        lines.append("% targets: " + " ".join(sorted(rules.target_atoms)))
    lines += [str(r) for r in rules.rules]
    return "".join(line + "\n" for line in lines)


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<comment>%[^\n]*)|(?P<neck>:-)|(?P<comma>,)|(?P<dot>\.)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<bad>.)"
)


def _tokens(text: str):
    """Yield (kind, value, line, col); ends with an 'eof' token."""
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind == "ws":
            for nl in re.finditer("\n", m.group()):
                line += 1
                line_start = m.start() + nl.end()
            continue
        if kind == "bad":
            raise AspSyntaxError(f"unexpected character {m.group()!r}", line, m.start() - line_start + 1)
        yield kind, m.group(), line, m.start() - line_start + 1
    yield "eof", "", line, len(text) - line_start + 1


def parse_asp(text: str, targets: Optional[Iterable[str]] = None) -> RuleSet:
    rules = []
    declared_inputs, declared_targets = set(), set(targets or ())
    toks = _tokens(text)
    tok = next(toks)

    def expect_name(t):
        kind, val, ln, col = t
        if kind != "name":
            raise AspSyntaxError(f"expected an atom, found {val or 'end of input'!r}", ln, col)
        if not ATOM_RE.match(val):
            raise AspSyntaxError(f"invalid atom name {val!r}", ln, col)
        return val

    while tok[0] != "eof":
        kind, val, ln, col = tok
        if kind == "comment":
            m = re.match(r"%\s*(inputs|targets):(.*)", val)
            if m:
                names = m.group(2).split()
                (declared_inputs if m.group(1) == "inputs" else declared_targets).update(names)
            tok = next(toks)
            continue
        if kind == "name" and val == "not":
            raise AspSyntaxError("rule head cannot be negated", ln, col)
        head = expect_name(tok)
        tok = next(toks)
        body = []
        if tok[0] == "neck":
            while True:
                tok = next(toks)
                negated = tok[0] == "name" and tok[1] == "not"
                if negated:
                    tok = next(toks)
                body.append(Literal(expect_name(tok), negated))
                tok = next(toks)
                if tok[0] == "comma":
                    continue
                break
        if tok[0] != "dot":
            _, v, l2, c2 = tok
            raise AspSyntaxError(f"expected '.' to end the rule for {head}, found {v or 'end of input'!r}", l2, c2)
        try:
            rules.append(Rule(head, tuple(body)))
        except RuleSetError as exc:
            raise AspSyntaxError(str(exc), ln, col) from None
        tok = next(toks)

    return RuleSet(tuple(rules), input_atoms=frozenset(declared_inputs), target_atoms=frozenset(declared_targets))


def rule_length_stats(rules: RuleSet) -> tuple[float, int]:
    """(mean, max) body length over target rules; an auxiliary reference
    counts as one literal and auxiliary definitions are not included."""
    lengths = [len(r.body) for r in rules.rules if r.head in rules.target_atoms]
    if not lengths:
        raise ValueError("rule length statistics of an empty rule set")
    return sum(lengths) / len(lengths), max(lengths)


def sanitize_atom(name: str) -> str:
    """Lowercase, non-alphanumerics to '_', squeeze repeats, letter first."""
    s = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    if not s or not s[0].isalpha():
        s = "a_" + s
    return s
