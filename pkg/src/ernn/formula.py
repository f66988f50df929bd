"""Conjunctive constraint formulas over real variables.

A formula is a conjunction of constraints of exactly two shapes,
    add X Y Z   meaning  X + Y = Z
    inv X Y     meaning  X * Y = 1
with every variable promised to take a value in [1/2, 2]. This tiny language
is the source side of the reduction; the text format is one constraint per
line with '#' comments.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .geometry import Rational

VALUE_MIN = Fraction(1, 2)
VALUE_MAX = Fraction(2)


class FormulaError(ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class MissingVariable(FormulaError):
    pass


class NotFoundAtScale(FormulaError):
    """grid_solve exhausted the denominator-bounded grid without a solution."""

    def __init__(self, denom_bound: int) -> None:
        super().__init__(
            f"no satisfying assignment with denominators up to {denom_bound}"
        )
        self.denom_bound = denom_bound


# ---------------------------------------------------------------------------
# Formula core
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Add:
    """X + Y = Z."""

    x: str
    y: str
    z: str

    def variables(self) -> Tuple[str, ...]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Inv:
    """X * Y = 1."""

    x: str
    y: str

    def variables(self) -> Tuple[str, ...]:
        return (self.x, self.y)


Constraint = Union[Add, Inv]


@dataclass(frozen=True)
class EtrInvFormula:
    variables: Tuple[str, ...]
    constraints: Tuple[Constraint, ...]

    def __post_init__(self) -> None:
        seen = set()
        for v in self.variables:
            if v in seen:
                raise FormulaError(f"duplicate variable {v!r}")
            seen.add(v)
        for c in self.constraints:
            for v in c.variables():
                if v not in seen:
                    raise FormulaError(f"constraint mentions undeclared variable {v!r}")

    @property
    def additions(self) -> Tuple[Add, ...]:
        return tuple(c for c in self.constraints if isinstance(c, Add))

    @property
    def inversions(self) -> Tuple[Inv, ...]:
        return tuple(c for c in self.constraints if isinstance(c, Inv))


Assignment = Mapping[str, Rational]


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_NAME_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_NAME_REST = _NAME_START | set("0123456789")


def _is_name(token: str) -> bool:
    return bool(token) and token[0] in _NAME_START and all(ch in _NAME_REST for ch in token)


def parse_formula(text: str) -> EtrInvFormula:
    """Parse the one-constraint-per-line format.

    Variables are declared implicitly, ordered by first mention. Errors
    carry 1-based line and column positions.
    """
    variables: List[str] = []
    order: Dict[str, int] = {}
    constraints: List[Constraint] = []

    def mention(name: str, lineno: int, col: int) -> str:
        if not _is_name(name):
            raise FormulaSyntaxError(f"bad variable name {name!r}", lineno, col)
        if name not in order:
            order[name] = len(variables)
            variables.append(name)
        return name

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        # Tokenize, remembering each token's starting column (1-based).
        tokens: List[Tuple[str, int]] = []
        i = 0
        while i < len(line):
            if line[i].isspace():
                i += 1
                continue
            start = i
            while i < len(line) and not line[i].isspace():
                i += 1
            tokens.append((line[start:i], start + 1))

        head, head_col = tokens[0]
        args = tokens[1:]
        if head == "add":
            if len(args) != 3:
                raise FormulaSyntaxError(
                    f"add takes 3 variables, got {len(args)}", lineno, head_col
                )
            x, y, z = (mention(t, lineno, c) for t, c in args)
            constraints.append(Add(x, y, z))
        elif head == "inv":
            if len(args) != 2:
                raise FormulaSyntaxError(
                    f"inv takes 2 variables, got {len(args)}", lineno, head_col
                )
            x, y = (mention(t, lineno, c) for t, c in args)
            constraints.append(Inv(x, y))
        else:
            raise FormulaSyntaxError(
                f"unknown constraint {head!r} (expected 'add' or 'inv')",
                lineno,
                head_col,
            )

    return EtrInvFormula(tuple(variables), tuple(constraints))


def format_formula(formula: EtrInvFormula) -> str:
    lines = []
    for c in formula.constraints:
        if isinstance(c, Add):
            lines.append(f"add {c.x} {c.y} {c.z}")
        else:
            lines.append(f"inv {c.x} {c.y}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Checking assignments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SatisfactionReport:
    satisfied: bool
    range_violations: Tuple[Tuple[str, Rational], ...]
    residuals: Tuple[Tuple[Constraint, Rational], ...]


def constraint_residual(c: Constraint, values: Assignment) -> Rational:
    """Exactly zero iff the constraint holds under the assignment."""
    if isinstance(c, Add):
        return values[c.x] + values[c.y] - values[c.z]
    return values[c.x] * values[c.y] - 1


def check_assignment(formula: EtrInvFormula, assignment: Assignment) -> SatisfactionReport:
    missing = [v for v in formula.variables if v not in assignment]
    if missing:
        raise MissingVariable(f"assignment lacks {', '.join(missing)}")

    range_violations = tuple(
        (v, assignment[v])
        for v in formula.variables
        if not (VALUE_MIN <= assignment[v] <= VALUE_MAX)
    )
    residuals = []
    for c in formula.constraints:
        r = constraint_residual(c, assignment)
        if r != 0:
            residuals.append((c, r))
    return SatisfactionReport(
        satisfied=not range_violations and not residuals,
        range_violations=range_violations,
        residuals=tuple(residuals),
    )


# ---------------------------------------------------------------------------
# Brute-force grid solver
# ---------------------------------------------------------------------------

def grid_values(denom_bound: int) -> Tuple[Rational, ...]:
    """All reduced fractions in [1/2, 2] with denominator <= denom_bound."""
    values = set()
    for q in range(1, denom_bound + 1):
        lo = -(-q // 2)  # ceil(q/2)
        for p in range(lo, 2 * q + 1):
            values.add(Fraction(p, q))
    return tuple(sorted(values))


def _forced_value(c: Constraint, var: str, partial: Dict[str, Fraction]) -> Optional[Fraction]:
    """Value of var forced by c given partial, or None if c does not pin it.

    Only consulted when var occurs in c; repeated occurrences of var are
    handled algebraically (e.g. add X X Z with Z known forces X = Z/2).
    """
    if isinstance(c, Add):
        known = {v: partial[v] for v in (c.x, c.y, c.z) if v in partial}
        unknown = [v for v in (c.x, c.y, c.z) if v not in partial]
        if any(v != var for v in unknown):
            return None
        if not unknown:
            return None
        # All unknown slots are var itself.
        x = known.get(c.x)
        y = known.get(c.y)
        z = known.get(c.z)
        if c.x == var and c.y == var and c.z == var:
            return Fraction(0)
        if c.z == var:
            if c.x == var or c.y == var:
                # X + Y = X  forces the other operand to be 0... but the
                # unknown here is var on both sides: X known? no: c.x==var
                # and c.z==var with c.y known: X + y = X  ->  y must be 0,
                # var unconstrained. Report no forcing; the full check at
                # the leaf rejects if y != 0.
                return None
            return x + y
        if c.x == var and c.y == var:
            return z / 2
        if c.x == var:
            return z - y
        return z - x
    else:
        if c.x == var and c.y == var:
            return Fraction(1)  # x^2 = 1, and only +1 is in range
        other_name = c.y if c.x == var else c.x
        if other_name in partial and partial[other_name] != 0:
            return 1 / partial[other_name]
        return None


def grid_solve(formula: EtrInvFormula, denom_bound: int) -> Dict[str, Fraction]:
    """Lexicographically first satisfying assignment on the bounded grid.

    Variables are assigned in formula order, candidate values ascending, so
    the first full assignment found is the lexicographic minimum. Constraints
    with a single unassigned variable force that variable's value, which
    prunes without changing the answer.
    """
    values = grid_values(denom_bound)
    variables = formula.variables
    by_var: Dict[str, List[Constraint]] = {v: [] for v in variables}
    for c in formula.constraints:
        for v in set(c.variables()):
            by_var[v].append(c)

    partial: Dict[str, Fraction] = {}

    def candidates(var: str) -> Tuple[Fraction, ...]:
        forced: Optional[Fraction] = None
        for c in by_var[var]:
            unknown = [v for v in c.variables() if v not in partial]
            if unknown and all(v == var for v in unknown):
                f = _forced_value(c, var, partial)
                if f is None:
                    continue
                if forced is not None and f != forced:
                    return ()
                forced = f
        if forced is None:
            return values
        if not (VALUE_MIN <= forced <= VALUE_MAX) or forced.denominator > denom_bound:
            return ()
        return (forced,)

    def consistent_so_far(var: str) -> bool:
        for c in by_var[var]:
            if all(v in partial for v in c.variables()):
                if constraint_residual(c, partial) != 0:
                    return False
        return True

    def search(i: int) -> bool:
        if i == len(variables):
            return True
        var = variables[i]
        for value in candidates(var):
            partial[var] = value
            if consistent_so_far(var) and search(i + 1):
                return True
            del partial[var]
        return False

    if not search(0):
        raise NotFoundAtScale(denom_bound)
    result = {v: partial[v] for v in variables}
    # Belt and braces: the search only ever checks fully assigned
    # constraints, so re-check the lot before handing the result out.
    report = check_assignment(formula, result)
    assert report.satisfied, "grid_solve produced a non-solution"
    return result


# ---------------------------------------------------------------------------
# Assignment files ("X = 3/2" per line)
# ---------------------------------------------------------------------------

def parse_assignment(text: str) -> Dict[str, Fraction]:
    out: Dict[str, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormulaSyntaxError("expected 'name = value'", lineno, 1)
        name, _, value = line.partition("=")
        name = name.strip()
        if not _is_name(name):
            raise FormulaSyntaxError(f"bad variable name {name!r}", lineno, 1)
        try:
            out[name] = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise FormulaSyntaxError(
                f"bad rational {value.strip()!r}", lineno, line.index("=") + 2
            ) from None
    return out


def format_assignment(assignment: Assignment) -> str:
    return "".join(f"{name} = {value}\n" for name, value in assignment.items())
