"""Line-oriented problem file format.

    # comment
    var <name> <value> <value> ...
    constraint tuples <var> <var> ...
      row <value> <value> ...
    end
    constraint interval-tuples <var> ...
      row <lo:hi | value> ...
    end
    constraint mdd-ref <path> <var> ...
    constraint alldifferent <var> ...
    option <key> <value>

Keywords are lower case; values are integers.  Constraint blocks of the
row-carrying kinds run until `end`.  Parse problems raise ParseError
with the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ParseError(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


KINDS = ("tuples", "interval-tuples", "mdd-ref", "alldifferent")


@dataclass
class ConstraintSpec:
    kind: str
    scope: tuple            # variable names
    rows: list = field(default_factory=list)
    path: str | None = None
    line: int = 0


@dataclass
class ProblemSpec:
    variables: list         # (name, [values]) in declaration order
    constraints: list       # ConstraintSpec
    options: dict

    @property
    def names(self):
        return [name for name, _ in self.variables]

    def var_index(self, name: str) -> int:
        for k, (n, _) in enumerate(self.variables):
            if n == name:
                return k + 1
        raise KeyError(name)

    def domain_of(self, name: str) -> list:
        for n, vals in self.variables:
            if n == name:
                return vals
        raise KeyError(name)


def _int(tok: str, ln: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(ln, f"{what} must be an integer, got {tok!r}") from None


def parse_problem_text(text: str) -> ProblemSpec:
    variables: list = []
    names: set = set()
    constraints: list = []
    options: dict = {}
    open_block: ConstraintSpec | None = None

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]

        if open_block is not None:
            if head == "row":
                open_block.rows.append((ln, toks[1:]))
                continue
            if head == "end":
                if not open_block.rows:
                    raise ParseError(ln, f"constraint {open_block.kind} has no rows")
                open_block = None
                continue
            raise ParseError(ln, f"expected row/end inside constraint block, got {head!r}")

        if head == "var":
            if len(toks) < 3:
                raise ParseError(ln, "var needs a name and at least one value")
            name = toks[1]
            if name in names:
                raise ParseError(ln, f"duplicate variable {name!r}")
            vals = [_int(t, ln, "domain value") for t in toks[2:]]
            if len(set(vals)) != len(vals):
                raise ParseError(ln, f"duplicate domain value for {name!r}")
            names.add(name)
            variables.append((name, vals))
        elif head == "constraint":
            if len(toks) < 2:
                raise ParseError(ln, "constraint needs a kind")
            kind = toks[1]
            if kind not in KINDS:
                raise ParseError(ln, f"unknown constraint kind {kind!r}")
            if kind == "mdd-ref":
                if len(toks) < 4:
                    raise ParseError(ln, "mdd-ref needs a path and a scope")
                path, scope = toks[2], toks[3:]
            else:
                path, scope = None, toks[2:]
            if not scope:
                raise ParseError(ln, "constraint needs a scope")
            for s in scope:
                if s not in names:
                    raise ParseError(ln, f"unknown variable {s!r} in scope")
            if len(set(scope)) != len(scope):
                raise ParseError(ln, "scope variables must be distinct")
            spec = ConstraintSpec(kind, tuple(scope), path=path, line=ln)
            constraints.append(spec)
            if kind in ("tuples", "interval-tuples"):
                open_block = spec
        elif head == "option":
            if len(toks) != 3:
                raise ParseError(ln, "option needs a key and a value")
            options[toks[1]] = toks[2]
        else:
            raise ParseError(ln, f"unknown directive {head!r}")

    if open_block is not None:
        raise ParseError(open_block.line, f"constraint {open_block.kind} not closed with 'end'")
    if not variables:
        raise ParseError(0, "no variables declared")

    spec = ProblemSpec(variables, constraints, options)
    _check_rows(spec)
    return spec


def _check_rows(spec: ProblemSpec):
    for cons in spec.constraints:
        arity = len(cons.scope)
        domains = [set(spec.domain_of(name)) for name in cons.scope]
        checked = []
        for ln, toks in cons.rows:
            if len(toks) != arity:
                raise ParseError(ln, f"row arity {len(toks)} does not match scope {arity}")
            if cons.kind == "tuples":
                row = []
                for k, t in enumerate(toks):
                    v = _int(t, ln, "row value")
                    if v not in domains[k]:
                        raise ParseError(
                            ln, f"value {v} outside domain of {cons.scope[k]!r}")
                    row.append(v)
                checked.append(tuple(row))
            else:
                row = []
                for k, t in enumerate(toks):
                    if ":" in t:
                        lo_s, hi_s = t.split(":", 1)
                        lo = _int(lo_s, ln, "interval bound")
                        hi = _int(hi_s, ln, "interval bound")
                    else:
                        lo = hi = _int(t, ln, "interval value")
                    if lo > hi:
                        raise ParseError(ln, f"empty interval {lo}:{hi}")
                    row.append((lo, hi))
                checked.append(tuple(row))
        cons.rows = checked
