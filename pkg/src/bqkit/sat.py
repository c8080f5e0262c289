"""CNF machinery: program completion, a small DPLL solver, DIMACS export.

The completion builds, for every atom, a biconditional between the atom and
the disjunction of its rule bodies.  Bodies with two or more literals get a
definitional variable equivalent to their conjunction, so every variable of
the CNF is functionally determined by the program-atom variables and model
projections are one to one.  On programs whose positive dependency graph is
acyclic the completion's models are exactly the answer sets; cyclic programs
additionally need the loop clauses supplied by the solver layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .program import GroundAtom, NormalProgram


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list[tuple[int, ...]] = field(default_factory=list)
    atom_vars: dict[GroundAtom, int] = field(default_factory=dict)
    names: dict[int, str] = field(default_factory=dict)
    # Per program rule: a literal equivalent to the rule body (None = empty body).
    body_reps: list[int | None] = field(default_factory=list)

    def add_clause(self, literals) -> None:
        seen: dict[int, None] = {}
        for lit in literals:
            if -lit in seen:
                return  # tautology
            seen[lit] = None
        self.clauses.append(tuple(seen))


def clark_completion(program: NormalProgram) -> CnfFormula:
    """Completion CNF with definitional body variables; constraints become plain clauses."""
    index = program.index()
    cnf = CnfFormula(num_vars=index.num_atoms)
    for atom, var in index.atom_ids.items():
        cnf.atom_vars[atom] = var
        cnf.names[var] = str(atom)

    def fresh(name: str) -> int:
        cnf.num_vars += 1
        cnf.names[cnf.num_vars] = name
        return cnf.num_vars

    body_literals: list[tuple[int, ...]] = []
    for _head, positive, negative in index.rules:
        body_literals.append(tuple(positive) + tuple(-b for b in negative))

    for ri, (head, _positive, _negative) in enumerate(index.rules):
        lits = body_literals[ri]
        if head is None or len(lits) == 0:
            cnf.body_reps.append(None)
        elif len(lits) == 1:
            cnf.body_reps.append(lits[0])
        else:
            aux = fresh(f"_body{ri}")
            cnf.body_reps.append(aux)
            for lit in lits:
                cnf.add_clause((-aux, lit))
            cnf.add_clause((aux,) + tuple(-lit for lit in lits))

    for head, rule_ids in sorted(index.head_rules.items()):
        reps = [cnf.body_reps[ri] for ri in rule_ids]
        if any(rep is None for rep in reps):
            cnf.add_clause((head,))
            continue
        cnf.add_clause((-head,) + tuple(reps))
        for rep in reps:
            cnf.add_clause((head, -rep))
    defined = set(index.head_rules)
    for _atom, var in sorted(index.atom_ids.items(), key=lambda kv: kv[1]):
        if var not in defined:
            cnf.add_clause((-var,))

    for ri, (head, _positive, _negative) in enumerate(index.rules):
        if head is None:
            cnf.add_clause(tuple(-lit for lit in body_literals[ri]))
    return cnf


def emit_dimacs(cnf: CnfFormula) -> str:
    """Standard DIMACS CNF with `c map <var> <name>` comments; byte-stable."""
    lines = [f"c map {var} {cnf.names.get(var, f'x{var}')}" for var in range(1, cnf.num_vars + 1)]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    for clause in cnf.clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"


class SatSolver:
    """Iterative DPLL with two watched literals and a fixed branching order.

    Branches on the lowest-index unassigned variable, false first; models are
    therefore produced in a reproducible order.  Clauses may be added between
    solve() calls; every call restarts from the root assignment.
    """

    def __init__(self, num_vars: int, clauses) -> None:
        self.num_vars = num_vars
        self.clauses: list[list[int]] = []
        self.watch_of: dict[int, list[int]] = {}
        self.units: list[int] = []
        self.has_empty = False
        self.assign = [0] * (num_vars + 1)
        self.trail: list[int] = []
        for clause in clauses:
            self.add_clause(clause)

    def add_clause(self, clause) -> None:
        clause = list(clause)
        if not clause:
            self.has_empty = True
            return
        if len(clause) == 1:
            self.units.append(clause[0])
            return
        ci = len(self.clauses)
        self.clauses.append(clause)
        self.watch_of.setdefault(clause[0], []).append(ci)
        self.watch_of.setdefault(clause[1], []).append(ci)

    def _value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        return v if lit > 0 else -v

    def _enqueue(self, lit: int, queue: list[int]) -> bool:
        v = self._value(lit)
        if v == 1:
            return True
        if v == -1:
            return False
        self.assign[abs(lit)] = 1 if lit > 0 else -1
        self.trail.append(lit)
        queue.append(lit)
        return True

    def _propagate(self, queue: list[int]) -> bool:
        clauses = self.clauses
        watch_of = self.watch_of
        while queue:
            assigned = queue.pop()
            false_lit = -assigned
            watchlist = watch_of.get(false_lit)
            if not watchlist:
                continue
            kept: list[int] = []
            conflict = False
            for pos, ci in enumerate(watchlist):
                clause = clauses[ci]
                if clause[0] == false_lit:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self._value(first) == 1:
                    kept.append(ci)
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self._value(clause[k]) != -1:
                        clause[1], clause[k] = clause[k], clause[1]
                        watch_of.setdefault(clause[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(ci)
                if not self._enqueue(first, queue):
                    kept.extend(watchlist[pos + 1 :])
                    conflict = True
                    break
            watch_of[false_lit] = kept
            if conflict:
                return False
        return True

    def solve(self) -> list[int] | None:
        """Return an assignment (index = variable, value +1/-1) or None."""
        if self.has_empty:
            return None
        self.assign = [0] * (self.num_vars + 1)
        self.trail = []
        queue: list[int] = []
        for unit in self.units:
            if not self._enqueue(unit, queue):
                return None
        if not self._propagate(queue):
            return None

        decisions: list[tuple[int, int]] = []  # (trail length before the decision, decided literal)
        while True:
            var = 0
            for cand in range(1, self.num_vars + 1):
                if self.assign[cand] == 0:
                    var = cand
                    break
            if var == 0:
                return list(self.assign)
            queue = []
            decisions.append((len(self.trail), -var))
            self._enqueue(-var, queue)
            while not self._propagate(queue):
                queue = []
                flipped = False
                while decisions:
                    mark, lit = decisions.pop()
                    while len(self.trail) > mark:
                        self.assign[abs(self.trail.pop())] = 0
                    if lit < 0:  # the false branch failed; take the true branch as forced
                        decisions.append((mark, -lit))
                        self._enqueue(-lit, queue)
                        flipped = True
                        break
                if not flipped:
                    return None


def sat_solve(cnf: CnfFormula) -> Iterator[frozenset[int]]:
    """Stream every model (as the set of true variables) via blocking clauses."""
    solver = SatSolver(cnf.num_vars, cnf.clauses)
    while True:
        model = solver.solve()
        if model is None:
            return
        trues = frozenset(v for v in range(1, cnf.num_vars + 1) if model[v] > 0)
        yield trues
        blocking = tuple(-v if v in trues else v for v in range(1, cnf.num_vars + 1))
        if not blocking:
            return
        solver.add_clause(blocking)
