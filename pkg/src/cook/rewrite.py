"""Source-to-source reification of divergence.

Three rewrite rules replace the constructs that can introduce divergence with
parallel bottom assignments over the l-value representatives they may write:

* a loop the oracle cannot prove terminating becomes a bottom assignment of
  its write set (cause: loop);
* a call that may reach a divergent recursive method becomes a bottom
  assignment of the callees' write sets with formals substituted by actuals,
  plus the call target (cause: recursion);
* a call to a divergent API method becomes a bottom assignment of the
  l-values reachable from its actuals, then one of the call target
  (cause: api).

Bodies are processed bottom-up, so an outer loop is judged on a body whose
divergent inner constructs are already plain assignments; loops proven
terminating and calls to internal or safe-listed methods survive unchanged.
The output is a valid program again (modulo `bottom` statements) and the
rewrite is idempotent.
"""

from __future__ import annotations

from .lang import ast
from .pipeline import ProgramModel
from .representatives import Representative, Scalar


def _sorted_targets(reps, method_id: str) -> tuple[Representative, ...]:
    """Deterministically ordered targets, restricted to what the enclosing
    method can observe: its own frame and the heap. Callee-frame names die
    with their frames under call-by-value and would even collide with the
    caller's own locals on self calls."""
    visible = (
        r for r in reps if not isinstance(r, Scalar) or r.method == method_id
    )
    return tuple(sorted(visible, key=lambda r: (r.__class__.__name__, r.render())))


class _Rewriter:
    def __init__(self, model: ProgramModel):
        self.model = model
        self.aliases = model.aliases
        self.sym = model.symbols

    def method(self, m: ast.Method) -> ast.Method:
        if m.extern:
            return m
        body = self.stmt(m, m.body)
        assert body is not None
        if body is m.body:
            return m
        body = ast.normalize_seqs(body)
        return ast.Method(
            m.name, m.owner, m.formals, m.locals, m.return_type, body, m.extern, loc=m.loc
        )

    def stmt(self, m: ast.Method, s: ast.Stmt | None) -> ast.Stmt | None:
        if s is None:
            return None
        if isinstance(s, ast.Seq):
            first = self.stmt(m, s.first)
            second = self.stmt(m, s.second)
            if first is s.first and second is s.second:
                return s
            return ast.Seq(first, second, loc=s.loc)
        if isinstance(s, ast.IfElse):
            then_body = self.stmt(m, s.then_body)
            else_body = self.stmt(m, s.else_body)
            if then_body is s.then_body and else_body is s.else_body:
                return s
            return ast.IfElse(s.cond, then_body, else_body, loc=s.loc)
        if isinstance(s, ast.While):
            return self.loop(m, s)
        if isinstance(s, ast.Call):
            return self.call(m, s)
        return s

    def loop(self, m: ast.Method, s: ast.While) -> ast.Stmt:
        body = self.stmt(m, s.body)
        if self.model.verdict_for(s).terminates:
            if body is s.body:
                return s
            return ast.While(s.cond, body, loc=s.loc)
        rewritten = ast.While(s.cond, body, loc=s.loc)
        targets = self.aliases.written_reps(m.id, rewritten)
        return ast.BottomAssign(
            _sorted_targets(targets, m.id), ast.DivergenceCause.LOOP, loc=s.loc
        )

    def call(self, m: ast.Method, s: ast.Call) -> ast.Stmt:
        targets = self.sym.resolve_call(m, s)
        extern = next((t for t in targets if t.extern), None)
        if extern is not None:
            if extern.name not in self.model.api_set:
                return s  # safe-listed: assumed non-divergent
            reach: set[Representative] = set()
            for actual in s.actuals:
                reach |= self.aliases.reachable_lvalues(m.id, actual)
            result = ast.BottomAssign(
                (Scalar(m.id, s.target),), ast.DivergenceCause.API, loc=s.loc
            )
            if not reach:
                return result
            smear = ast.BottomAssign(
                _sorted_targets(reach, m.id), ast.DivergenceCause.API, loc=s.loc
            )
            return ast.Seq(smear, result, loc=s.loc)
        if any(t.id in self.model.recursion for t in targets):
            # under call by value the callee can reach only the heap and the
            # result slot: frame-local names (even a written formal, which is
            # the callee's own copy) are unobservable from this frame
            reps: set[Representative] = {Scalar(m.id, s.target)}
            for t in targets:
                for rep in self.aliases.method_writes(t.id):
                    if not isinstance(rep, Scalar):
                        reps.add(rep)
            return ast.BottomAssign(
                _sorted_targets(reps, m.id), ast.DivergenceCause.RECURSION, loc=s.loc
            )
        return s


def rewrite_program(model: ProgramModel) -> ast.Program:
    rw = _Rewriter(model)
    methods = tuple(rw.method(m) for m in model.program.methods)
    return ast.Program(model.program.classes, model.program.interfaces, methods)
