"""The divergence rewrite: rule shapes, idempotence, grammar preservation."""

from cook.aliases import AliasAnalysis
from cook.generator import GenParams, generate_program
from cook.lang import ast, load, parse, pretty
from cook.lang.check import check
from cook.pipeline import ProgramModel
from cook.report import transformed_model
from cook.representatives import ArrayPart, Scalar, TypeField
from cook.rewrite import rewrite_program


def rewrite(src, safe=frozenset()):
    p, sym = load(src)
    model = ProgramModel(p, sym, safe_list=frozenset(safe))
    return model, rewrite_program(model)


def body_stmts(p, mid):
    m = next(m for m in p.methods if m.id == mid)
    return ast.flatten(m.body)


def test_opaque_loop_becomes_bottom_assignment(opaque_loop_caller):
    model, p2 = rewrite(opaque_loop_caller)
    stmts = body_stmts(p2, "bar")
    bottoms = [s for s in stmts if isinstance(s, ast.BottomAssign)]
    assert len(bottoms) == 1
    (b,) = bottoms
    assert b.cause == ast.DivergenceCause.LOOP
    assert b.targets == (Scalar("bar", "y"),)
    assert not any(isinstance(s, ast.While) for s in ast.walk(p2.methods[1].body))


def test_api_call_with_no_actuals_taints_only_target(api_call_unused):
    model, p2 = rewrite(api_call_unused)
    stmts = body_stmts(p2, "bar")
    bottoms = [s for s in stmts if isinstance(s, ast.BottomAssign)]
    assert len(bottoms) == 1
    (b,) = bottoms
    assert b.cause == ast.DivergenceCause.API
    assert b.targets == (Scalar("bar", "r"),)


def test_api_call_with_object_actual_taints_reachable_lvalues():
    src = """
class B { x: int; }
class A { b: B; }
extern method api(o: A): int;
method m(o: A): int {
  var r: int;
  r := api(o);
  return r;
}
"""
    model, p2 = rewrite(src)
    stmts = body_stmts(p2, "m")
    bottoms = [s for s in stmts if isinstance(s, ast.BottomAssign)]
    assert len(bottoms) == 2
    smear, target = bottoms
    assert set(smear.targets) == {TypeField("A", "b"), TypeField("B", "x")}
    assert target.targets == (Scalar("m", "r"),)
    assert {b.cause for b in bottoms} == {ast.DivergenceCause.API}


def test_recursive_call_taints_target_and_heap_effects():
    src = """
class A { f: int; }
method f(o: A, n: int): int {
  var r: int;
  o.f := n;
  n := n;
  r := f(o, n);
  return r;
}
method g(o2: A, k: int): int {
  var x: int;
  x := f(o2, k);
  return x;
}
"""
    model, p2 = rewrite(src)
    stmts = body_stmts(p2, "g")
    bottoms = [s for s in stmts if isinstance(s, ast.BottomAssign)]
    assert len(bottoms) == 1
    (b,) = bottoms
    assert b.cause == ast.DivergenceCause.RECURSION
    targets = set(b.targets)
    # call target and heap effects; frame-local names of the callee (even
    # its written formal, a private copy under call by value) are excluded
    assert targets == {Scalar("g", "x"), TypeField("A", "f")}


def test_divergence_free_program_is_untouched(clean_chain, counted_loop):
    for src in (clean_chain, counted_loop):
        model, p2 = rewrite(src)
        assert p2 == model.program


def test_terminating_loop_survives_with_rewritten_body():
    src = """
extern method api(): int;
method m(n: int): int {
  var i: int; var one: int; var r: int;
  one := 1; i := 0; r := 0;
  while i < n do {
    r := api();
    i := i + one;
  }
  return r;
}
"""
    model, p2 = rewrite(src)
    stmts = body_stmts(p2, "m")
    loops = [s for s in stmts if isinstance(s, ast.While)]
    assert len(loops) == 1
    inner = ast.flatten(loops[0].body)
    assert any(isinstance(s, ast.BottomAssign) for s in inner)


def test_rewrite_is_idempotent_on_generated_programs():
    for seed in range(25):
        p = generate_program(
            seed,
            GenParams(
                methods=5, loop=0.25, opaque_loop=0.1, recursion=0.08, extern=0.12
            ),
        )
        model = ProgramModel(p)
        p2 = rewrite_program(model)
        sym2 = check(p2, allow_bottom=True)
        al2 = AliasAnalysis(p2, sym2, partitions_from=model.aliases)
        model2 = ProgramModel(
            p2, sym2, safe_list=model.safe_list, aliases=al2, allow_bottom=True
        )
        p3 = rewrite_program(model2)
        assert p3 == p2, seed


def test_rewritten_output_reparses():
    for seed in range(15):
        p = generate_program(
            seed,
            GenParams(
                methods=5, loop=0.25, opaque_loop=0.1, recursion=0.08, extern=0.12
            ),
        )
        model = ProgramModel(p)
        p2 = rewrite_program(model)
        assert parse(pretty(p2), allow_bottom=True) == p2, seed


def test_no_divergent_constructs_survive():
    for seed in range(15):
        p = generate_program(
            seed,
            GenParams(
                methods=5, loop=0.2, opaque_loop=0.15, recursion=0.1, extern=0.15
            ),
        )
        model = ProgramModel(p)
        p2 = rewrite_program(model)
        sym2 = check(p2, allow_bottom=True)
        tmodel = transformed_model(model)
        for mm in tmodel.methods.values():
            for lm in mm.loops:
                assert lm.verdict.terminates, (seed, mm.method.id)
        for m in p2.methods:
            if m.extern:
                continue
            for s in ast.walk(m.body):
                if isinstance(s, ast.Call):
                    for t in sym2.resolve_call(m, s):
                        assert t.id not in model.recursion, (seed, m.id)
                        assert not (t.extern and t.name in model.api_set), (seed, m.id)


def test_cause_tags_partition_bottoms():
    for seed in range(15):
        p = generate_program(
            seed,
            GenParams(
                methods=5, loop=0.2, opaque_loop=0.15, recursion=0.1, extern=0.15
            ),
        )
        model = ProgramModel(p)
        p2 = rewrite_program(model)
        causes = {
            s.cause
            for m in p2.methods
            if not m.extern
            for s in ast.walk(m.body)
            if isinstance(s, ast.BottomAssign)
        }
        assert causes <= {
            ast.DivergenceCause.API,
            ast.DivergenceCause.LOOP,
            ast.DivergenceCause.RECURSION,
        }


def test_bottom_targets_are_deterministically_ordered():
    src = """
class A { f: int; }
method f(o: A, n: int): int {
  var r: int;
  o.f := n;
  r := f(o, n);
  return r;
}
"""
    _, p2a = rewrite(src)
    _, p2b = rewrite(src)
    assert p2a == p2b
