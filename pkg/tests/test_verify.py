import itertools
import shutil
from collections import Counter
from pathlib import Path

import pytest

from codeval.core import (
    Diagnostic,
    FailureClass,
    FixPayload,
    Language,
    Scenario,
    TestCase,
)
from codeval.extract import (
    make_fix_cases,
    make_test_cases,
    scan_workspace_files,
)
from codeval.parsing import parse_source
from codeval.splice import append_test, splice_doc, splice_fix
from codeval.verify import (
    diagnostics_multiset,
    fix_decision,
    focal_invoked,
    reliability_gate,
    verify_doc,
    verify_fix,
    verify_syntax,
    verify_test,
)
from support import FIXTURE_ROSTER

RESPONSES = Path(__file__).parent / "fixtures" / "golden" / "responses"

DUMP_JS = (
    Path(__file__).parent / "fixtures" / "golden" / "dump_repo" / "dump.js"
).read_bytes()


def _code_of(name: str) -> str:
    from codeval.modelio import extract_code

    raw = (RESPONSES / name).read_text()
    lang = Language.PYTHON if "python" in raw else Language.JAVASCRIPT
    code = extract_code(raw, lang)
    assert code is not None
    return code


def _dump_method():
    pf = parse_source(DUMP_JS, Language.JAVASCRIPT, "dump.js")
    return pf.method_named("dump").to_info()


def test_check_syntax_examples():
    assert verify_syntax(b"def f():\n    return 1\n", Language.PYTHON)
    assert not verify_syntax(b"function f() { return 1;", Language.JAVASCRIPT)
    broken_import = (
        b"import {\nimport { x } from 'y';\n  a,\n} from './z';\n"
    )
    assert not verify_syntax(broken_import, Language.TYPESCRIPT)


# ------------------------------------------------------------------ doc
def test_doc_figure_gpt35_passes():
    method = _dump_method()
    code = _code_of("doc_dump_gpt35.md")
    spliced = splice_doc(DUMP_JS, method, code, Language.JAVASCRIPT)
    verdict = verify_doc(DUMP_JS, spliced, method, Language.JAVASCRIPT, "c1")
    assert verdict.passed, verdict.evidence
    fmt = verdict.evidence["format"]
    assert fmt["focal_code_unchanged"]
    assert fmt["names_focal_function"]


def test_doc_figure_gpt4_syntax_change():
    method = _dump_method()
    code = _code_of("doc_dump_gpt4.md")
    spliced = splice_doc(DUMP_JS, method, code, Language.JAVASCRIPT)
    verdict = verify_doc(DUMP_JS, spliced, method, Language.JAVASCRIPT, "c2")
    assert not verdict.passed
    assert verdict.failure_class is FailureClass.SYNTAX_CHANGE


def test_doc_wrong_function_documented_is_irrelevant():
    # the incorrect-focal-function failure: docstring describes class Vec
    src = b"""class Material {
  getColourAt(u, v) {
    if (this.texture) {
      return this.texture.getPixel(u, v);
    }
    return this.colour;
  }
}
"""
    pf = parse_source(src, Language.JAVASCRIPT, "m.js")
    method = pf.method_named("getColourAt").to_info()
    vec_doc = (
        "/**\n * @class Vec\n *\n * Represents a vector in 3D space. This "
        "class is typically\n * used to represent points in 3D space or RGB "
        "color values.\n */"
    )
    spliced = splice_doc(src, method, vec_doc, Language.JAVASCRIPT)
    verdict = verify_doc(src, spliced, method, Language.JAVASCRIPT, "c3")
    assert not verdict.passed
    assert verdict.failure_class is FailureClass.IRRELEVANT_DOCSTRING


def test_doc_body_logic_change_detected():
    method = _dump_method()
    tampered = _code_of("doc_dump_gpt35.md").replace(
        'keys[0] !== "0"', 'keys[0] === "0"'
    )
    spliced = splice_doc(DUMP_JS, method, tampered, Language.JAVASCRIPT)
    verdict = verify_doc(DUMP_JS, spliced, method, Language.JAVASCRIPT, "c4")
    assert verdict.failure_class is FailureClass.CODE_LOGIC_CHANGE


def test_doc_missing_param_incomplete():
    method = _dump_method()
    code = (
        "/**\n * Recursively dumps the properties of a class or object.\n"
        " * @param classFunction - The class or object to dump.\n */\n"
    ) + DUMP_JS.decode().split("function dump", 1)[1].join(["function dump", ""])
    # simpler: echo function with docstring missing `pref`
    code = (
        "/**\n * Recursively dumps the properties of a class or object.\n"
        " * @param classFunction - The class or object to dump.\n */\n"
        "function dump(classFunction, pref) {\n"
        '  window.document.write("<b>" + pref + classFunction.name + "</b> <br/>");\n'
        "  const keys = Object.keys(classFunction);\n"
        '  if (keys.length > 0 && keys[0] !== "0") {\n'
        "    for (const prop of keys) {\n"
        "      dump(classFunction[prop], pref + classFunction.name + \".\");\n"
        "    }\n  }\n}"
    )
    spliced = splice_doc(DUMP_JS, method, code, Language.JAVASCRIPT)
    verdict = verify_doc(DUMP_JS, spliced, method, Language.JAVASCRIPT, "c5")
    assert verdict.failure_class is FailureClass.INCOMPLETE_DOCSTRING
    assert verdict.evidence["missing_params"] == ["pref"]


def test_doc_return_required_when_value_returned():
    src = b"""function add(a, b) {
  const total = a + b;
  return total;
}
"""
    pf = parse_source(src, Language.JAVASCRIPT, "m.js")
    method = pf.method_named("add").to_info()
    code = (
        "/**\n * Adds two numbers.\n * @param a - x\n * @param b - y\n */\n"
        "function add(a, b) {\n  const total = a + b;\n  return total;\n}"
    )
    spliced = splice_doc(src, method, code, Language.JAVASCRIPT)
    verdict = verify_doc(src, spliced, method, Language.JAVASCRIPT, "c6")
    assert verdict.failure_class is FailureClass.INCOMPLETE_DOCSTRING


# ------------------------------------------------------------------ fix
def test_fix_decision_examples():
    d0 = ("r0", "m0")
    d1 = ("r1", "m1")
    ok, fc, _ = fix_decision(d0, Counter([d0]), Counter())
    assert ok and fc is None
    ok, fc, new = fix_decision(d0, Counter([d0]), Counter([d1]))
    assert not ok and fc is FailureClass.NEW_DIAGNOSTIC_INTRODUCED
    assert new == [d1]
    ok, fc, _ = fix_decision(d0, Counter([d0, d1]), Counter([d0]))
    assert not ok and fc is FailureClass.ORIGINAL_DIAGNOSTIC_REMAINS


def test_fix_decision_matches_bruteforce_oracle():
    universe = [("r0", "m0"), ("r1", "m1"), ("r2", "m2"), ("r3", "m3")]
    d0 = universe[0]
    agree = 0
    total = 0
    for before_bits in itertools.product([0, 1], repeat=4):
        if before_bits[0] == 0:
            continue  # d0 must be in the before set
        before = Counter(
            {k: 1 for k, bit in zip(universe, before_bits) if bit}
        )
        for after_bits in itertools.product([0, 1], repeat=4):
            after = Counter(
                {k: 1 for k, bit in zip(universe, after_bits) if bit}
            )
            expected = (after.get(d0, 0) == 0) and all(
                after[k] <= before.get(k, 0) for k in after
            )
            got, _, _ = fix_decision(d0, before, after)
            total += 1
            agree += got == expected
    assert total == 8 * 16
    assert agree == total


def test_fix_multiset_semantics():
    d = ("rule", "same message")
    before = Counter({d: 2, ("x", "y"): 1})
    after = Counter({d: 2})
    # two identical violations still present -> original remains
    ok, fc, _ = fix_decision(("x", "y"), before, after)
    assert ok  # target gone, after ⊆ before
    ok, fc, _ = fix_decision(d, before, after)
    assert not ok and fc is FailureClass.ORIGINAL_DIAGNOSTIC_REMAINS
    # a third copy appearing is a new diagnostic
    ok, fc, _ = fix_decision(("x", "y"), before, Counter({d: 3}))
    assert not ok and fc is FailureClass.NEW_DIAGNOSTIC_INTRODUCED


def test_verify_fix_live_pass(lightning_ws, tmp_path):
    from codeval.modelio import extract_code

    case = make_fix_cases(lightning_ws, scan_workspace_files(lightning_ws))[0]
    raw = (RESPONSES / "fix_pass_gpt4.md").read_text()
    code = extract_code(raw, Language.PYTHON)
    original = (lightning_ws.root / case.method.file_path).read_bytes()
    spliced = splice_fix(
        original, tuple(case.method.body_span), code, Language.PYTHON
    )
    tree = tmp_path / "tree"
    shutil.copytree(lightning_ws.root, tree)
    (tree / case.method.file_path).write_bytes(spliced.new_file_contents)
    verdict = verify_fix(
        lightning_ws, case, spliced, tree, FIXTURE_ROSTER
    )
    assert verdict.passed, verdict.evidence


def test_verify_fix_live_original_remains(tutorial_ws, tmp_path):
    from codeval.modelio import extract_code

    cases = make_fix_cases(tutorial_ws, scan_workspace_files(tutorial_ws))
    case = next(
        c for c in cases if '">"' in c.payload.diagnostic.message
    )
    raw = (RESPONSES / "fix_fail_gpt4.md").read_text()
    code = extract_code(raw, Language.PYTHON)
    original = (tutorial_ws.root / case.method.file_path).read_bytes()
    spliced = splice_fix(
        original, tuple(case.method.body_span), code, Language.PYTHON
    )
    tree = tmp_path / "tree"
    shutil.copytree(tutorial_ws.root, tree)
    (tree / case.method.file_path).write_bytes(spliced.new_file_contents)
    verdict = verify_fix(tutorial_ws, case, spliced, tree, FIXTURE_ROSTER)
    assert not verdict.passed
    assert verdict.failure_class is FailureClass.ORIGINAL_DIAGNOSTIC_REMAINS


# ------------------------------------------------------------------ test
def test_focal_invocation_check():
    assert focal_invoked("assert.strictEqual(add(1, 2), 3);", "add")
    assert focal_invoked("expect(obj.add(1)).toBe(2)", "add")
    assert not focal_invoked("assert.ok(true);", "add")
    assert not focal_invoked("const madden = 1; madden2();", "add")


def test_reliability_gate_flags_flaky_file(jsuite_ws):
    assert reliability_gate(jsuite_ws, "src/mathx.js", Language.JAVASCRIPT)
    assert not reliability_gate(jsuite_ws, "src/flaky.js", Language.JAVASCRIPT)


def test_verify_test_unreliable_file(jsuite_ws, tmp_path):
    cases = make_test_cases(jsuite_ws, scan_workspace_files(jsuite_ws))
    flaky_case = next(c for c in cases if c.method.file_path == "src/flaky.js")
    original = (jsuite_ws.root / "src/flaky.js").read_bytes()
    test_code = "if (double(2) !== 4) { throw new Error('bad'); }"
    spliced = append_test(original, "src/flaky.js", test_code,
                          Language.JAVASCRIPT)
    tree = tmp_path / "tree"
    shutil.copytree(jsuite_ws.root, tree)
    (tree / "src/flaky.js").write_bytes(spliced.new_file_contents)
    verdict = verify_test(jsuite_ws, flaky_case, spliced, tree, test_code,
                          gate_ok=False)
    assert verdict.failure_class is FailureClass.UNRELIABLE_FILE


def test_verify_test_pass_and_not_invoked(jsuite_ws, tmp_path):
    cases = make_test_cases(jsuite_ws, scan_workspace_files(jsuite_ws))
    add_case = next(c for c in cases if c.method.name == "add")
    original = (jsuite_ws.root / add_case.method.file_path).read_bytes()

    good = (
        "if (add(2, 3) !== 5) { throw new Error('add broken'); }"
    )
    spliced = append_test(original, add_case.method.file_path, good,
                          Language.JAVASCRIPT)
    tree = tmp_path / "t1"
    shutil.copytree(jsuite_ws.root, tree)
    (tree / add_case.method.file_path).write_bytes(spliced.new_file_contents)
    verdict = verify_test(jsuite_ws, add_case, spliced, tree, good, gate_ok=True)
    assert verdict.passed, verdict.evidence

    trivial = "if (true !== true) { throw new Error('never'); }"
    spliced2 = append_test(original, add_case.method.file_path, trivial,
                           Language.JAVASCRIPT)
    tree2 = tmp_path / "t2"
    shutil.copytree(jsuite_ws.root, tree2)
    (tree2 / add_case.method.file_path).write_bytes(spliced2.new_file_contents)
    verdict2 = verify_test(jsuite_ws, add_case, spliced2, tree2, trivial,
                           gate_ok=True)
    assert verdict2.failure_class is FailureClass.FOCAL_METHOD_NOT_INVOKED


def test_verify_test_failing_expectation(jsuite_ws, tmp_path):
    cases = make_test_cases(jsuite_ws, scan_workspace_files(jsuite_ws))
    add_case = next(c for c in cases if c.method.name == "add")
    original = (jsuite_ws.root / add_case.method.file_path).read_bytes()
    bad = "if (add(2, 3) !== 99) { throw new Error('wrong expectation'); }"
    spliced = append_test(original, add_case.method.file_path, bad,
                          Language.JAVASCRIPT)
    tree = tmp_path / "tree"
    shutil.copytree(jsuite_ws.root, tree)
    (tree / add_case.method.file_path).write_bytes(spliced.new_file_contents)
    verdict = verify_test(jsuite_ws, add_case, spliced, tree, bad, gate_ok=True)
    assert not verdict.passed
    assert verdict.failure_class is FailureClass.GENERATED_TEST_FAILED
