from codeval.core import Language
from codeval.docformat import analyze, mentions_name, strip_comment_markers


def test_jsdoc_params_and_return():
    doc = """/**
 * Recursively dumps the properties of a class or object.
 *
 * @param classFunction - The class or object to dump.
 * @param pref - The prefix to use for indentation.
 */"""
    a = analyze(doc, Language.JAVASCRIPT)
    assert a.has_description
    assert set(a.documented_params) == {"classFunction", "pref"}
    assert not a.returns_documented


def test_jsdoc_typed_params():
    doc = "/**\n * Adds.\n * @param {number} a - x\n * @returns {number} sum\n */"
    a = analyze(doc, Language.JAVASCRIPT)
    assert a.documented_params == {"a": True}
    assert a.returns_documented


def test_javadoc():
    doc = """/**
 * Greets a person by name.
 *
 * @param name who to greet
 * @return the greeting line
 */"""
    a = analyze(doc, Language.JAVA)
    assert a.has_description
    assert "name" in a.documented_params
    assert a.returns_documented


def test_xml_doc():
    doc = ("/// <summary>Adds a value to the running total.</summary>\n"
           "/// <param name=\"value\">amount to add</param>\n"
           "/// <returns>the new total</returns>")
    a = analyze(doc, Language.CSHARP)
    assert a.style == "xml"
    assert a.has_description
    assert a.documented_params == {"value": True}
    assert a.returns_documented


def test_doxygen():
    doc = """/**
 * @brief Retrieves the color at the given coordinates.
 *
 * @param u The u-coordinate.
 * @param v The v-coordinate.
 * @return The color found.
 */"""
    a = analyze(doc, Language.CPP)
    assert a.has_description
    assert set(a.documented_params) == {"u", "v"}
    assert a.returns_documented


def test_python_rest():
    doc = '''"""Clamp a value.

    :param float value: number to clamp
    :param lo: lower bound
    :type lo: float
    :returns: the clamped number
    """'''
    a = analyze(doc, Language.PYTHON)
    assert a.style == "rest"
    assert a.documented_params == {"value": True, "lo": True}
    assert a.returns_documented


def test_python_google():
    doc = '''"""Add two numbers.

    Args:
        a: first addend
        b (int): second addend

    Returns:
        The arithmetic sum.
    """'''
    a = analyze(doc, Language.PYTHON)
    assert a.style == "google"
    assert a.has_description
    assert a.documented_params == {"a": False, "b": True}
    assert a.returns_documented


def test_python_numpy():
    doc = '''"""Scale values.

    Parameters
    ----------
    values : list of float
        numbers to scale
    factor : float
        multiplier

    Returns
    -------
    list of float
    """'''
    a = analyze(doc, Language.PYTHON)
    assert a.style == "numpy"
    assert a.documented_params == {"values": True, "factor": True}
    assert a.returns_documented


def test_python_plain_oneliner():
    a = analyze('"""Do the thing."""', Language.PYTHON)
    assert a.has_description
    assert a.documented_params == {}
    assert not a.returns_documented


def test_mentions_name_prefix_tolerant():
    tokens = ["Recursively", "dumps", "the", "properties"]
    assert mentions_name(tokens, "dump")
    assert not mentions_name(tokens, "get_colour_at")
    assert mentions_name(["calls", "get_colour_at", "then"], "get_colour_at")
    # short names require exact match
    assert not mentions_name(["fnord"], "f")
    assert mentions_name(["f"], "f")


def test_strip_markers():
    assert strip_comment_markers("/** hi */") == "hi"
    assert strip_comment_markers('"""hi there"""') == "hi there"
    assert strip_comment_markers("/// line one\n/// line two") == (
        "line one\nline two"
    )
    assert strip_comment_markers("/**\n * a\n * b\n */") == "a\nb"
