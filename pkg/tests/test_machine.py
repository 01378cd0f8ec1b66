from ctxesc.diagnostics import Position, Severity
from ctxesc.machine import (
    MachineState,
    build_machine,
    finish,
    is_valid_end,
    merge,
    state_str,
    step_fixed,
    step_interp,
)
from ctxesc.tables import parse_table

POS = Position("t", 1, 1)


def run_fixed(machine, text, state=None):
    state = state or machine.zero_state()
    r = step_fixed(machine, state, text, POS)
    f = finish(machine, r.state, POS)
    return f.state, r.emitted + f.emitted, list(r.diagnostics) + list(f.diagnostics)


def toy_machine(extra):
    table, diags = parse_table(
        "machine toy\nfields state\nvalues state: A B C\nstart A\nterminal A\n" + extra)
    assert table is not None, [str(d) for d in diags]
    return build_machine(table)


def test_pcdata_attack_surface_reduction(html):
    state, emitted, _ = run_fixed(html, "I <3 <b>you</b>")
    assert emitted == "I &lt;3 <b>you</b>"
    assert state.context == ("Pcdata", "None", "None", "None")


def test_empty_chunk_leaves_state_unchanged(html):
    state = html.zero_state()
    r = step_fixed(html, state, "", POS)
    assert r.state == state
    assert r.emitted == ""


def test_close_tag_attribute_warning(html):
    state = MachineState(context=("CName", "None", "None", "None"))
    r = step_fixed(html, state, '"x"', POS)
    f = finish(html, r.state, POS)
    diags = r.diagnostics + f.diagnostics
    assert [d.message for d in diags] == ["HTML attribute in close tag"]
    assert diags[0].severity is Severity.WARNING


def test_close_tag_entry(html):
    # `</` alone cannot start a close tag: the lookahead needs a letter
    state, emitted, _ = run_fixed(html, "</")
    assert state.context[0] == "Pcdata"
    assert emitted == "&lt;/"
    state2, _, _ = run_fixed(html, "</a")
    assert state2.context[0] == "CName"


def test_script_element_lands_in_raw_text(html):
    state, emitted, _ = run_fixed(html, "<script>")
    assert state.context == ("RawText", "Script", "None", "None")
    assert emitted == "<script>"
    # a longer tag name falls through to the generic open-tag rule
    state2, _, _ = run_fixed(html, "<scripts>")
    assert state2.context[0] == "Pcdata"


def test_style_element_starts_css_subsidiary(html):
    state, _, _ = run_fixed(html, "<style>p{}")
    assert state.context[:2] == ("RawText", "Style")
    assert [f.machine for f in state.frames] == ["Css"]
    state2, emitted, _ = run_fixed(html, "<style>p{}</style>done")
    assert state2.context[0] == "Pcdata"
    assert state2.frames == ()
    assert emitted == "<style>p{}</style>done"


def test_url_attribute_classification(html):
    state, _, _ = run_fixed(html, "<a href=")
    assert state.context == ("BeforeValue", "None", "Url", "None")
    state, _, _ = run_fixed(html, "<a title=")
    assert state.context[2] == "Plain"
    state, _, _ = run_fixed(html, "<a hreflang=")
    assert state.context[2] == "Plain"


def test_quoted_url_attribute_spins_up_subsidiary(html):
    state, _, _ = run_fixed(html, '<a href="')
    assert state.context == ("Attr", "None", "Url", "Double")
    assert [f.machine for f in state.frames] == ["Url"]
    assert [f.codec for f in state.frames] == ["htmlCodec"]


def test_entities_decode_for_subsidiary_and_reencode(html):
    _, emitted, _ = run_fixed(html, '<a href="x&quot;y">')
    assert emitted == '<a href="x&quot;y">'


def test_step_interp_in_pcdata(html):
    r = step_interp(html, html.zero_state(), POS)
    assert not r.error
    assert r.escapers == ("HtmlPcdataEscaper",)
    assert (r.pre, r.post) == ("", "")
    assert r.state.context[0] == "Pcdata"


def test_step_interp_unquoted_url_attribute(html):
    state, _, _ = run_fixed(html, "<a href=")
    r = step_interp(html, state, POS)
    assert not r.error
    assert r.escapers == ("UrlPrefixFilteringEscaper", "HtmlAttributeEscaper")
    assert (r.pre, r.post) == ('"', '"')
    assert r.state.context == ("AfterValue", "None", "None", "None")
    assert state_str(r.site) == "(BeforeValue, _, Url, _)"


def test_step_interp_quoted_url_attribute_uses_subsidiary(html):
    state, _, _ = run_fixed(html, '<a href="')
    r = step_interp(html, state, POS)
    assert r.escapers == ("UrlPrefixFilteringEscaper", "HtmlAttributeEscaper")
    assert (r.pre, r.post) == ("", "")
    assert [f.machine for f in r.state.frames] == ["Url"]
    assert r.state.frames[0].context == ("QueryOrFragment",)


def test_step_interp_errored_state_is_absorbing(html):
    bad = MachineState(context=html.zero_state().context, error="boom")
    r = step_interp(html, bad, POS)
    assert r.error
    assert r.state == bad


def test_step_interp_comment_fails_stop(html):
    state, _, _ = run_fixed(html, "<!-- ")
    r = step_interp(html, state, POS)
    assert r.error
    assert "interpolation not allowed" in r.state.error


def test_errored_state_absorbs_fixed_input(html):
    bad = MachineState(context=html.zero_state().context, error="boom")
    r = step_fixed(html, bad, "<script>", POS)
    assert r.state == bad
    assert r.emitted == ""
    assert r.diagnostics == []


def test_merge_idempotent(html):
    s = html.zero_state()
    assert merge(s, s) is s
    state, _, _ = run_fixed(html, "<a href=")
    assert merge(state, state) == state


def test_merge_conflict_names_fields(html):
    a, _, _ = run_fixed(html, "<p>")
    b, _, _ = run_fixed(html, "<p")
    merged = merge(a, b, html.root_table)
    assert merged.error is not None
    assert "state: Pcdata vs OName" in merged.error


def test_merge_with_errored_state_is_errored(html):
    good = html.zero_state()
    bad = MachineState(context=good.context, error="boom")
    assert merge(good, bad).error == "boom"
    assert merge(bad, good).error == "boom"


def test_merge_subsidiary_stack_depth_conflict(html):
    a, _, _ = run_fixed(html, '<a href="')
    b, _, _ = run_fixed(html, '<a title="')
    merged = merge(a, b, html.root_table)
    assert merged.error is not None
    assert "stack depth" in merged.error or "attr" in merged.error


def test_is_valid_end(html):
    ok, msg = is_valid_end(html, html.zero_state())
    assert ok and msg is None
    state, _, _ = run_fixed(html, "<a href=hello>link</a")
    ok, msg = is_valid_end(html, state)
    assert not ok
    assert "close tag" in msg
    bad = MachineState(context=html.zero_state().context, error="boom")
    assert is_valid_end(html, bad) == (False, "boom")


def test_unclosed_style_is_not_a_valid_end(html):
    state, _, _ = run_fixed(html, "<style>p{")
    ok, msg = is_valid_end(html, state)
    assert not ok
    assert "raw text element" in msg


def test_first_match_wins_order_matters():
    ordered = toy_machine("""
[rules]
| A | `ab` | `1` | B |
| A | `a` | `2` | C |
""")
    flipped = toy_machine("""
[rules]
| A | `a` | `2` | C |
| A | `ab` | `1` | B |
""")
    s1, e1, _ = run_fixed(ordered, "ab")
    s2, e2, _ = run_fixed(flipped, "ab")
    assert (e1, s1.context) == ("1", ("B",))
    assert (e2, s2.context) == ("2b", ("C",))


def test_error_severity_rule_sets_fail_stop():
    machine = toy_machine("""
[rules]
| A | `x` | | _ | E: forbidden |
""")
    state, emitted, diags = run_fixed(machine, "ax")
    assert state.error == "forbidden"
    assert emitted == "a"  # the default-copied prefix, nothing after the error
    assert any(d.severity is Severity.ERROR for d in diags)
    # absorbed afterwards
    r = step_fixed(machine, state, "more", POS)
    assert r.emitted == "" and r.state == state


def test_interp_trigger_rule_contributes_pre_text():
    machine = toy_machine("""
[escapers]
| B | | | | _ |
[rules]
| A | interp | `[` | B |
""")
    r = step_interp(machine, machine.zero_state(), POS)
    assert not r.error
    assert r.pre == "["
    assert r.state.context == ("B",)
    assert r.escapers == ()


def test_epsilon_rule_with_substitution_and_diagnostic():
    machine = toy_machine("""
[rules]
| A | | `+` | B | W: epsilon fired |
""")
    state, emitted, diags = run_fixed(machine, "z")
    assert emitted == "+z"
    assert state.context == ("B",)
    assert [d.message for d in diags] == ["epsilon fired"]


def test_runaway_epsilon_reported_as_internal_error():
    machine = toy_machine("""
[rules]
| A | | | B |
| B | | | C |
| C | | | A |
""")
    state, _, diags = run_fixed(machine, "x")
    assert state.error is not None
    assert any("table bug" in d.message for d in diags)


def test_bounded_lookahead_is_declared_per_table(html):
    assert html.root_table.lookahead == 64
