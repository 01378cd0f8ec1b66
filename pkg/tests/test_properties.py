import html.parser

from hypothesis import given, settings, strategies as st

from ctxesc.diagnostics import Position
from ctxesc.escapers import escape_html_attr, escape_pcdata, filter_url_prefix
from ctxesc.i18n import apply_translation, extract_messages
from ctxesc.machine import MachineState, finish, merge, step_fixed, step_interp
from ctxesc.runtime import Bindings, render_full
from ctxesc.values import SafeContent
from ctxesc.web import codec_decode, codec_encode, html_machine
from conftest import program_of

POS = Position("t", 1, 1)

settings.register_profile("suite", deadline=None, derandomize=True, max_examples=80)
settings.load_profile("suite")

HTML = html_machine()

_FRAGMENTS = [
    "x", "ab cd", "<", ">", '"', "'", "&amp;", "&#60;", "&quot;", "&bogus;",
    "<b>", "</b>", "<a href=", '<a href="', "https://e.com/a", "javascript:x",
    "'>", '">', "<style>", "</style>", "url(", ")", "<script>", "</script>",
    "<p title=", "=", " ", "\n", "\\", "<!--", "-->", '<message i18n="@@m">',
    "</message>", "</p", "->", "-",
]

html_text = st.lists(
    st.one_of(st.sampled_from(_FRAGMENTS), st.text(alphabet="abc<>&\"' =/\n", max_size=6)),
    max_size=12,
).map("".join)


def _run_chunks(chunks):
    state = HTML.zero_state()
    emitted = []
    marks = []
    for chunk in chunks:
        r = step_fixed(HTML, state, chunk, POS)
        for m in r.marks:
            marks.append(m.shifted(sum(map(len, emitted))))
        emitted.append(r.emitted)
        state = r.state
    f = finish(HTML, state, POS)
    for m in f.marks:
        marks.append(m.shifted(sum(map(len, emitted))))
    emitted.append(f.emitted)
    return "".join(emitted), f.state, marks


@given(html_text, st.data())
def test_chunk_boundary_independence(text, data):
    whole_emitted, whole_state, whole_marks = _run_chunks([text])
    cuts = sorted(data.draw(st.lists(st.integers(0, len(text)), max_size=3)))
    chunks = []
    last = 0
    for cut in cuts + [len(text)]:
        chunks.append(text[last:cut])
        last = cut
    split_emitted, split_state, split_marks = _run_chunks(chunks)
    assert split_emitted == whole_emitted
    assert split_state == whole_state
    assert split_marks == whole_marks


def test_chunk_boundary_independence_pathological_corpus():
    import random

    corpus = [
        '<a href =  "x">y</a>',
        "<a href" + " " * 20 + '= "x">y</a>',
        "<a href=" + " " * 30 + '"x">y</a>',
        '<div style="background: url(' + " " * 12 + '"img.png")">d</div>',
        '<p><message i18n="@@' + "long-id-" * 3 + 'x">hello</message></p>',
        '<message   i18n="@@m"   >in</message>',
        '<style>a{content:"' + "x" * 100 + '"}</style>',
        '<a href="' + "y" * 200 + "&quot;" + "z" * 40 + '">t</a>',
        "<script>" + "v" * 100 + "</script>",
        "<!--" + "-" * 50 + "-->after",
        '</b "' + "q" * 90 + '">tail',
        "<a href=hello" + " " * 40 + 'title="x">t</a>',
        "text" + "&" * 30 + "more",
        "<p title=" + "u" * 80 + ">x</p>",
    ]
    rng = random.Random(99)
    for text in corpus:
        base_emitted, base_state, base_marks = _run_chunks([text])
        for _ in range(100):
            cuts = sorted(rng.randrange(0, len(text) + 1)
                          for _ in range(rng.randrange(1, 5)))
            chunks, last = [], 0
            for cut in cuts + [len(text)]:
                chunks.append(text[last:cut])
                last = cut
            emitted, state, marks = _run_chunks(chunks)
            assert emitted == base_emitted, (text, cuts)
            assert state == base_state, (text, cuts)
            assert marks == base_marks, (text, cuts)


@given(html_text)
def test_merge_is_idempotent_on_reachable_states(text):
    state = finish(HTML, step_fixed(HTML, HTML.zero_state(), text, POS).state, POS).state
    assert merge(state, state) == state


@given(html_text)
def test_errored_state_absorbs_everything(text):
    bad = MachineState(context=HTML.zero_state().context, error="boom")
    r = step_fixed(HTML, bad, text, POS)
    assert r.state == bad and r.emitted == "" and r.marks == ()
    ri = step_interp(HTML, bad, POS)
    assert ri.error and ri.state == bad


@given(st.text(max_size=200))
def test_codec_round_trip(text):
    assert codec_decode("htmlCodec", codec_encode("htmlCodec", text)) == text


@given(st.one_of(st.text(max_size=50), st.integers(), st.booleans(),
                 st.floats(allow_nan=False, allow_infinity=False)))
def test_pcdata_output_contains_no_markup(value):
    out = escape_pcdata(value)
    assert "<" not in out and ">" not in out


def test_pcdata_safe_html_may_contain_markup():
    assert "<b>" in escape_pcdata(SafeContent("html", "<b>x</b>"))


_SCHEME_ALLOWLIST = ("http", "https", "mailto", "tel", "ftp")


@given(st.text(max_size=60))
def test_url_filter_output_scheme_is_allowlisted(url):
    out = filter_url_prefix(url)
    normalized = "".join(ch for ch in out if ord(ch) > 0x20).lower()
    if ":" in normalized.split("/")[0].split("?")[0].split("#")[0]:
        scheme = normalized.split(":", 1)[0]
        assert scheme in _SCHEME_ALLOWLIST or out == "about:invalid#blocked"


class _Probe(html.parser.HTMLParser):
    def __init__(self):
        super().__init__()
        self.attrs = []

    def handle_starttag(self, tag, attrs):
        self.attrs.extend(attrs)


@given(st.one_of(st.text(max_size=40), st.integers(), st.booleans()))
def test_attr_escaper_tokenizer_round_trip(value):
    from ctxesc.values import stringify

    probe = _Probe()
    probe.feed('<i a="' + escape_html_attr(value) + '">')
    probe.close()
    assert probe.attrs == [("a", stringify(value))]


@given(st.text(alphabet=st.characters(blacklist_characters="{}",
                                      blacklist_categories=("Cs",)), max_size=20))
def test_extraction_identity_reapplication(value):
    src = 'tag: html\n"<p><message i18n="@@m">a ${v} b</message></p>\n'
    program = program_of(src)
    out, marks, _ = render_full(program, Bindings({"v": value}), HTML)
    bundle = extract_messages(out.text, marks)
    assert apply_translation(out.text, marks, "m", bundle["m"]) == out.text


@given(html_text)
def test_fixed_chunk_coalescing_is_semantics_preserving(text):
    mid = len(text) // 2
    a, b = text[:mid], text[mid:]
    src_two = f'tag: html\n"{a}\n"{b}\n'
    # only compare when neither piece contains characters the template
    # grammar would reinterpret
    if "${" in src_two or "\n" in a or "\n" in b:
        return
    one = step_fixed(HTML, HTML.zero_state(), a + "\n" + b + "\n", POS)
    two_first = step_fixed(HTML, HTML.zero_state(), a + "\n", POS)
    two = step_fixed(HTML, two_first.state, b + "\n", POS)
    end_one = finish(HTML, one.state, POS)
    end_two = finish(HTML, two.state, POS)
    assert one.emitted + end_one.emitted == \
        two_first.emitted + two.emitted + end_two.emitted
    assert end_one.state == end_two.state
