from codematch.data import stats
from codematch.encoder import tokenize
from codematch.funcparse import docstring_text
from codematch.synth import (
    BODY_VARIANTS,
    CONTENT_WORDS,
    DOC_TEMPLATES,
    QUERY_FILLER,
    SynthConfig,
    generate,
)


def test_word_pools_disjoint():
    content = set(CONTENT_WORDS)
    filler = set(QUERY_FILLER)
    template_words = set()
    for template in DOC_TEMPLATES:
        template_words.update(
            w.strip(".{}012").lower() for w in template.split() if w.strip(".{}012")
        )
    body_words = set()
    for body in BODY_VARIANTS:
        body_words.update(tokenize(body, kind="code", wrap=False))
    assert len(content) == len(CONTENT_WORDS)  # no duplicates
    assert content.isdisjoint(filler)
    assert content.isdisjoint(template_words)
    assert content.isdisjoint(body_words)
    assert filler.isdisjoint(template_words)


def test_sizes_and_labels():
    corpus = generate(SynthConfig(n_train=50, n_valid=10, n_test=20, seed=1))
    assert len(corpus.train.pairs) == 50
    assert len(corpus.valid.pairs) == 10
    assert len(corpus.test.pairs) == 20
    assert all(p.label == 1 for p in corpus.test.pairs)
    labels = {p.label for p in corpus.train.pairs}
    assert labels == {0, 1}


def test_test_codes_distinct():
    corpus = generate(SynthConfig(n_train=10, n_test=30, seed=2))
    assert len(corpus.test.codes) == 30
    assert len(corpus.test_codebase()) == 30


def _shared_content(corpus, pair):
    query = corpus.queries[pair.query_id]
    code = corpus.codes[pair.code_id]
    doc_tokens = set(tokenize(docstring_text(code), kind="code", wrap=False))
    return set(query.tokens) & doc_tokens & set(CONTENT_WORDS)


def test_positive_pairs_share_content_negatives_share_none():
    corpus = generate(SynthConfig(n_train=120, n_test=5, seed=3)).train
    for pair in corpus.pairs:
        shared = _shared_content(corpus, pair)
        if pair.label == 1:
            assert len(shared) >= 2
        else:
            query = corpus.queries[pair.query_id]
            code = corpus.codes[pair.code_id]
            all_code_tokens = set(tokenize(code.raw_text, kind="code", wrap=False))
            assert not (set(query.tokens) & all_code_tokens)


def test_signal_lives_only_in_docstrings():
    corpus = generate(SynthConfig(n_train=60, n_test=5, seed=4)).train
    content = set(CONTENT_WORDS)
    for code in corpus.codes.values():
        header_tokens = set(tokenize(code.header, kind="code", wrap=False))
        body_tokens = set(tokenize(code.body, kind="code", wrap=False))
        assert not header_tokens & content
        assert not body_tokens & content


def test_deterministic():
    a = generate(SynthConfig(n_train=25, n_test=5, seed=9))
    b = generate(SynthConfig(n_train=25, n_test=5, seed=9))
    assert a.train.text_pairs() == b.train.text_pairs()
    assert [p.label for p in a.train.pairs] == [p.label for p in b.train.pairs]
    c = generate(SynthConfig(n_train=25, n_test=5, seed=10))
    assert a.train.text_pairs() != c.train.text_pairs()


def test_queries_look_realistic():
    corpus = generate(SynthConfig(n_train=200, n_test=5, seed=5)).train
    st = stats(corpus)
    assert 4.0 <= st.avg_query_len <= 9.0
