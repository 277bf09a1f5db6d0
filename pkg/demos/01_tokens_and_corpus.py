"""Semantic tokens and corpora, end to end.

Loads the bundled entity corpus, shows how every entity becomes one stable
semantic token disambiguated by its (canonical, kernel) name pair, tokenizes
a goal text against the vocabulary, and round-trips the corpus through its
on-disk format.

Run from anywhere:  python3 demos/01_tokens_and_corpus.py
"""

import tempfile
from pathlib import Path

from prooforge import (
    TokenTable,
    coverage_report,
    load_entity_corpus,
    save_entity_corpus,
    tokenize_term,
)

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> None:
    table = TokenTable()
    corpus = load_entity_corpus(str(FIXTURES / "entities.jsonl"), table)

    print(f"loaded {len(corpus.records)} entities "
          f"({len(corpus.derived)} derived) -> {len(table)} tokens\n")

    print("A few interned entities (token id, rendered name, class kind):")
    for token in corpus.tokens[:4]:
        rendered, token_class = table.reverse[token]
        print(f"  {token:4d}  {rendered}  [{token_class.kind}]")
    print()

    # Interning is idempotent: feeding a record back returns its old id.
    first = corpus.records[0]
    again = table.intern_entity(first)
    print(f"re-interning {first.name!r} -> token {again} (unchanged)\n")

    # Tokenizing an internal term resolves every known global to its
    # semantic token and leaves the rest as local lexemes.
    by_name = {r.name: r for r in corpus.records}
    term = by_name["Coq.Arith.PeanoNat.Nat.add_0_l"].internal
    print(f"tokenized {term!r}:")
    for lexeme, cls, token in tokenize_term(table, term):
        tid = "-" if token is None else str(token)
        print(f"  {lexeme!r:38} {cls.kind:9} token={tid}")
    print()

    fraction, unresolved = coverage_report(table, [term])
    print(f"coverage over that term: {fraction:.4f} "
          f"(unresolved: {sorted(unresolved) or 'none'})\n")

    # The on-disk format round-trips exactly.
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "entities.jsonl"
        save_entity_corpus(corpus, table, str(out))
        reloaded = load_entity_corpus(str(out), TokenTable())
        print(f"round-trip: {len(reloaded.records)} records, "
              f"identical = {reloaded.records == corpus.records}")


if __name__ == "__main__":
    main()
