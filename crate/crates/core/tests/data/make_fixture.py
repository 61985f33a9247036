#!/usr/bin/env python3
"""Writes fixture.txt, precisions.tsv and expected.txt.

The generator knows the hyponym list of every sentence it emits, so the
expected counts come straight from that list rather than from any parser.
Run from this directory: python3 make_fixture.py
"""
import random
from collections import Counter

SEED = 20240117
N = 200

PRECISIONS = {
    "such_as": 0.8,
    "such_h_as": 0.7,
    "including": 0.6,
    "especially": 0.4,
    "and_other": 0.9,
    "or_other": 0.5,
}

# Words chosen so the lemmatizer leaves them untouched.
CLASSES = {
    "tree": ["oak", "pine", "elm", "birch", "maple", "cedar", "willow", "spruce",
             "larch", "beech", "alder", "poplar", "holly"],
    "fruit": ["apple", "pear", "plum", "fig", "mango", "kiwi", "lemon", "lime",
              "melon", "peach", "cherry", "grape", "guava", "sweet potato"],
    "metal": ["iron", "copper", "zinc", "tin", "nickel", "cobalt", "silver",
              "gold", "platinum", "chrome", "lead", "titanium"],
}

PREFIXES = ["", "the farm have ", "we like ", "there be ", "it is said that "]
SUFFIXES = [" .", " in the north .", " for the market .", " ."]
FILLER = [
    "the weather is cold today .",
    "we walk to the river .",
    "the market open at noon .",
    "a storm hit the coast .",
]


def pick_terms(rng, pool, k):
    # Zipf-like weights so the tail terms fall near the support threshold.
    weights = [1.0 / (i + 1) ** 0.9 for i in range(len(pool))]
    chosen = []
    while len(chosen) < k:
        t = rng.choices(pool, weights)[0]
        if t not in chosen:
            chosen.append(t)
    return chosen


def join_list(items, conj):
    if len(items) == 1:
        return items[0]
    return " , ".join(items[:-1]) + f" {conj} " + items[-1]


def sentence(rng):
    """Returns (text, pattern or None, terms)."""
    if rng.random() < 0.05:
        return rng.choice(FILLER), None, []
    hyper = rng.choice(sorted(CLASSES))
    k = rng.choices([1, 2, 3, 4, 5, 6], [1, 3, 6, 6, 4, 2])[0]
    terms = pick_terms(rng, CLASSES[hyper], k)
    pattern = rng.choice(sorted(PRECISIONS))
    pre, suf = rng.choice(PREFIXES), rng.choice(SUFFIXES)
    if pattern == "such_as":
        body = f"{hyper} such as {join_list(terms, rng.choice(['and', 'or']))}"
    elif pattern == "such_h_as":
        body = f"such {hyper} as {join_list(terms, 'and')}"
    elif pattern in ("including", "especially"):
        body = f"{hyper} {pattern} {join_list(terms, 'and')}"
        suf = rng.choice(SUFFIXES)
    else:
        conj = "and" if pattern == "and_other" else "or"
        body = f"{' , '.join(terms)} {conj} other {hyper}"
    return pre + body + suf, pattern, [t.replace(" ", "_") for t in terms]


def one_pass(records):
    hq = [(p, ts) for p, ts in records if p is not None and PRECISIONS[p] >= 0.5 and len(ts) >= 3]
    support = Counter(t for _, ts in hq for t in set(ts))
    good = {t for t, n in support.items() if n >= 10}
    kept = [[t for t in ts if t in good] for _, ts in hq]
    return len(hq), [ts for ts in kept if len(ts) >= 3]


def fixed_point(sentences):
    while True:
        support = Counter(t for ts in sentences for t in set(ts))
        good = {t for t, n in support.items() if n >= 10}
        nxt = [[t for t in ts if t in good] for ts in sentences]
        nxt = [ts for ts in nxt if len(ts) >= 3]
        if nxt == sentences:
            return nxt
        sentences = nxt


def contexts(texts, records, kept_mask):
    """Context tokens of the kept records, built from the known structure."""
    out = []
    for text, (p, ts), keep in zip(texts, records, kept_mask):
        if not keep:
            continue
        toks = text.split()
        raw = [t.replace("_", " ") for t in ts]
        # Locate the list by its first and last items as emitted.
        first = raw[0].split()
        start = next(i for i in range(len(toks)) if toks[i:i + len(first)] == first)
        last = raw[-1].split()
        end = max(i for i in range(len(toks)) if toks[i:i + len(last)] == last) + len(last)
        out.append(toks[:start] + ["PLACEHOLDER"] + toks[end:])
    return out


def main():
    rng = random.Random(SEED)
    texts, records = [], []
    for _ in range(N):
        text, p, ts = sentence(rng)
        texts.append(text)
        records.append((p, ts))

    hq_count, single = one_pass(records)

    # Fixed point, tracked per sentence so contexts can be recovered.
    alive = {i: ts for i, (p, ts) in enumerate(records)
             if p is not None and PRECISIONS[p] >= 0.5 and len(ts) >= 3}
    while True:
        support = Counter(t for ts in alive.values() for t in set(ts))
        good = {t for t, n in support.items() if n >= 10}
        nxt = {i: [t for t in ts if t in good] for i, ts in alive.items()}
        nxt = {i: ts for i, ts in nxt.items() if len(ts) >= 3}
        if nxt == alive:
            break
        alive = nxt
    assert list(alive.values()) == fixed_point([ts for _, ts in one_pass_input(records)])

    ctx = contexts(texts, records, [i in alive for i in range(N)])
    counts = Counter(t for c in ctx for t in c if t != "PLACEHOLDER")
    vocab5 = 3 + sum(1 for n in counts.values() if n >= 5)

    with open("fixture.txt", "w") as f:
        f.write("\n".join(texts) + "\n")
    with open("precisions.tsv", "w") as f:
        for k in sorted(PRECISIONS):
            f.write(f"{k}\t{PRECISIONS[k]}\n")
    expected = {
        "raw_sentences": N,
        "matched": sum(1 for p, _ in records if p is not None),
        "high_quality_sentences": hq_count,
        "one_pass_sentences": len(single),
        "one_pass_terms": len({t for ts in single for t in ts}),
        "sentences": len(alive),
        "terms": len({t for ts in alive.values() for t in ts}),
        "samples": sum(len(ts) for ts in alive.values()),
        "vocab_min5": vocab5,
    }
    with open("expected.txt", "w") as f:
        for k, v in expected.items():
            f.write(f"{k} {v}\n")
    print(expected)


def one_pass_input(records):
    return [(p, ts) for p, ts in records if p is not None and PRECISIONS[p] >= 0.5 and len(ts) >= 3]


if __name__ == "__main__":
    main()
