"""Regenerates metric_fixtures.json with oracles independent of the Rust code.

Classification cases use scikit-learn; the n-gram metrics are brute-force
list scans. Run from this directory: python3 gen_metric_fixtures.py
"""
import json
import math
import random
from functools import lru_cache

from sklearn.metrics import precision_recall_fscore_support

rng = random.Random(7)


def prf_case():
    labels = rng.sample(["business", "sport", "politics", "tech", "entertainment"], rng.randint(2, 5))
    n = rng.randint(3, 40)
    gold = [rng.choice(labels) for _ in range(n)]
    pred = [g if rng.random() < 0.6 else rng.choice(labels) for g in gold]
    out = {"gold": gold, "pred": pred}
    for avg in ("macro", "micro"):
        p, r, f, _ = precision_recall_fscore_support(gold, pred, average=avg, zero_division=0)
        out[avg] = [float(p), float(r), float(f)]
    return out


def ngrams(seq, n):
    return [tuple(seq[i:i + n]) for i in range(len(seq) - n + 1)]


def clipped(cand, ref, n):
    c = ngrams(cand, n)
    r = ngrams(ref, n)
    used = [False] * len(r)
    hits = 0
    for g in c:
        for k, h in enumerate(r):
            if not used[k] and h == g:
                used[k] = True
                hits += 1
                break
    return hits, len(c)


def bleu(cand, ref, max_n):
    if not cand:
        return 0.0
    logs = 0.0
    for n in range(1, max_n + 1):
        num, den = clipped(cand, ref, n)
        if num == 0 or den == 0:
            return 0.0
        logs += math.log(num / den)
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(logs / max_n)


def f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def rouge_n(cand, ref, n):
    c, r = ngrams(cand, n), ngrams(ref, n)
    if not c and not r:
        return 1.0 if cand == ref else 0.0
    if not c or not r:
        return 0.0
    hits, _ = clipped(cand, ref, n)
    return f1(hits / len(c), hits / len(r))


def rouge_l(cand, ref):
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0

    @lru_cache(maxsize=None)
    def lcs(i, j):
        if i == len(cand) or j == len(ref):
            return 0
        if cand[i] == ref[j]:
            return 1 + lcs(i + 1, j + 1)
        return max(lcs(i + 1, j), lcs(i, j + 1))

    m = lcs(0, 0)
    return f1(m / len(cand), m / len(ref))


def meteor_exact(cand, ref):
    used = [False] * len(ref)
    pairs = []
    for i, tok in enumerate(cand):
        j = None
        if pairs and pairs[-1][0] == i - 1:
            nxt = pairs[-1][1] + 1
            if nxt < len(ref) and not used[nxt] and ref[nxt] == tok:
                j = nxt
        if j is None:
            for k in range(len(ref)):
                if not used[k] and ref[k] == tok:
                    j = k
                    break
        if j is not None:
            used[j] = True
            pairs.append((i, j))
    m = len(pairs)
    if m == 0:
        return 0.0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    p, r = m / len(cand), m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    return fmean * (1 - 0.5 * (chunks / m) ** 3)


VOCAB = "the a cat dog sat on mat and police said on monday city council voted".split()


def text_case():
    ref = [rng.choice(VOCAB) for _ in range(rng.randint(1, 14))]
    cand = list(ref)
    for _ in range(rng.randint(0, 6)):
        op = rng.random()
        if op < 0.3 and cand:
            del cand[rng.randrange(len(cand))]
        elif op < 0.6:
            cand.insert(rng.randint(0, len(cand)), rng.choice(VOCAB))
        elif cand:
            cand[rng.randrange(len(cand))] = rng.choice(VOCAB)
    return {
        "candidate": cand,
        "reference": ref,
        "bleu2": bleu(cand, ref, 2),
        "bleu4": bleu(cand, ref, 4),
        "rouge1": rouge_n(cand, ref, 1),
        "rouge2": rouge_n(cand, ref, 2),
        "rougeL": rouge_l(cand, ref),
        "meteor_exact": meteor_exact(cand, ref),
    }


text = [text_case() for _ in range(10)]
# guarantee a few cases with non-zero BLEU-4
while sum(1 for t in text if t["bleu4"] > 0) < 3:
    t = text_case()
    if t["bleu4"] > 0:
        text.append(t)

fixtures = {"prf": [prf_case() for _ in range(10)], "text": text}
with open("metric_fixtures.json", "w") as f:
    json.dump(fixtures, f, indent=1)
