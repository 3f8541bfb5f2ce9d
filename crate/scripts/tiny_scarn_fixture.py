"""Writes the tiny SCARN forward fixture (N=3, d=4, K=2, H=2).

The forward pass below is written out scalar by scalar in plain Python,
independently of the Rust code, and is the oracle the library is checked
against.
"""
import json
import math
import random
import sys

N, D, K, H = 3, 4, 2, 2
VOCAB = 6


def sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def mat(rng, rows, cols, s=0.6):
    return [[rng.uniform(-s, s) for _ in range(cols)] for _ in range(rows)]


def vec(rng, n, s=0.3):
    return [rng.uniform(-s, s) for _ in range(n)]


def lstm(xs, w, u, b):
    """Gate rows: i = 0..H, f = H..2H, g = 2H..3H, o = 3H..4H."""
    h = [0.0] * H
    c = [0.0] * H
    out = []
    for x in xs:
        z = []
        for r in range(4 * H):
            acc = b[r]
            for j in range(len(x)):
                acc += w[r][j] * x[j]
            for j in range(H):
                acc += u[r][j] * h[j]
            z.append(acc)
        nc, nh = [], []
        for j in range(H):
            i_g = sig(z[j])
            f_g = sig(z[H + j])
            g_g = math.tanh(z[2 * H + j])
            o_g = sig(z[3 * H + j])
            cj = f_g * c[j] + i_g * g_g
            nc.append(cj)
            nh.append(o_g * math.tanh(cj))
        h, c = nh, nc
        out.append(h)
    return out


def attend(hs, p, form):
    if form == "additive":
        scores = []
        for ht in hs:
            ut = [math.tanh(sum(p["attention.w"][a][j] * ht[j] for j in range(H)) + p["attention.b"][a]) for a in range(H)]
            scores.append(sum(ut[a] * p["attention.u"][a] for a in range(H)))
    else:  # position_biased
        scores = [math.tanh(sum(p["attention.v"][j] * ht[j] for j in range(H)) + p["attention.b"][t]) for t, ht in enumerate(hs)]
    m = max(scores)
    e = [math.exp(s - m) for s in scores]
    tot = sum(e)
    alphas = [x / tot for x in e]
    ctx = [sum(alphas[t] * hs[t][j] for t in range(len(hs))) for j in range(H)]
    return ctx, alphas


def forward(ids, emb, p, form, classes):
    xs = [emb[i] for i in ids if i != 0]
    conv = []
    for x in xs:
        conv.append([max(0.0, sum(p["conv.weight"][k][j] * x[j] for j in range(D)) + p["conv.bias"][k]) for k in range(K)])
    ha = lstm(conv, p["lstm_a.w"], p["lstm_a.u"], p["lstm_a.b"])[-1]
    hb = lstm(xs, p["lstm_b.w"], p["lstm_b.u"], p["lstm_b.b"])
    ctx, alphas = attend(hb, p, form)
    feat = ha + ctx
    width = 1 if classes == 2 else classes
    logits = [sum(p["head.weight"][o][j] * feat[j] for j in range(2 * H)) + p["head.bias"][o] for o in range(width)]
    if width == 1:
        probs = [sig(logits[0])]
    else:
        m = max(logits)
        e = [math.exp(z - m) for z in logits]
        probs = [x / sum(e) for x in e]
    return probs, alphas


def case(seed, form, classes):
    rng = random.Random(seed)
    emb = [[0.0] * D] + mat(rng, VOCAB - 1, D, 1.0)
    width = 1 if classes == 2 else classes
    p = {
        "conv.weight": mat(rng, K, D),
        "conv.bias": vec(rng, K),
        "lstm_a.w": mat(rng, 4 * H, K),
        "lstm_a.u": mat(rng, 4 * H, H),
        "lstm_a.b": vec(rng, 4 * H),
        "lstm_b.w": mat(rng, 4 * H, D),
        "lstm_b.u": mat(rng, 4 * H, H),
        "lstm_b.b": vec(rng, 4 * H),
    }
    if form == "additive":
        p["attention.w"] = mat(rng, H, H)
        p["attention.b"] = vec(rng, H)
        p["attention.u"] = vec(rng, H, 0.6)
    else:
        p["attention.v"] = vec(rng, H, 0.6)
        p["attention.b"] = vec(rng, N)
    p["head.weight"] = mat(rng, width, 2 * H)
    p["head.bias"] = vec(rng, width)
    inputs = [[1, 2, 3], [4, 5, 0], [5, 0, 0], [3, 3, 1]]
    expected = []
    for ids in inputs:
        probs, alphas = forward(ids, emb, p, form, classes)
        expected.append({"ids": ids, "probs": probs, "alphas": alphas})
    spec = {
        "kind": "scarn", "embed_dim": D, "max_len": N, "num_classes": classes,
        "filters": K, "hidden": H, "attention": form,
    }
    return {"spec": spec, "embeddings": emb, "params": p, "cases": expected}


if __name__ == "__main__":
    fixture = [case(1, "additive", 2), case(2, "position_biased", 3)]
    json.dump(fixture, open(sys.argv[1], "w"), indent=1)
