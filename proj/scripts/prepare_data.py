#!/usr/bin/env python3
"""Builds the five CSV datasets under data/ together with their schema files.

Bupa and red wine come from the KEEL repository copies bundled in the
`keel-ds` wheel (pip download keel-ds --no-deps). Red-wine quality scores are
rebuilt from the one-vs-rest KEEL splits, which together cover all 1599 rows.

Bank Loan, Graduate and Movie are not redistributable through any channel
reachable from the build environment, so seeded surrogates are generated with
the same roster shape (rows, feature kinds, positive rate) and realistic
marginals. Re-running this script reproduces every file byte for byte.

usage: prepare_data.py --keel-wheel keel_ds-0.2.5-py3-none-any.whl [--out data]
"""

import argparse
import csv
import io
import json
import zipfile
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    s = f"{float(v):.6f}".rstrip("0").rstrip(".")
    return s if s not in ("", "-0") else "0"


def write_schema(path, label, categorical, protected, positive_class):
    doc = {
        "label": label,
        "categorical": categorical,
        "protected": protected,
        "positive_class": positive_class,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_keel(wheel, member):
    with zipfile.ZipFile(wheel) as z:
        text = z.read(member).decode()
    rows = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        parts = [p.strip() for p in line.split(",")]
        rows.append((tuple(float(v) for v in parts[:-1]), parts[-1]))
    return rows


def build_bupa(wheel, out):
    rows = read_keel(wheel, "keel_ds/data/balanced/raw/bupa.dat")
    header = ["mcv", "alkphos", "sgpt", "sgot", "gammagt", "drinks", "selector"]
    write_csv(out / "bupa.csv", header, [list(x) + [int(label)] for x, label in rows])
    write_schema(out / "bupa.schema.json", "selector", [], [], "2")


def build_wine(wheel, out):
    raw = "keel_ds/data/imbalanced/raw/"
    r4 = read_keel(wheel, raw + "winequality-red-4.dat")
    r35 = read_keel(wheel, raw + "winequality-red-3_vs_5.dat")
    r86 = read_keel(wheel, raw + "winequality-red-8_vs_6.dat")
    r867 = read_keel(wheel, raw + "winequality-red-8_vs_6-7.dat")

    quality = defaultdict(Counter)
    for x, label in r4:
        if label == "positive":
            quality[x][4] += 1
    for x, label in r35:
        quality[x][3 if label == "positive" else 5] += 1
    for x, label in r86:
        quality[x][8 if label == "positive" else 6] += 1
    six = Counter(x for x, label in r86 if label == "negative")
    six_seven = Counter(x for x, label in r867 if label == "negative")
    for x, n in six_seven.items():
        if n - six.get(x, 0) > 0:
            quality[x][7] += n - six.get(x, 0)

    used = defaultdict(Counter)
    out_rows = []
    for x, _ in r4:
        for q in sorted(quality[x]):
            if used[x][q] < quality[x][q]:
                used[x][q] += 1
                out_rows.append(list(x) + [q])
                break
        else:
            raise SystemExit(f"unassigned wine row {x}")
    header = [
        "fixed_acidity", "volatile_acidity", "citric_acid", "residual_sugar",
        "chlorides", "free_sulfur_dioxide", "total_sulfur_dioxide", "density",
        "pH", "sulphates", "alcohol", "good_quality",
    ]
    out_rows = [r[:-1] + [1 if r[-1] >= 6 else 0] for r in out_rows]
    write_csv(out / "wine.csv", header, out_rows)
    write_schema(out / "wine.schema.json", "good_quality", [], [], "1")


def smote(rng, points, count, k=5):
    pts = np.asarray(points, dtype=float)
    scale = pts.std(axis=0)
    scale[scale == 0] = 1.0
    z = pts / scale
    d = ((z[:, None, :] - z[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d, np.inf)
    nbrs = np.argsort(d, axis=1)[:, :k]
    out = []
    for _ in range(count):
        i = rng.integers(len(pts))
        j = nbrs[i, rng.integers(k)]
        out.append(pts[i] + rng.random() * (pts[j] - pts[i]))
    return np.array(out)


def build_bank(out, seed=20240501):
    rng = np.random.default_rng(seed)
    n_neg, n_pos = 4520, 3116

    def draw(n):
        age = rng.integers(23, 68, n)
        exp = np.clip(age - 23 - rng.integers(0, 4, n) + np.rint(rng.normal(0, 1, n)), -3, 43)
        income = np.clip(np.rint(np.exp(rng.normal(np.log(62), 0.62, n))), 8, 224)
        family = rng.choice([1, 2, 3, 4], n, p=[0.29, 0.26, 0.20, 0.25])
        education = rng.choice([1, 2, 3], n, p=[0.42, 0.28, 0.30])
        ccavg = np.clip(np.round(income / 42.0 * np.exp(rng.normal(0, 0.55, n)), 1), 0, 10)
        has_mort = rng.random(n) < 0.31
        mortgage = np.where(has_mort, np.clip(np.rint(income * rng.uniform(0.9, 2.6, n) + rng.normal(0, 25, n)), 75, 635), 0)
        securities = (rng.random(n) < 0.10).astype(int)
        cd = (rng.random(n) < 0.06).astype(int)
        online = (rng.random(n) < 0.60).astype(int)
        card = (rng.random(n) < 0.29).astype(int)
        logit = (-15.5 + 0.085 * income + 0.22 * ccavg + 1.1 * (education - 1)
                 + 0.55 * (family - 1) + 0.0015 * mortgage + 2.6 * cd
                 - 0.45 * online - 0.6 * card - 0.6 * securities)
        label = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(int)
        x = np.column_stack([age, exp, income, family, ccavg, education, mortgage,
                             securities, cd, online, card]).astype(float)
        return x, label

    negs, poss = [], []
    while len(negs) < n_neg or len(poss) < 480:
        x, y = draw(5000)
        negs.extend(x[y == 0])
        poss.extend(x[y == 1])
    negs = np.array(negs[:n_neg])
    poss = np.array(poss[:480])

    numeric_cols = [0, 1, 2, 4, 6]
    synth = smote(rng, poss[:, numeric_cols], n_pos - len(poss))
    donors = poss[rng.integers(len(poss), size=len(synth))]
    extra = donors.copy()
    extra[:, numeric_cols] = synth
    pos_all = np.vstack([poss, extra])

    rows = np.vstack([negs, pos_all])
    labels = np.concatenate([np.zeros(len(negs), int), np.ones(len(pos_all), int)])
    order = rng.permutation(len(rows))
    rows, labels = rows[order], labels[order]

    income = rows[:, 2]
    med = np.median(income)
    mad = np.median(np.abs(income - med))
    rows[:, 2] = np.round(income * (50.10 / mad), 2)
    rows[:, 4] = np.round(rows[:, 4], 2)
    for c in (0, 1, 6):
        rows[:, c] = np.round(rows[:, c], 2)

    header = ["Age", "Experience", "Income", "Family", "CCAvg", "Education", "Mortgage",
              "SecuritiesAccount", "CDAccount", "Online", "CreditCard", "PersonalLoan"]
    out_rows = []
    for r, y in zip(rows, labels):
        out_rows.append([r[0], r[1], r[2], int(r[3]), r[4], int(r[5]), r[6],
                         int(r[7]), int(r[8]), int(r[9]), int(r[10]), int(y)])
    write_csv(out / "bank.csv", header, out_rows)
    write_schema(out / "bank.schema.json", "PersonalLoan",
                 ["SecuritiesAccount", "CDAccount", "Online", "CreditCard"],
                 ["Family"], "1")


def build_graduate(out, seed=20240502):
    rng = np.random.default_rng(seed)
    n = 500
    ability = rng.normal(0, 1, n)
    gre = np.clip(np.rint(316 + 10.5 * ability + rng.normal(0, 5, n)), 290, 340)
    toefl = np.clip(np.rint(107 + 5.3 * ability + rng.normal(0, 2.8, n)), 92, 120)
    rating = np.clip(np.rint(3.1 + 0.9 * ability + rng.normal(0, 0.7, n)), 1, 5)
    sop = np.clip(np.round((3.4 + 0.7 * ability + rng.normal(0, 0.6, n)) * 2) / 2, 1, 5)
    lor = np.clip(np.round((3.5 + 0.6 * ability + rng.normal(0, 0.7, n)) * 2) / 2, 1, 5)
    cgpa = np.clip(np.round(8.58 + 0.5 * ability + rng.normal(0, 0.2, n), 2), 6.8, 9.92)
    research = (rng.random(n) < 1 / (1 + np.exp(-(0.2 + 1.1 * ability)))).astype(int)
    chance = 0.72 + 0.11 * ability + 0.02 * research + rng.normal(0, 0.065, n)
    cutoff = np.quantile(chance, 0.19)
    label = (chance > cutoff).astype(int)
    header = ["GRE", "TOEFL", "UniversityRating", "SOP", "LOR", "CGPA", "Research", "Admit"]
    rows = [[int(gre[i]), int(toefl[i]), int(rating[i]), sop[i], lor[i], cgpa[i],
             int(research[i]), int(label[i])] for i in range(n)]
    write_csv(out / "graduate.csv", header, rows)
    write_schema(out / "graduate.schema.json", "Admit", ["Research"], [], "1")


def build_movie(out, seed=20240503):
    rng = np.random.default_rng(seed)
    n = 505
    buzz = rng.normal(0, 1, n)
    quality = rng.normal(0, 1, n)
    marketing = np.round(np.exp(rng.normal(3.2, 0.9, n) + 0.3 * buzz), 3)
    production = np.round(np.clip(77 + 13 * rng.normal(0, 1, n) - 4 * buzz, 20, 110), 2)
    multiplex = np.round(np.clip(0.45 + 0.11 * buzz + rng.normal(0, 0.05, n), 0.12, 0.62), 3)
    budget = np.round(np.clip(34900 + 3900 * rng.normal(0, 1, n) + 900 * buzz, 19000, 48800), 1)
    length = np.round(np.clip(142 + 28 * rng.normal(0, 1, n) - 5 * buzz, 76, 173), 1)
    actor = np.round(np.clip(8.0 + 1.05 * rng.normal(0, 1, n) - 0.2 * quality, 3.8, 9.4), 3)
    actress = np.round(np.clip(actor + rng.normal(0, 0.1, n), 4.0, 9.5), 3)
    director = np.round(np.clip(actor + rng.normal(0, 0.1, n), 3.8, 9.4), 3)
    producer = np.round(np.clip(actor + rng.normal(0, 0.1, n), 4.0, 9.6), 3)
    critic = np.round(np.clip(7.8 + 0.55 * quality + rng.normal(0, 0.45, n), 6.6, 9.4), 2)
    trailer = np.rint(np.clip(440000 + 70000 * buzz + rng.normal(0, 45000, n), 212912, 567784))
    three_d = (rng.random(n) < 0.55).astype(int)
    time_taken = np.round(np.clip(158 + 31 * rng.normal(0, 1, n), 0, 217.5), 2)
    hashtags = np.round(np.clip(rng.normal(260, 50, n) + 20 * buzz, 201, 400), 3)
    genre = rng.integers(0, 4, n)
    avg_age = np.rint(np.clip(rng.normal(39, 12, n), 3, 60))
    num_multiplex = np.rint(np.clip(545 - 105 * buzz + rng.normal(0, 60, n), 333, 868))
    collection = np.rint(np.clip(45000 + 16000 * buzz + 5000 * quality + rng.normal(0, 9000, n), 10000, 100000))
    score = (0.55 * quality + 0.35 * buzz + 0.15 * three_d - 0.25 * (avg_age - 39) / 12
             + rng.normal(0, 0.7, n))
    label = (score > np.quantile(score, 0.46)).astype(int)
    header = ["MarketingExpense", "ProductionExpense", "MultiplexCoverage", "Budget",
              "MovieLength", "LeadActorRating", "LeadActressRating", "DirectorRating",
              "ProducerRating", "CriticRating", "TrailerViews", "ThreeDAvailable",
              "TimeTaken", "TwitterHashtags", "Genre", "AvgAgeActors", "NumMultiplex",
              "Collection", "OscarNominated"]
    rows = []
    for i in range(n):
        rows.append([marketing[i], production[i], multiplex[i], budget[i], length[i],
                     actor[i], actress[i], director[i], producer[i], critic[i],
                     int(trailer[i]), int(three_d[i]), time_taken[i], hashtags[i],
                     int(genre[i]), int(avg_age[i]), int(num_multiplex[i]),
                     int(collection[i]), int(label[i])])
    write_csv(out / "movie.csv", header, rows)
    write_schema(out / "movie.schema.json", "OscarNominated", ["ThreeDAvailable"], [], "1")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--keel-wheel", required=True)
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    build_bupa(args.keel_wheel, out)
    build_wine(args.keel_wheel, out)
    build_bank(out)
    build_graduate(out)
    build_movie(out)


if __name__ == "__main__":
    main()
