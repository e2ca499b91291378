"""Census-like stand-in data for environments without the real Adult CSV.

The UCI Adult income data cannot be redistributed with this package, so this
module provides a seeded sampler over the same schema whose conditional
structure is calibrated to the published summary statistics of that dataset:
group rates, decision rates per group (risk difference 0.1989), the strong
sex leakage through relationship/marital-status/occupation, and the usual
income predictors (education, age, hours, capital gains). It is a stand-in
for pipeline experiments, not a copy of the real data; anything that needs
the genuine dataset should load it through the same schema instead.
"""

from __future__ import annotations

import importlib.resources

import numpy as np

from .data import RawTable, Schema, load_schema, schema_from_dict

P_MALE = 0.6685
P_HIGH_GIVEN_MALE = 0.3038
P_HIGH_GIVEN_FEMALE = 0.1049

EDU_NUM = {
    "Preschool": 1, "1st-4th": 2, "5th-6th": 3, "7th-8th": 4, "9th": 5,
    "10th": 6, "11th": 7, "12th": 8, "HS-grad": 9, "Some-college": 10,
    "Assoc-voc": 11, "Assoc-acdm": 12, "Bachelors": 13, "Masters": 14,
    "Prof-school": 15, "Doctorate": 16,
}

MARITAL = {
    # keyed (male, high income)
    (1, 1): {"Married-civ-spouse": 0.80, "Never-married": 0.10, "Divorced": 0.07,
             "Separated": 0.01, "Widowed": 0.005, "Married-spouse-absent": 0.012,
             "Married-AF-spouse": 0.003},
    (1, 0): {"Married-civ-spouse": 0.52, "Never-married": 0.33, "Divorced": 0.10,
             "Separated": 0.02, "Widowed": 0.02, "Married-spouse-absent": 0.008,
             "Married-AF-spouse": 0.002},
    (0, 1): {"Married-civ-spouse": 0.42, "Never-married": 0.26, "Divorced": 0.22,
             "Separated": 0.03, "Widowed": 0.06, "Married-spouse-absent": 0.008,
             "Married-AF-spouse": 0.002},
    (0, 0): {"Married-civ-spouse": 0.12, "Never-married": 0.45, "Divorced": 0.22,
             "Separated": 0.07, "Widowed": 0.12, "Married-spouse-absent": 0.019,
             "Married-AF-spouse": 0.001},
}

RELATION_UNMARRIED = {"Own-child": 0.45, "Not-in-family": 0.38, "Unmarried": 0.12,
                      "Other-relative": 0.05}
RELATION_FORMERLY = {"Not-in-family": 0.52, "Unmarried": 0.40, "Other-relative": 0.05,
                     "Own-child": 0.03}

OCCUPATION_BASE = {
    1: {"Craft-repair": 0.19, "Exec-managerial": 0.13, "Prof-specialty": 0.12,
        "Sales": 0.11, "Transport-moving": 0.09, "Machine-op-inspct": 0.08,
        "Handlers-cleaners": 0.07, "Other-service": 0.07, "Adm-clerical": 0.06,
        "Farming-fishing": 0.04, "Tech-support": 0.03, "Protective-serv": 0.025,
        "Armed-Forces": 0.004, "Priv-house-serv": 0.001},
    0: {"Adm-clerical": 0.26, "Other-service": 0.17, "Prof-specialty": 0.15,
        "Sales": 0.12, "Exec-managerial": 0.10, "Machine-op-inspct": 0.06,
        "Tech-support": 0.04, "Craft-repair": 0.02, "Handlers-cleaners": 0.02,
        "Priv-house-serv": 0.02, "Farming-fishing": 0.01, "Transport-moving": 0.01,
        "Protective-serv": 0.01, "Armed-Forces": 0.0005},
}
OCCUPATION_HIGH_BOOST = {
    "Exec-managerial": 2.3, "Prof-specialty": 1.9, "Tech-support": 1.3,
    "Protective-serv": 1.3, "Sales": 1.1, "Adm-clerical": 0.75,
    "Craft-repair": 0.75, "Machine-op-inspct": 0.5, "Transport-moving": 0.65,
    "Handlers-cleaners": 0.35, "Other-service": 0.3, "Farming-fishing": 0.5,
    "Priv-house-serv": 0.1, "Armed-Forces": 1.0,
}

EDUCATION = {
    1: {"HS-grad": 0.205, "Some-college": 0.18, "Bachelors": 0.29, "Masters": 0.125,
        "Prof-school": 0.04, "Doctorate": 0.03, "Assoc-voc": 0.05, "Assoc-acdm": 0.04,
        "11th": 0.01, "10th": 0.01, "12th": 0.005, "9th": 0.005, "7th-8th": 0.005,
        "5th-6th": 0.002, "1st-4th": 0.002, "Preschool": 0.001},
    0: {"HS-grad": 0.36, "Some-college": 0.23, "Bachelors": 0.12, "Masters": 0.03,
        "Prof-school": 0.005, "Doctorate": 0.003, "Assoc-voc": 0.05, "Assoc-acdm": 0.035,
        "11th": 0.045, "10th": 0.035, "12th": 0.015, "9th": 0.02, "7th-8th": 0.025,
        "5th-6th": 0.012, "1st-4th": 0.006, "Preschool": 0.002},
}

WORKCLASS = {
    1: {"Private": 0.64, "Self-emp-not-inc": 0.09, "Self-emp-inc": 0.085,
        "Federal-gov": 0.05, "Local-gov": 0.075, "State-gov": 0.05,
        "Without-pay": 0.0002, "Never-worked": 0.0001},
    0: {"Private": 0.76, "Self-emp-not-inc": 0.075, "Self-emp-inc": 0.025,
        "Federal-gov": 0.027, "Local-gov": 0.06, "State-gov": 0.04,
        "Without-pay": 0.0015, "Never-worked": 0.0015},
}

RACE = {"White": 0.855, "Black": 0.096, "Asian-Pac-Islander": 0.031,
        "Amer-Indian-Eskimo": 0.0096, "Other": 0.0084}

COUNTRY_OTHER = [
    "Mexico", "Philippines", "Germany", "Canada", "Puerto-Rico", "El-Salvador",
    "India", "Cuba", "England", "China", "South", "Jamaica", "Italy",
    "Dominican-Republic", "Japan", "Guatemala", "Poland", "Vietnam", "Columbia",
    "Haiti", "Portugal", "Taiwan", "Iran", "Greece", "Nicaragua", "Peru",
    "Ecuador", "France", "Ireland", "Hong", "Thailand", "Cambodia",
    "Trinadad&Tobago", "Laos", "Yugoslavia", "Outlying-US(Guam-USVI-etc)",
    "Scotland", "Honduras", "Hungary", "Holand-Netherlands",
]


def adult_schema() -> Schema:
    import json

    ref = importlib.resources.files("fairgen").joinpath("schemas/adult.json")
    return schema_from_dict(json.loads(ref.read_text()))


class _Cat:
    """Categorical sampler with a precomputed cumulative distribution."""

    def __init__(self, table: dict):
        self.names = list(table)
        probs = np.array([table[n] for n in self.names], dtype=float)
        self.cdf = np.cumsum(probs / probs.sum())

    def draw(self, rng) -> str:
        return self.names[int(np.searchsorted(self.cdf, rng.random(), side="right"))]


def _boosted(base: dict, boost: dict) -> dict:
    return {name: w * boost.get(name, 1.0) for name, w in base.items()}


_MARITAL = {key: _Cat(tab) for key, tab in MARITAL.items()}
_EDUCATION = {key: _Cat(tab) for key, tab in EDUCATION.items()}
_WORKCLASS = {key: _Cat(tab) for key, tab in WORKCLASS.items()}
_OCCUPATION = {
    (male, high): _Cat(_boosted(OCCUPATION_BASE[male], OCCUPATION_HIGH_BOOST if high else {}))
    for male in (0, 1)
    for high in (0, 1)
}
_RACE = _Cat(RACE)
_REL_UNMARRIED = _Cat(RELATION_UNMARRIED)
_REL_FORMERLY = _Cat(RELATION_FORMERLY)
# US-dominant with a geometric long tail over the other countries
_COUNTRY = _Cat(
    {"United-States": 0.897, "Mexico": 0.02}
    | dict(zip(COUNTRY_OTHER[1:], np.geomspace(1.0, 0.12, len(COUNTRY_OTHER) - 1) * 0.083))
)


def _relationship(rng, marital: str, male: int) -> str:
    if marital in ("Married-civ-spouse", "Married-AF-spouse"):
        spouse = "Husband" if male else "Wife"
        return spouse if rng.random() < 0.995 else "Other-relative"
    if marital == "Never-married":
        return _REL_UNMARRIED.draw(rng)
    return _REL_FORMERLY.draw(rng)


def _age(rng, high: int, marital: str) -> int:
    mu = 44.0 if high else 37.0
    if marital == "Never-married":
        mu -= 9.0
    elif marital == "Widowed":
        mu += 12.0
    sigma = 10.5 if high else 13.0
    return int(np.clip(round(rng.normal(mu, sigma)), 17, 90))


def _hours(rng, high: int, male: int) -> int:
    mu = 41.5 if male else 36.5
    if high:
        mu += 5.0
    return int(np.clip(round(rng.normal(mu, 10.5)), 1, 99))


def _capital_gain(rng, high: int) -> int:
    if high:
        if rng.random() < 0.58:
            return 0
        return int(np.clip(round(np.exp(rng.normal(9.2, 0.9))), 1000, 99999))
    if rng.random() < 0.957:
        return 0
    return int(np.clip(round(np.exp(rng.normal(8.1, 0.7))), 114, 41310))


def _capital_loss(rng, high: int) -> int:
    if rng.random() < (0.88 if high else 0.979):
        return 0
    mu, sd = (1920.0, 120.0) if high else (1870.0, 160.0)
    return int(np.clip(round(rng.normal(mu, sd)), 155, 2600))


def _cell_counts(n: int) -> dict[tuple[int, int], int]:
    """Exact per-(male, high) row counts by largest-remainder rounding.

    The stand-in realises the target group and decision rates exactly, so the
    table's risk difference is 0.1989 up to integer rounding at any size.
    """
    fractions = {
        (1, 1): P_MALE * P_HIGH_GIVEN_MALE,
        (1, 0): P_MALE * (1.0 - P_HIGH_GIVEN_MALE),
        (0, 1): (1.0 - P_MALE) * P_HIGH_GIVEN_FEMALE,
        (0, 0): (1.0 - P_MALE) * (1.0 - P_HIGH_GIVEN_FEMALE),
    }
    counts = {cell: int(n * f) for cell, f in fractions.items()}
    remainders = sorted(
        fractions, key=lambda cell: n * fractions[cell] - counts[cell], reverse=True
    )
    for cell in remainders[: n - sum(counts.values())]:
        counts[cell] += 1
    return counts


def sample_census_like(n: int, rng: np.random.Generator) -> RawTable:
    """Draw n rows of Adult-schema data from the calibrated generative model."""
    schema = adult_schema()
    cells = []
    for cell, count in _cell_counts(n).items():
        cells.extend([cell] * count)
    order = rng.permutation(n)
    rows = []
    for k in range(n):
        male, high = cells[order[k]]
        marital = _MARITAL[(male, high)].draw(rng)
        education = _EDUCATION[high].draw(rng)
        row = {
            "age": _age(rng, high, marital),
            "workclass": _WORKCLASS[high].draw(rng),
            "fnlwgt": int(np.clip(round(np.exp(rng.normal(12.0, 0.47))), 12285, 1490400)),
            "education": education,
            "education-num": EDU_NUM[education],
            "marital-status": marital,
            "occupation": _OCCUPATION[(male, high)].draw(rng),
            "relationship": _relationship(rng, marital, male),
            "race": _RACE.draw(rng),
            "sex": "Male" if male else "Female",
            "capital-gain": _capital_gain(rng, high),
            "capital-loss": _capital_loss(rng, high),
            "hours-per-week": _hours(rng, high, male),
            "native-country": _COUNTRY.draw(rng),
            "income": ">50K" if high else "<=50K",
        }
        rows.append(tuple(row[a.name] for a in schema.attributes))
    return RawTable(schema, tuple(rows))
