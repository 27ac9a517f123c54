"""Evaluation population: columnar data model, ingestion, masks, and RMSE.

A Population is the empirical stand-in for the joint distribution of
(covariates, outcome). It is columnar (numpy arrays) and immutable after
construction; the record order of the source file is the canonical
tie-breaking order used everywhere downstream.

Unlabeled records model units for which no prediction is available at
deployment time. Their stored prediction value is retained (so coverage
sweeps can reuse one Population) but must never influence a ranking.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyMask,
    EmptyPopulation,
    InvalidBandwidth,
    MalformedValue,
    MissingColumn,
    UnknownField,
)

HIGHER_IS_RISK = "higher_is_risk"
LOWER_IS_RISK = "lower_is_risk"
DIRECTIONS = (HIGHER_IS_RISK, LOWER_IS_RISK)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PopulationRecord:
    """Row view over one population member."""

    id: str
    outcome: float
    prediction: float
    labeled: bool
    covariates: dict[str, str]
    groups: frozenset[str]


@dataclass(frozen=True)
class Mask:
    """Boolean membership vector over a population, in record order."""

    member: np.ndarray
    description: str = ""

    def __post_init__(self):
        member = np.asarray(self.member, dtype=bool)
        object.__setattr__(self, "member", _freeze(member))

    @property
    def count(self) -> int:
        return int(self.member.sum())

    def intersect(self, other: "Mask") -> "Mask":
        if len(self.member) != len(other.member):
            raise ValueError("mask lengths differ")
        desc = " AND ".join(d for d in (self.description, other.description) if d)
        return Mask(self.member & other.member, desc)

    def __and__(self, other: "Mask") -> "Mask":
        return self.intersect(other)


@dataclass(frozen=True)
class Population:
    """Columnar evaluation population.

    covariate values are stored as strings and parsed lazily inside
    predicates; missing values are empty strings. ``predictions`` holds the
    stored score for every record; the ``labeled`` flag controls whether it
    is visible to ranking policies.
    """

    ids: tuple[str, ...]
    outcomes: np.ndarray
    predictions: np.ndarray
    labeled: np.ndarray
    outcome_direction: str = HIGHER_IS_RISK
    covariates: Mapping[str, np.ndarray] = field(default_factory=dict)
    groups: Mapping[str, np.ndarray] = field(default_factory=dict)
    weights: np.ndarray | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        outcomes = _freeze(np.asarray(self.outcomes, dtype=float))
        predictions = _freeze(np.asarray(self.predictions, dtype=float))
        labeled = _freeze(np.asarray(self.labeled, dtype=bool))
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "predictions", predictions)
        object.__setattr__(self, "labeled", labeled)
        n = len(outcomes)
        if n == 0:
            raise EmptyPopulation("population has zero records")
        if not (len(predictions) == len(labeled) == len(self.ids) == n):
            raise ValueError("column lengths differ")
        if len(set(self.ids)) != n:
            raise ValueError("record ids are not unique")
        if self.outcome_direction not in DIRECTIONS:
            raise ValueError(f"unknown outcome_direction {self.outcome_direction!r}")
        bad = labeled & ~(np.isfinite(outcomes) & np.isfinite(predictions))
        if bad.any():
            raise MalformedValue(
                f"labeled record {int(np.argmax(bad))} has non-finite outcome or prediction",
                row=int(np.argmax(bad)),
            )
        covariates = {}
        for name, col in self.covariates.items():
            arr = np.asarray(col, dtype=object)
            if len(arr) != n:
                raise ValueError(f"covariate {name!r} length differs")
            covariates[name] = _freeze(arr)
        object.__setattr__(self, "covariates", covariates)
        groups = {}
        for name, col in self.groups.items():
            arr = np.asarray(col, dtype=bool)
            if len(arr) != n:
                raise ValueError(f"group {name!r} length differs")
            groups[name] = _freeze(arr)
        object.__setattr__(self, "groups", groups)
        if self.weights is not None:
            w = _freeze(np.asarray(self.weights, dtype=float))
            if len(w) != n:
                raise ValueError("weights length differs")
            object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return len(self.outcomes)

    def record(self, i: int) -> PopulationRecord:
        return PopulationRecord(
            id=self.ids[i],
            outcome=float(self.outcomes[i]),
            prediction=float(self.predictions[i]),
            labeled=bool(self.labeled[i]),
            covariates={k: str(v[i]) for k, v in self.covariates.items()},
            groups=frozenset(k for k, v in self.groups.items() if v[i]),
        )

    def full_mask(self, description: str = "all records") -> Mask:
        return Mask(np.ones(self.size, dtype=bool), description)

    def labeled_share(self) -> float:
        return float(self.labeled.mean())

    def with_predictions(self, predictions: np.ndarray) -> "Population":
        return replace(self, predictions=np.array(predictions, dtype=float))

    def with_labeled(self, labeled: np.ndarray) -> "Population":
        return replace(self, labeled=np.array(labeled, dtype=bool))


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

_TRUE_STRINGS = {"1", "true", "t", "yes", "y"}
_FALSE_STRINGS = {"0", "false", "f", "no", "n", ""}


def _parse_bool(text: str, row: int, column: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE_STRINGS:
        return True
    if low in _FALSE_STRINGS:
        return False
    raise MalformedValue(f"column {column!r} row {row}: {text!r} is not boolean", row=row)


def load_population(
    source: str | io.TextIOBase,
    *,
    outcome_col: str,
    prediction_col: str,
    labeled_col: str | None = None,
    weight_col: str | None = None,
    group_cols: Sequence[str] = (),
    id_col: str | None = None,
    outcome_direction: str = HIGHER_IS_RISK,
    delimiter: str | None = None,
    missing: str = "",
    metadata: Mapping[str, str] | None = None,
) -> Population:
    """Parse delimited text into a Population.

    ``source`` is a path or an open text stream. The delimiter is
    autodetected between comma and tab unless given. Columns not mapped to
    outcome/prediction/labeled/weight/groups/id become string covariates.
    A missing ``labeled_col`` means every record is labeled. Values equal
    to the ``missing`` sentinel are stored as empty strings.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_population(
                fh,
                outcome_col=outcome_col,
                prediction_col=prediction_col,
                labeled_col=labeled_col,
                weight_col=weight_col,
                group_cols=group_cols,
                id_col=id_col,
                outcome_direction=outcome_direction,
                delimiter=delimiter,
                missing=missing,
                metadata=metadata,
            )

    text = source.read()
    if delimiter is None:
        first_line = text.split("\n", 1)[0]
        delimiter = "\t" if first_line.count("\t") > first_line.count(",") else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = [r for r in reader if r]
    if not rows:
        raise EmptyPopulation("no header row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptyPopulation("zero data rows")

    def col_index(name: str) -> int:
        try:
            return header.index(name)
        except ValueError:
            raise MissingColumn(f"column {name!r} not in header {header}") from None

    i_outcome = col_index(outcome_col)
    i_pred = col_index(prediction_col)
    i_labeled = col_index(labeled_col) if labeled_col else None
    i_weight = col_index(weight_col) if weight_col else None
    i_id = col_index(id_col) if id_col else None
    group_idx = {g: col_index(g) for g in group_cols}
    special = {i_outcome, i_pred} | {i for i in (i_labeled, i_weight, i_id) if i is not None}
    special |= set(group_idx.values())
    covariate_idx = {h: i for i, h in enumerate(header) if i not in special}

    n = len(body)
    outcomes = np.empty(n)
    predictions = np.empty(n)
    labeled = np.ones(n, dtype=bool)
    weights = np.ones(n) if i_weight is not None else None
    ids: list[str] = []
    groups = {g: np.zeros(n, dtype=bool) for g in group_idx}
    covariates = {c: np.empty(n, dtype=object) for c in covariate_idx}

    def parse_float(text_value: str, row: int, column: str, required: bool) -> float:
        raw = text_value.strip()
        if raw == "" or raw == missing:
            if required:
                raise MalformedValue(f"column {column!r} row {row}: value missing", row=row)
            return np.nan
        try:
            return float(raw)
        except ValueError:
            if required:
                raise MalformedValue(
                    f"column {column!r} row {row}: {raw!r} is not numeric", row=row
                ) from None
            return np.nan

    for r, row in enumerate(body):
        if len(row) != len(header):
            raise MalformedValue(f"row {r}: expected {len(header)} fields, got {len(row)}", row=r)
        is_labeled = True
        if i_labeled is not None:
            is_labeled = _parse_bool(row[i_labeled], r, labeled_col or "labeled")
        labeled[r] = is_labeled
        outcomes[r] = parse_float(row[i_outcome], r, outcome_col, required=is_labeled)
        predictions[r] = parse_float(row[i_pred], r, prediction_col, required=is_labeled)
        if weights is not None:
            weights[r] = parse_float(row[i_weight], r, weight_col or "weight", required=True)
        ids.append(row[i_id].strip() if i_id is not None else f"r{r}")
        for g, gi in group_idx.items():
            groups[g][r] = _parse_bool(row[gi], r, g)
        for c, ci in covariate_idx.items():
            val = row[ci].strip()
            covariates[c][r] = "" if val == missing else val

    return Population(
        ids=tuple(ids),
        outcomes=outcomes,
        predictions=predictions,
        labeled=labeled,
        outcome_direction=outcome_direction,
        covariates=covariates,
        groups=groups,
        weights=weights,
        metadata=dict(metadata or {}),
    )


def save_population(pop: Population, target: str | io.TextIOBase, *, delimiter: str = ",") -> None:
    """Serialize in the ingestion format; numeric values keep full precision."""
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            save_population(pop, fh, delimiter=delimiter)
            return
    writer = csv.writer(target, delimiter=delimiter, lineterminator="\n")
    group_names = list(pop.groups)
    cov_names = list(pop.covariates)
    header = ["id", "outcome", "prediction", "labeled", *group_names, *cov_names]
    if pop.weights is not None:
        header.append("weight")
    writer.writerow(header)
    for i in range(pop.size):
        row = [
            pop.ids[i],
            repr(float(pop.outcomes[i])),
            repr(float(pop.predictions[i])),
            "true" if pop.labeled[i] else "false",
            *("true" if pop.groups[g][i] else "false" for g in group_names),
            *(str(pop.covariates[c][i]) for c in cov_names),
        ]
        if pop.weights is not None:
            row.append(repr(float(pop.weights[i])))
        writer.writerow(row)


# ---------------------------------------------------------------------------
# Predicate masks
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<op><=|>=|!=|==|=|<|>)
      | (?P<word>[A-Za-z_][A-Za-z0-9_.]*)
      | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
      | (?P<string>'[^']*'|"[^"]*")
    )""",
    re.VERBOSE,
)


def _tokenize(predicate: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(predicate):
        m = _TOKEN_RE.match(predicate, pos)
        if not m or m.end() == pos:
            if predicate[pos:].strip() == "":
                break
            raise UnknownField(f"cannot parse predicate near {predicate[pos:pos + 20]!r}")
        pos = m.end()
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
    return tokens


def covariate_mask(pop: Population, predicate: str) -> Mask:
    """Evaluate a declarative predicate over covariates and group flags.

    Grammar: conjunctions (AND) of atoms. Atoms are ``field op value`` with
    op in {=, ==, !=, <, <=, >, >=}, ``field IS (NOT) MISSING``, a bare
    group name, or the literal TRUE. Numeric comparison parses the stored
    string lazily; records whose value does not parse are non-matches.
    """
    tokens = _tokenize(predicate)
    n = pop.size
    member = np.ones(n, dtype=bool)
    i = 0

    def field_values(name: str) -> tuple[np.ndarray | None, np.ndarray | None]:
        if name in pop.covariates:
            return np.asarray(pop.covariates[name], dtype=object), None
        if name in pop.groups:
            return None, np.asarray(pop.groups[name], dtype=bool)
        raise UnknownField(f"unknown field {name!r}")

    def parse_atom() -> np.ndarray:
        nonlocal i
        kind, value = tokens[i]
        if kind != "word":
            raise UnknownField(f"expected field name, got {value!r}")
        if value.upper() == "TRUE":
            i += 1
            return np.ones(n, dtype=bool)
        if value.upper() == "FALSE":
            i += 1
            return np.zeros(n, dtype=bool)
        name = value
        i += 1
        strings, flags = field_values(name)
        if i >= len(tokens) or (tokens[i][0] == "word" and tokens[i][1].upper() == "AND"):
            if flags is None:
                raise UnknownField(f"bare atom {name!r} must be a group flag")
            return flags.copy()
        kind, value = tokens[i]
        if kind == "word" and value.upper() == "IS":
            i += 1
            negate = False
            if i < len(tokens) and tokens[i][1].upper() == "NOT":
                negate = True
                i += 1
            if i >= len(tokens) or tokens[i][1].upper() != "MISSING":
                raise UnknownField("expected MISSING after IS")
            i += 1
            if strings is None:
                missing = np.zeros(n, dtype=bool)
            else:
                missing = np.array([s == "" for s in strings], dtype=bool)
            return ~missing if negate else missing
        if kind != "op":
            raise UnknownField(f"expected operator after {name!r}, got {value!r}")
        op = "==" if value == "=" else value
        i += 1
        if i >= len(tokens):
            raise UnknownField(f"missing comparison value after {name!r} {op}")
        vkind, vtext = tokens[i]
        i += 1
        if flags is not None:
            if vkind not in ("word", "number"):
                vtext = vtext[1:-1]
            want = vtext.strip().lower() in _TRUE_STRINGS
            out = flags == want
            return out if op == "==" else ~out if op == "!=" else _bad_op(op, name)
        if vkind == "number":
            parsed = np.full(n, np.nan)
            for j, s in enumerate(strings):
                try:
                    parsed[j] = float(s)
                except (TypeError, ValueError):
                    pass
            target = float(vtext)
            with np.errstate(invalid="ignore"):
                if op == "==":
                    return parsed == target
                if op == "!=":
                    return np.isfinite(parsed) & (parsed != target)
                if op == "<":
                    return parsed < target
                if op == "<=":
                    return parsed <= target
                if op == ">":
                    return parsed > target
                if op == ">=":
                    return parsed >= target
        else:
            literal = vtext[1:-1] if vkind == "string" else vtext
            eq = np.array([s == literal for s in strings], dtype=bool)
            if op == "==":
                return eq
            if op == "!=":
                return ~eq
            raise UnknownField(f"operator {op} needs a numeric value")
        raise UnknownField(f"unsupported operator {op}")

    def _bad_op(op: str, name: str):
        raise UnknownField(f"operator {op} not valid for group flag {name!r}")

    if not tokens:
        raise UnknownField("empty predicate")
    member = parse_atom()
    while i < len(tokens):
        kind, value = tokens[i]
        if kind != "word" or value.upper() != "AND":
            raise UnknownField(f"expected AND, got {value!r}")
        i += 1
        member &= parse_atom()
    return Mask(member, predicate)


def prediction_band_mask(
    pop: Population,
    *,
    cutoff_rank: int | None = None,
    bandwidth: float | None = None,
    cutoff_score: float | None = None,
    epsilon: float | None = None,
) -> Mask:
    """Select records near the allocation decision boundary.

    Rank mode (``cutoff_rank`` + ``bandwidth``): ranks labeled records by
    prediction, best-first per outcome direction, and keeps a window of
    round(bandwidth * N) records centered on the cutoff rank (window
    shifted, never shrunk, at the edges). Score mode (``cutoff_score`` +
    ``epsilon``): keeps labeled records with |prediction - cutoff| < epsilon.
    """
    labeled_idx = np.flatnonzero(pop.labeled)
    member = np.zeros(pop.size, dtype=bool)
    if cutoff_score is not None or epsilon is not None:
        if cutoff_score is None or epsilon is None or epsilon <= 0:
            raise InvalidBandwidth("score mode needs cutoff_score and epsilon > 0")
        preds = pop.predictions[labeled_idx]
        member[labeled_idx] = np.abs(preds - cutoff_score) < epsilon
        return Mask(member, f"|prediction - {cutoff_score}| < {epsilon}")

    if cutoff_rank is None or bandwidth is None:
        raise InvalidBandwidth("rank mode needs cutoff_rank and bandwidth")
    if not 0 < bandwidth <= 1:
        raise InvalidBandwidth(f"bandwidth {bandwidth} not in (0, 1]")
    n_labeled = len(labeled_idx)
    if n_labeled == 0:
        raise EmptyMask("no labeled records to rank")
    scores = pop.predictions[labeled_idx]
    descending = pop.outcome_direction == HIGHER_IS_RISK
    order = np.lexsort((labeled_idx, -scores if descending else scores))
    n_band = min(n_labeled, int(round(bandwidth * pop.size)))
    lo = cutoff_rank - n_band // 2
    lo = max(0, min(lo, n_labeled - n_band))
    member[labeled_idx[order[lo:lo + n_band]]] = True
    return Mask(member, f"rank band of {n_band} records at cutoff {cutoff_rank}")


def rmse(pop: Population, mask: Mask | None = None) -> float:
    """Root-mean-squared prediction error over masked labeled records."""
    member = pop.labeled if mask is None else (mask.member & pop.labeled)
    if not member.any():
        raise EmptyMask("mask selects no labeled records")
    err = pop.predictions[member] - pop.outcomes[member]
    return float(np.sqrt(np.mean(err * err)))
