"""Finite scans that track character values of congruence quotients."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cache import TableCache
from .chartable import CharacterTable, character_table
from .groups import (BudgetExceeded, DEFAULT_ORDER_BUDGET, IntegerMatrix, _int_det, build_group,
                     center, conjugacy_classes, reduce)

FAMILIES = ("sl", "aff")
FILTERS = ("nontrivial", "faithful")


@dataclass
class ScanPlan:
    """What to scan: a family of quotients, a list of moduli and integer probes."""

    family: str
    d: int
    moduli: list[int]
    probes: list[IntegerMatrix]
    filter: str = "nontrivial"
    output: str | None = None
    order_budget: int = DEFAULT_ORDER_BUDGET
    class_budget: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.filter not in FILTERS:
            raise ValueError(f"filter must be one of {FILTERS}")
        if not self.moduli or any(b <= a for a, b in zip(self.moduli, self.moduli[1:])):
            raise ValueError("moduli must be nonempty and strictly increasing")
        if any(m < 2 for m in self.moduli):
            raise ValueError("moduli must be at least 2")
        if not self.probes:
            raise ValueError("at least one probe is required")
        n = self.d + 1 if self.family == "aff" else self.d
        for g in self.probes:
            if g.dim != n:
                raise ValueError(f"probe of size {g.dim} does not fit {self.family}({self.d}, .)")
            if self.family == "aff":
                if any(g.rows[n - 1][j] != (1 if j == n - 1 else 0) for j in range(n)):
                    raise ValueError("affine probe must have last row (0, ..., 0, 1)")
                if _int_det([r[: n - 1] for r in g.rows[: n - 1]]) != 1:
                    raise ValueError("linear part of the probe must have determinant 1")

    def descriptor(self, m: int) -> str:
        return f"{self.family}({self.d},{m})"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["probes"] = [[list(r) for r in g.rows] for g in self.probes]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "ScanPlan":
        data = dict(data)
        allow = data.get("family") == "aff"
        data["probes"] = [IntegerMatrix.of(np.array(p, dtype=np.int64), allow_gl=allow)
                          for p in data.get("probes", [])]
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown plan fields {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ScanPlan":
        return cls.from_dict(json.loads(text))


@dataclass
class SeriesEntry:
    modulus: int
    probe: int
    value: float | None
    row: int | None
    degree: int | None
    exact: str | None  # character value in Z[zeta_order] as a coefficient list
    order: int | None
    central: bool = False
    note: str = ""


@dataclass
class VanishingSeries:
    label: str
    entries: list[SeriesEntry]
    truncated_at: int | None = None
    flags: list[str] = field(default_factory=list)
    cache_hits: int = 0

    def values(self, probe: int = 0) -> list[float]:
        return [e.value for e in self.entries if e.probe == probe and e.value is not None]

    def running_min(self, probe: int = 0) -> list[float]:
        return list(np.minimum.accumulate(self.values(probe)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["modulus", "probe", "max_abs_value", "row", "degree", "character_value",
                    "cyclotomic_order", "central", "note"])
        for e in self.entries:
            w.writerow([e.modulus, e.probe, "" if e.value is None else f"{e.value:.12g}",
                        "" if e.row is None else e.row, "" if e.degree is None else e.degree,
                        e.exact or "", e.order or "", int(e.central), e.note])
        return buf.getvalue()

    def manifest(self, plan: dict | None = None, config: dict | None = None) -> dict:
        csv_text = self.to_csv()
        return {
            "version": __version__,
            "label": self.label,
            "plan": plan,
            "config": config,
            "csv_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
            "truncated_at": self.truncated_at,
            "flags": self.flags,
            "cache_hits": self.cache_hits,
            "witnesses": [{"modulus": e.modulus, "probe": e.probe, "row": e.row,
                           "degree": e.degree} for e in self.entries],
        }

    def write(self, path: str | Path, plan: dict | None = None, config: dict | None = None) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        man = self.manifest(plan, config)
        path.with_suffix(".manifest.json").write_text(json.dumps(man, sort_keys=True, indent=1) + "\n")


def exact_coefficients(table: CharacterTable, row: int, cls: int) -> str:
    """Nonzero [exponent, coefficient] pairs of the reduced value in Z[zeta_order]."""
    coeffs = table.values[row][cls].canonical()
    return json.dumps([[j, int(c)] for j, c in enumerate(coeffs) if c], separators=(",", ":"))


def row_filter(table: CharacterTable, kind: str) -> list[int]:
    rows = range(1, table.k)
    if kind == "faithful":
        return [i for i in rows if table.is_faithful(i)]
    return list(rows)


def _best_row(table: CharacterTable, rows: Sequence[int], cls: int) -> tuple[float, int] | None:
    if not rows:
        return None
    vals = np.array([abs(table.normalized(i)[cls]) for i in rows])
    keyed = np.round(vals, 12)
    j = int(np.flatnonzero(keyed == keyed.max())[0])
    return float(vals[j]), int(rows[j])


def _full_sweep(table: CharacterTable, kind: str, cls: int) -> float:
    """Independent recomputation straight from the exact values of every row."""
    best = -1.0
    for i in range(table.k):
        if i == 0:
            continue
        if kind == "faithful" and not table.is_faithful(i):
            continue
        best = max(best, abs(complex(table.values[i][cls])) / int(table.degrees[i]))
    return best


def _scan_modulus(args) -> tuple[list[SeriesEntry], bool, str | None]:
    desc, m, probes, kind, order_budget, class_budget, cache_dir = args
    try:
        group = build_group(desc, order_budget)
        if cache_dir is not None:
            cache = TableCache(cache_dir)
            table = cache.get_or_compute(desc, group, class_budget=class_budget)
            hit = cache.hits > 0
        else:
            table, hit = character_table(group, class_budget=class_budget), False
    except BudgetExceeded as exc:
        return [], False, str(exc)
    classes = conjugacy_classes(group)
    zc = set(center(group).tolist())
    rows = row_filter(table, kind)
    out = []
    for pi, probe in enumerate(probes):
        idx = reduce(probe, group)
        cls = int(classes.class_of[idx])
        best = _best_row(table, rows, cls)
        central = idx in zc
        note = "central probe: vanishing not expected" if central else ""
        if best is None:
            out.append(SeriesEntry(m, pi, None, None, None, None, None, central,
                                   f"no {kind} rows"))
            continue
        value, row = best
        check = _full_sweep(table, kind, cls)
        if abs(check - value) > 1e-9:
            raise AssertionError(f"double-entry check failed at modulus {m}: {value} vs {check}")
        out.append(SeriesEntry(m, pi, value, row, int(table.degrees[row]),
                               exact_coefficients(table, row, cls), int(table.exponent), central, note))
    return out, hit, None


def vanishing_scan(plan: ScanPlan, cache_dir: str | Path | None = None,
                   workers: int = 1) -> VanishingSeries:
    """Max over filtered rows of |normalized character| at each reduced probe, per modulus.

    Stops at the first modulus whose group or table exceeds a budget and
    records the truncation.
    """
    jobs = [(plan.descriptor(m), m, plan.probes, plan.filter, plan.order_budget,
             plan.class_budget, None if cache_dir is None else str(cache_dir)) for m in plan.moduli]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan_modulus, jobs))
    else:
        results = [_scan_modulus(j) for j in jobs]
    series = VanishingSeries(f"{plan.family}({plan.d},m) {plan.filter}", [])
    for m, (entries, hit, err) in zip(plan.moduli, results):
        if err is not None:
            series.truncated_at = m
            series.flags.append(f"truncated at modulus {m}: {err}")
            break
        series.entries.extend(entries)
        series.cache_hits += int(hit)
    if any(e.central for e in series.entries):
        series.flags.append("central probe: vanishing not expected")
    if plan.family == "aff" and plan.d < 3:
        series.flags.append("d < 3: outside the hypothesis of the semidirect theorem")
    if plan.output:
        series.write(plan.output, plan.to_dict())
    return series


def semidirect_scan(d: int, primes: Sequence[int], probe: tuple, cache_dir=None,
                    order_budget: int = DEFAULT_ORDER_BUDGET, workers: int = 1) -> VanishingSeries:
    """Vanishing scan over SL_d(F_p) x| F_p^d for an integer probe (A, v).

    Rows are restricted to faithful ones. A normal subgroup meeting the
    translations trivially centralizes them and so is trivial, hence these are
    exactly the rows that do not factor through SL_d(F_p).
    """
    a, v = probe
    a = np.asarray(a, dtype=np.int64)
    if a.shape != (d, d) or _int_det(a.tolist()) != 1:
        raise ValueError("probe linear part must lie in SL_d(Z)")
    plan = ScanPlan("aff", d, list(primes), [IntegerMatrix.affine(a, v)], "faithful",
                    order_budget=order_budget)
    return vanishing_scan(plan, cache_dir, workers)


@dataclass
class Census:
    family: str
    d: int
    degrees: dict  # modulus -> sorted degree list
    linear: dict  # modulus -> number of linear characters
    aggregate: dict  # degree -> number of moduli in which it occurs
    truncated_at: int | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["modulus", "degree", "count"])
        for m, ds in self.degrees.items():
            for deg, c in sorted(Counter(ds).items()):
                w.writerow([m, deg, c])
        return buf.getvalue()


def dimension_census(moduli: Sequence[int], family: str = "sl", d: int = 2, cache_dir=None,
                     order_budget: int = DEFAULT_ORDER_BUDGET) -> Census:
    """Irreducible degrees per modulus and how often each degree recurs."""
    degrees, linear, truncated = {}, {}, None
    for m in moduli:
        desc = f"{family}({d},{m})"
        try:
            group = build_group(desc, order_budget)
            table = (TableCache(cache_dir).get_or_compute(desc, group) if cache_dir is not None
                     else character_table(group))
        except BudgetExceeded:
            truncated = m
            break
        degrees[m] = sorted(int(x) for x in table.degrees)
        linear[m] = len(table.linear_rows())
    agg = Counter(deg for ds in degrees.values() for deg in set(ds))
    return Census(family, d, degrees, linear, dict(sorted(agg.items())), truncated)
