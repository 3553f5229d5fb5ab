"""Comtrade-style CSV ingestion and the net-trade digraph.

Rows are streamed with the standard :mod:`csv` reader. Flows for one
commodity prefix and year are summed per (reporter, partner, flow) before
mirror reconciliation: the export ``j -> l`` is the larger of ``j``'s export
report and ``l``'s import report. Each country pair then contributes at most
one edge, pointing from the net exporter, weighted by the net value.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .digraph import WeightedDigraph, from_arrays

log = logging.getLogger(__name__)

FIELDS = ("reporter", "partner", "flow", "commodity", "year", "value")

# column names of the public Comtrade bulk downloads
DEFAULT_COLUMNS = {
    "reporter": "reporterISO",
    "partner": "partnerISO",
    "flow": "flowCode",
    "commodity": "cmdCode",
    "year": "refYear",
    "value": "primaryValue",
}

_FLOW_NAMES = {
    "x": "export",
    "export": "export",
    "exports": "export",
    "m": "import",
    "import": "import",
    "imports": "import",
}


class TradeError(ValueError):
    pass


@dataclass(frozen=True)
class TradeRecord:
    reporter: str
    partner: str
    flow: str  # "export" or "import"
    commodity: str
    year: int
    value: float

    def __post_init__(self):
        if self.flow not in ("export", "import"):
            raise TradeError(f"unknown flow {self.flow!r}")
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise TradeError(f"trade value must be finite and nonnegative, got {self.value}")
        if self.reporter == self.partner:
            raise TradeError(f"reporter and partner are both {self.reporter!r}")


class CountryIndex:
    """Bijection between country codes and dense vertex ids (sorted by code)."""

    def __init__(self, codes: Iterable[str]):
        self.codes = tuple(sorted(set(codes)))
        self._ids = {c: i for i, c in enumerate(self.codes)}

    @property
    def size(self) -> int:
        return len(self.codes)

    def __len__(self) -> int:
        return len(self.codes)

    def __contains__(self, code: str) -> bool:
        return code in self._ids

    def id(self, code: str) -> int:
        return self._ids[code]

    def code(self, i: int) -> str:
        return self.codes[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, CountryIndex) and self.codes == other.codes


@dataclass
class ParseDiagnostics:
    rows_read: int = 0
    kept: int = 0
    filtered_out: int = 0
    skipped_malformed: int = 0
    skipped_negative: int = 0
    skipped_self_trade: int = 0
    skipped_flow: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _parse_row(row: Mapping[str, str], cols: Mapping[str, str]):
    """Returns a record, or a string naming why the row was skipped."""
    try:
        reporter = row[cols["reporter"]].strip()
        partner = row[cols["partner"]].strip()
        flow = _FLOW_NAMES.get(row[cols["flow"]].strip().lower())
        commodity = row[cols["commodity"]].strip()
        year = int(row[cols["year"]].strip())
        value = float(row[cols["value"]].strip())
    except (TypeError, ValueError, AttributeError):
        return "malformed"
    if not reporter or not partner or not commodity or not math.isfinite(value):
        return "malformed"
    if flow is None:
        return "flow"
    if value < 0:
        return "negative"
    if reporter == partner:
        return "self_trade"
    return TradeRecord(reporter, partner, flow, commodity, year, value)


def iter_trade_csv(
    path: str | Path,
    column_map: Mapping[str, str] | None = None,
    commodity_prefix: str | None = None,
    years: Iterable[int] | None = None,
    delimiter: str = ",",
    diagnostics: ParseDiagnostics | None = None,
) -> Iterator[TradeRecord]:
    """Stream validated records matching the commodity prefix and years."""
    cols = dict(DEFAULT_COLUMNS)
    cols.update(column_map or {})
    diag = diagnostics if diagnostics is not None else ParseDiagnostics()
    wanted = None if years is None else {int(y) for y in years}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            return
        missing = [f"{k}={v}" for k, v in cols.items() if k in FIELDS and v not in reader.fieldnames]
        if missing:
            raise TradeError(f"{path}: mapped columns not in header: {', '.join(missing)}")
        for row in reader:
            diag.rows_read += 1
            rec = _parse_row(row, cols)
            if isinstance(rec, str):
                setattr(diag, f"skipped_{rec}", getattr(diag, f"skipped_{rec}") + 1)
                continue
            if commodity_prefix is not None and not rec.commodity.startswith(commodity_prefix):
                diag.filtered_out += 1
                continue
            if wanted is not None and rec.year not in wanted:
                diag.filtered_out += 1
                continue
            diag.kept += 1
            yield rec


def parse_trade_csv(
    path: str | Path,
    column_map: Mapping[str, str] | None = None,
    commodity_prefix: str | None = None,
    years: Iterable[int] | None = None,
    delimiter: str = ",",
) -> tuple[list[TradeRecord], ParseDiagnostics]:
    """Read a trade CSV into records plus a count of what was skipped and why.

    Raises
    ------
    OSError
        If the file cannot be opened.
    TradeError
        If a mapped column is absent from the header.
    """
    diag = ParseDiagnostics()
    records = list(iter_trade_csv(path, column_map, commodity_prefix, years, delimiter, diag))
    return records, diag


@dataclass
class ExportMatrix:
    """Reconciled exports ``values[(j, l)]`` for one commodity group and year."""

    values: dict
    year: int | None
    reconciled_by_max: int = 0  # pairs where both views existed and disagreed
    both_views: int = 0

    def codes(self) -> set:
        return {c for pair in self.values for c in pair}


def reconcile_exports(records: Iterable[TradeRecord]) -> ExportMatrix:
    """Aggregate flows per pair, then take the larger of the two mirror reports."""
    exp_view = defaultdict(float)  # (exporter, importer) as reported by the exporter
    imp_view = defaultdict(float)  # (exporter, importer) as reported by the importer
    years = set()
    for r in records:
        years.add(r.year)
        if r.flow == "export":
            exp_view[(r.reporter, r.partner)] += r.value
        else:
            imp_view[(r.partner, r.reporter)] += r.value
    if len(years) > 1:
        raise TradeError(f"records span several years: {sorted(years)}")
    values = {}
    by_max = both = 0
    for pair in exp_view.keys() | imp_view.keys():
        a, b = exp_view.get(pair), imp_view.get(pair)
        if a is not None and b is not None:
            both += 1
            by_max += a != b
            values[pair] = max(a, b)
        else:
            values[pair] = a if a is not None else b
    return ExportMatrix(values, years.pop() if years else None, by_max, both)


@dataclass
class TradeGraph:
    graph: WeightedDigraph
    index: CountryIndex
    diagnostics: dict = field(default_factory=dict)


def net_trade_graph(e: ExportMatrix | Mapping | np.ndarray, index: CountryIndex) -> TradeGraph:
    """One edge per country pair from the net exporter, weighted by the net value.

    ``e`` is an :class:`ExportMatrix`, a ``{(code_j, code_l): value}`` map or a
    dense square array over ``index``. Codes outside the index are reported in
    ``diagnostics["unknown_codes"]`` and dropped.
    """
    n = index.size
    unknown = set()
    if isinstance(e, np.ndarray):
        if e.shape != (n, n):
            raise TradeError(f"export matrix shape {e.shape} does not match index size {n}")
        src, dst = np.nonzero(e)
        vals = e[src, dst]
    else:
        pairs = e.values if isinstance(e, ExportMatrix) else e
        src, dst, vals = [], [], []
        for (a, b), v in pairs.items():
            if a not in index or b not in index:
                unknown.update(c for c in (a, b) if c not in index)
                continue
            src.append(index.id(a))
            dst.append(index.id(b))
            vals.append(v)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    # "net" keeps the heavier direction with the absolute difference as weight
    g = from_arrays(src, dst, vals, n, merge_policy="net")
    diag = {"unknown_codes": sorted(unknown), "pairs": int(src.size), "edges": g.m}
    if unknown:
        log.info("%d country codes outside the index were dropped", len(unknown))
    return TradeGraph(g, index, diag)


def build_trade_graph(records: Iterable[TradeRecord], index: CountryIndex | None = None) -> TradeGraph:
    """Reconcile one year's records and build its net-trade digraph."""
    e = reconcile_exports(records)
    if index is None:
        index = CountryIndex(e.codes())
    tg = net_trade_graph(e, index)
    tg.diagnostics.update(year=e.year, reconciled_by_max=e.reconciled_by_max, both_views=e.both_views)
    return tg
