"""
Run reports: newline-delimited JSON for single runs, CSV for sweeps.

A report file holds one ``run`` header line, then one line per inner IPM
iteration (``row``), one per refinement round (``outer``), one per instrumented
oracle call (``call``) and a final ``calls`` line with the per-call query
log.  ``RunReport.from_ndjson``
inverts ``to_ndjson`` exactly.
"""
import csv
from dataclasses import asdict, dataclass, field
import io
import json

__all__ = ["SCHEMA_VERSION", "CSV_COLUMNS", "RunReport", "write_csv", "read_csv"]

SCHEMA_VERSION = 1
CSV_COLUMNS = ("n", "m", "seed", "algo", "backend", "iters", "outer_iters", "queries",
               "classical_ops", "gap", "wall_ms")


@dataclass
class RunReport:
    instance: dict
    config: dict
    rows: list = field(default_factory=list)
    outer_rows: list = field(default_factory=list)
    call_queries: list = field(default_factory=list)
    call_records: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)
    outcome: dict = field(default_factory=lambda: {"status": "converged"})
    summary: dict = field(default_factory=dict)
    schema: int = SCHEMA_VERSION

    def finalize(self, wall_time=None):
        """Fill ``totals`` from the rows.

        Work done outside the inner iterations (the projections of a
        refinement round) is carried by the ``extra_*`` fields of the outer
        rows and included in the totals.
        """
        self.totals = {
            "iterations": len(self.rows),
            "outer_iterations": len(self.outer_rows),
            "oracle_calls": self._sum("oracle_calls"),
            "queries": self._sum("queries"),
            "classical_ops": self._sum("classical_ops"),
            "wall_time": sum(r.get("wall_time", 0.0) for r in self.rows)
            if wall_time is None else wall_time,
        }
        return self

    def _sum(self, key):
        return (sum(r.get(key, 0) for r in self.rows)
                + sum(r.get("extra_" + key, 0) for r in self.outer_rows))

    @property
    def converged(self):
        return self.outcome.get("status") == "converged"

    def consistent(self):
        """Totals agree with the rows and with the per-call query log."""
        t = self.totals
        return (t["iterations"] == len(self.rows)
                and t["outer_iterations"] == len(self.outer_rows)
                and t["queries"] == self._sum("queries")
                and t["classical_ops"] == self._sum("classical_ops")
                and t["queries"] == sum(self.call_queries)
                and t["oracle_calls"] == len(self.call_queries))

    def to_ndjson(self):
        head = {"schema": self.schema, "type": "run", "instance": self.instance,
                "config": self.config, "totals": self.totals, "outcome": self.outcome,
                "summary": self.summary}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps({"type": "row", **r}, sort_keys=True) for r in self.rows]
        lines += [json.dumps({"type": "outer", **r}, sort_keys=True) for r in self.outer_rows]
        lines += [json.dumps({"type": "call", **r}, sort_keys=True) for r in self.call_records]
        lines.append(json.dumps({"type": "calls", "queries": self.call_queries}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ndjson(cls, text):
        rows, outer, calls, records, head = [], [], [], [], None
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.pop("type")
            if kind == "run":
                head = rec
            elif kind == "row":
                rows.append(rec)
            elif kind == "outer":
                outer.append(rec)
            elif kind == "call":
                records.append(rec)
            elif kind == "calls":
                calls = rec["queries"]
            else:
                raise ValueError(f"unknown record type {kind!r}")
        if head is None:
            raise ValueError("report has no run header")
        if head.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {head.get('schema')!r}")
        return cls(head["instance"], head["config"], rows, outer, calls, records,
                   head["totals"], head["outcome"], head["summary"], head["schema"])

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_ndjson())

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.from_ndjson(fh.read())

    def csv_row(self):
        return {
            "n": self.instance.get("n"),
            "m": self.instance.get("m"),
            "seed": self.instance.get("seed"),
            "algo": self.config.get("algo"),
            "backend": self.config.get("backend"),
            "iters": self.totals.get("iterations"),
            "outer_iters": self.totals.get("outer_iterations"),
            "queries": self.totals.get("queries"),
            "classical_ops": self.totals.get("classical_ops"),
            "gap": self.summary.get("gap"),
            "wall_ms": round(1000 * self.totals.get("wall_time", 0.0), 3),
        }

    def to_dict(self):
        return asdict(self)


def write_csv(rows, path=None):
    """Write sweep rows (dicts keyed by ``CSV_COLUMNS``); returns the CSV text."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
