"""Consistency check of the published rate-distortion tables.

Each bundled row is re-derived from its own MSE and BPP columns; rows whose
printed PSNR or CR disagree with the recomputed values are itemised.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

from . import metrics

PSNR_TOL = 0.05
CR_TOL = 0.02
MIN_CONSISTENT_FRACTION = 0.85
CORE_TABLES = (1, 2, 3)


@dataclass(frozen=True)
class TableRow:
    table: int
    stage: str
    image: int
    iteration: int
    mse: float
    psnr: float
    bpp: float
    cr: float

    @property
    def psnr_recomputed(self) -> float:
        return metrics.psnr(self.mse)

    @property
    def cr_recomputed(self) -> float:
        return metrics.cr(self.bpp)

    @property
    def psnr_ok(self) -> bool:
        return abs(self.psnr_recomputed - self.psnr) <= PSNR_TOL

    @property
    def cr_ok(self) -> bool:
        return abs(self.cr_recomputed - self.cr) <= CR_TOL

    @property
    def consistent(self) -> bool:
        return self.psnr_ok and self.cr_ok


def load_rows() -> list[TableRow]:
    text = resources.files("chebwave").joinpath("data/reference_tables.csv").read_text()
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(TableRow(
            table=int(rec["table"]), stage=rec["stage"], image=int(rec["image"]),
            iteration=int(rec["iteration"]), mse=float(rec["mse"]), psnr=float(rec["psnr"]),
            bpp=float(rec["bpp"]), cr=float(rec["cr"]),
        ))
    return rows


@dataclass
class ValidationResult:
    rows: list[TableRow]

    @property
    def mismatches(self) -> list[TableRow]:
        return [r for r in self.rows if not r.consistent]

    @property
    def core_rows(self) -> list[TableRow]:
        return [r for r in self.rows if r.table in CORE_TABLES]

    @property
    def core_fraction(self) -> float:
        core = self.core_rows
        return sum(r.consistent for r in core) / len(core)

    @property
    def passed(self) -> bool:
        return self.core_fraction >= MIN_CONSISTENT_FRACTION

    def report(self) -> str:
        out = io.StringIO()
        out.write(f"rows checked: {len(self.rows)}\n")
        out.write(f"tolerances: PSNR +/-{PSNR_TOL} dB, CR +/-{CR_TOL}\n")
        for r in self.mismatches:
            parts = []
            if not r.psnr_ok:
                parts.append(f"PSNR printed {r.psnr:g} vs {r.psnr_recomputed:.3f} from MSE {r.mse:g}")
            if not r.cr_ok:
                parts.append(f"CR printed {r.cr:g} vs {r.cr_recomputed:.3f} from BPP {r.bpp:g}")
            out.write(f"MISMATCH table {r.table} row {r.iteration}: {'; '.join(parts)}\n")
        core = self.core_rows
        ok = sum(r.consistent for r in core)
        out.write(f"tables {','.join(map(str, CORE_TABLES))}: {ok}/{len(core)} consistent "
                  f"({100 * self.core_fraction:.1f}%, need >= {100 * MIN_CONSISTENT_FRACTION:.0f}%)\n")
        out.write(f"result: {'PASS' if self.passed else 'FAIL'}\n")
        return out.getvalue()


def validate_tables(rows: list[TableRow] | None = None) -> ValidationResult:
    return ValidationResult(load_rows() if rows is None else rows)
