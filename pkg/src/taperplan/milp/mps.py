"""Fixed-format MPS export/import and the file-based external solver bridge.

Row and column names are replaced by deterministic 8-character tokens
(``C0000001``, ``R0000001``; the objective row is ``OBJ``) and the mapping is
written as a sidecar with one ``mangled original`` pair per line. Names stay
inside the fixed-format columns; numbers are written with their shortest
round-trip representation, so a long value can run past its nominal field.
Readers that split on whitespace, including :func:`read_mps`, accept this.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .model import SparseMilp

OBJ_ROW = "OBJ"
SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")


class MpsError(ValueError):
    pass


class MpsParseError(MpsError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class NameMap:
    """Bijection between mangled MPS names and model names."""

    cols: tuple[tuple[str, str], ...]
    rows: tuple[tuple[str, str], ...]

    @classmethod
    def for_model(cls, milp: SparseMilp) -> "NameMap":
        if milp.n_cols > 9_999_999 or milp.n_rows > 9_999_999:
            raise MpsError("model too large for 8-character name mangling")
        cols = tuple((f"C{j + 1:07d}", nm) for j, nm in enumerate(milp.col_names))
        rows = tuple((f"R{i + 1:07d}", nm) for i, nm in enumerate(milp.row_names))
        return cls(cols, rows)

    def col_lookup(self) -> dict[str, str]:
        return dict(self.cols)

    def row_lookup(self) -> dict[str, str]:
        return dict(self.rows)

    def to_text(self) -> str:
        lines = [f"{a} {b}" for a, b in self.cols + self.rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NameMap":
        cols, rows = [], []
        for k, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise MpsParseError(f"name map entry needs 'mangled original', got {raw!r}", k)
            (cols if parts[0].startswith("C") else rows).append((parts[0], parts[1]))
        return cls(tuple(cols), tuple(rows))


def _num(v: float) -> str:
    if not np.isfinite(v):
        raise MpsError(f"non-finite value {v!r}")
    r = repr(float(v))
    return r[:-2] if r.endswith(".0") else r


def _line(f1="", f2="", f3="", f4="", f5="", f6=""):
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def mps_text(milp: SparseMilp) -> tuple[str, NameMap]:
    """Render ``milp`` as MPS text plus the name map."""
    names = NameMap.for_model(milp)
    cn = [a for a, _ in names.cols]
    rn = [a for a, _ in names.rows]
    out = [f"NAME          {milp.name.replace(' ', '_')[:8] or 'MODEL'}", "ROWS", f" N  {OBJ_ROW}"]
    kinds = []
    for i in range(milp.n_rows):
        lo, hi = milp.row_lower[i], milp.row_upper[i]
        if lo == hi:
            k = "E"
        elif np.isfinite(lo):
            k = "G"
        elif np.isfinite(hi):
            k = "L"
        else:
            k = "N"
        kinds.append(k)
        out.append(f" {k}  {rn[i]}")

    out.append("COLUMNS")
    A = milp.A.tocsc()
    in_int = False
    marker = 0
    for j in range(milp.n_cols):
        if milp.integrality[j] != in_int:
            tag = "'INTORG'" if milp.integrality[j] else "'INTEND'"
            out.append(_line("", f"M{marker:07d}", "'MARKER'", "", tag))
            marker += 1
            in_int = bool(milp.integrality[j])
        entries = []
        c = milp.obj[j]
        s, e = A.indptr[j], A.indptr[j + 1]
        if c != 0.0 or s == e:
            entries.append((OBJ_ROW, c))
        for p in range(s, e):
            v = A.data[p]
            if not np.isfinite(v):
                raise MpsError(f"non-finite coefficient in row {milp.row_names[A.indices[p]]!r}, column {milp.col_names[j]!r}")
            entries.append((rn[A.indices[p]], v))
        for a in range(0, len(entries), 2):
            pair = entries[a:a + 2]
            if len(pair) == 2:
                out.append(_line("", cn[j], pair[0][0], _num(pair[0][1]), pair[1][0], _num(pair[1][1])))
            else:
                out.append(_line("", cn[j], pair[0][0], _num(pair[0][1])))
    if in_int:
        out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))

    out.append("RHS")
    if milp.obj_offset != 0.0:
        out.append(_line("", "RHS", OBJ_ROW, _num(-milp.obj_offset)))
    for i, k in enumerate(kinds):
        rhs = {"E": milp.row_lower[i], "G": milp.row_lower[i], "L": milp.row_upper[i]}.get(k, 0.0)
        if k != "N" and rhs != 0.0:
            out.append(_line("", "RHS", rn[i], _num(rhs)))

    ranges = [
        (rn[i], milp.row_upper[i] - milp.row_lower[i])
        for i, k in enumerate(kinds)
        if k == "G" and np.isfinite(milp.row_upper[i])
    ]
    if ranges:
        out.append("RANGES")
        for r, v in ranges:
            out.append(_line("", "RNG", r, _num(v)))

    out.append("BOUNDS")
    for j in range(milp.n_cols):
        lo, hi = milp.col_lower[j], milp.col_upper[j]
        name = cn[j]
        if milp.integrality[j] and lo == 0.0 and hi == 1.0:
            out.append(_line("BV", "BND", name))
        elif lo == hi:
            out.append(_line("FX", "BND", name, _num(lo)))
        elif not np.isfinite(lo) and not np.isfinite(hi):
            out.append(_line("FR", "BND", name))
        else:
            if not np.isfinite(lo):
                out.append(_line("MI", "BND", name))
            elif lo != 0.0 or milp.integrality[j]:
                out.append(_line("LO", "BND", name, _num(lo)))
            if np.isfinite(hi):
                out.append(_line("UP", "BND", name, _num(hi)))
            elif milp.integrality[j]:
                out.append(_line("PL", "BND", name))
    out.append("ENDATA")
    return "\n".join(out) + "\n", names


def write_mps(milp: SparseMilp, destination=None, name_map_path=None) -> tuple[bytes, NameMap]:
    """Serialise ``milp``; optionally write it and its name map to disk.

    ``destination`` may be a path or a binary file object. For a path, the
    name map goes to ``name_map_path`` (default: ``<destination>.names``).
    """
    text, names = mps_text(milp)
    data = text.encode("ascii")
    if destination is None:
        return data, names
    if hasattr(destination, "write"):
        destination.write(data)
        if name_map_path is not None:
            _atomic_write(Path(name_map_path), names.to_text().encode())
        return data, names
    dest = Path(destination)
    _atomic_write(dest, data)
    _atomic_write(Path(name_map_path) if name_map_path else dest.with_name(dest.name + ".names"),
                  names.to_text().encode())
    return data, names


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode()
    if hasattr(source, "read"):
        data = source.read()
        return data.decode() if isinstance(data, bytes) else data
    return Path(source).read_text()


def read_mps(source, name_map: NameMap | None = None) -> SparseMilp:
    """Parse MPS text (path, bytes or file object) into a :class:`SparseMilp`.

    With ``name_map`` the original row and column names are restored.
    """
    text = _read_text(source)
    section = None
    obj_row = None
    sense = 1.0
    row_kind: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_index: dict[str, int] = {}
    integ: list[bool] = []
    entries: dict[tuple[int, str], float] = {}
    obj: dict[int, float] = {}
    rhs: dict[str, float] = {}
    rng: dict[str, float] = {}
    bounds: dict[int, list] = {}
    in_int = False
    name = "model"
    obj_offset = 0.0
    seen_end = False

    for k, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            if head[0] not in SECTIONS:
                raise MpsParseError(f"unknown section {head[0]!r}", k)
            section = head[0]
            if section == "NAME":
                name = head[1] if len(head) > 1 else name
            elif section == "OBJSENSE" and len(head) > 1:
                sense = -1.0 if head[1].upper() in ("MAX", "MAXIMIZE") else 1.0
            elif section == "ENDATA":
                seen_end = True
                break
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            sense = -1.0 if tok[0].upper() in ("MAX", "MAXIMIZE") else 1.0
        elif section == "ROWS":
            if len(tok) != 2 or tok[0] not in ("N", "E", "L", "G"):
                raise MpsParseError(f"bad ROWS entry {raw.strip()!r}", k)
            kind, rname = tok
            if rname in row_kind or rname == obj_row:
                raise MpsParseError(f"duplicate row {rname!r}", k)
            if kind == "N" and obj_row is None:
                obj_row = rname
            else:
                row_kind[rname] = kind
                row_order.append(rname)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                if tok[2] == "'INTORG'":
                    in_int = True
                elif tok[2] == "'INTEND'":
                    in_int = False
                else:
                    raise MpsParseError(f"unknown marker {tok[2]}", k)
                continue
            if len(tok) not in (3, 5):
                raise MpsParseError(f"bad COLUMNS entry {raw.strip()!r}", k)
            cname = tok[0]
            if cname not in col_index:
                col_index[cname] = len(col_order)
                col_order.append(cname)
                integ.append(in_int)
            elif col_order[-1] != cname:
                raise MpsParseError(f"duplicate column {cname!r} (entries not contiguous)", k)
            j = col_index[cname]
            for rname, sval in zip(tok[1::2], tok[2::2]):
                v = _parse_float(sval, k)
                if rname == obj_row:
                    obj[j] = obj.get(j, 0.0) + v
                elif rname in row_kind:
                    if (j, rname) in entries:
                        raise MpsParseError(f"duplicate entry for column {cname!r} in row {rname!r}", k)
                    entries[(j, rname)] = v
                else:
                    raise MpsParseError(f"column {cname!r} references unknown row {rname!r}", k)
        elif section in ("RHS", "RANGES"):
            body = tok[1:] if len(tok) in (3, 5) else tok
            if len(body) not in (2, 4):
                raise MpsParseError(f"bad {section} entry {raw.strip()!r}", k)
            for rname, sval in zip(body[0::2], body[1::2]):
                v = _parse_float(sval, k)
                if section == "RHS" and rname == obj_row:
                    obj_offset = -v
                elif rname not in row_kind:
                    raise MpsParseError(f"{section} references unknown row {rname!r}", k)
                elif section == "RHS":
                    rhs[rname] = v
                else:
                    rng[rname] = v
        elif section == "BOUNDS":
            if len(tok) < 3:
                raise MpsParseError(f"bad BOUNDS entry {raw.strip()!r}", k)
            btype, cname = tok[0], tok[2]
            if cname not in col_index:
                raise MpsParseError(f"bound on unknown column {cname!r}", k)
            val = _parse_float(tok[3], k) if len(tok) > 3 else None
            if btype in ("LO", "UP", "FX", "LI", "UI") and val is None:
                raise MpsParseError(f"{btype} bound needs a value", k)
            bounds.setdefault(col_index[cname], []).append((btype, val, k))
        else:
            raise MpsParseError("data line outside of a section", k)
    if not seen_end:
        raise MpsParseError("missing ENDATA")

    n = len(col_order)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    integ_arr = np.array(integ, dtype=bool)
    for j, items in bounds.items():
        for btype, val, k in items:
            if btype in ("LO", "LI"):
                lo[j] = val
                integ_arr[j] |= btype == "LI"
            elif btype in ("UP", "UI"):
                hi[j] = val
                if val < 0 and lo[j] == 0.0:
                    lo[j] = -np.inf
                integ_arr[j] |= btype == "UI"
            elif btype == "FX":
                lo[j] = hi[j] = val
            elif btype == "FR":
                lo[j], hi[j] = -np.inf, np.inf
            elif btype == "MI":
                lo[j] = -np.inf
            elif btype == "PL":
                hi[j] = np.inf
            elif btype == "BV":
                lo[j], hi[j] = 0.0, 1.0
                integ_arr[j] = True
            else:
                raise MpsParseError(f"unknown bound type {btype!r}", k)

    m = len(row_order)
    ridx = {r: i for i, r in enumerate(row_order)}
    rl = np.empty(m)
    ru = np.empty(m)
    for i, r in enumerate(row_order):
        b = rhs.get(r, 0.0)
        kind = row_kind[r]
        R = rng.get(r)
        if kind == "E":
            rl[i] = ru[i] = b
            if R is not None:
                if R > 0:
                    ru[i] = b + R
                else:
                    rl[i] = b + R
        elif kind == "G":
            rl[i], ru[i] = b, (b + abs(R) if R is not None else np.inf)
        elif kind == "L":
            rl[i], ru[i] = (b - abs(R) if R is not None else -np.inf), b
        else:
            rl[i], ru[i] = -np.inf, np.inf

    if entries:
        keys = list(entries)
        A = sp.csr_matrix(
            ([entries[kk] for kk in keys], ([ridx[r] for _, r in keys], [j for j, _ in keys])), shape=(m, n)
        )
    else:
        A = sp.csr_matrix((m, n))
    c = np.zeros(n)
    for j, v in obj.items():
        c[j] = v
    cnames, rnames = list(col_order), list(row_order)
    if name_map is not None:
        cl, rl_ = name_map.col_lookup(), name_map.row_lookup()
        cnames = [cl.get(x, x) for x in cnames]
        rnames = [rl_.get(x, x) for x in rnames]
    return SparseMilp(
        obj=sense * c,
        col_lower=lo,
        col_upper=hi,
        integrality=integ_arr,
        A=A,
        row_lower=rl,
        row_upper=ru,
        col_names=cnames,
        row_names=rnames,
        obj_offset=sense * obj_offset,
        name=name,
    )


def _parse_float(s: str, line: int) -> float:
    try:
        return float(s)
    except ValueError:
        raise MpsParseError(f"bad number {s!r}", line) from None


def read_name_map(source) -> NameMap:
    return NameMap.from_text(_read_text(source))


def read_external_solution(source, name_map: NameMap) -> dict[str, float]:
    """Column values from a ``name value`` per line file, keyed by original name.

    Names may be mangled or original. Columns absent from the file are left
    out of the result; callers decide whether that means zero.
    """
    text = _read_text(source)
    lookup = name_map.col_lookup()
    originals = set(lookup.values())
    out: dict[str, float] = {}
    for k, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 2:
            raise MpsParseError(f"expected 'name value', got {raw.strip()!r}", k)
        nm, sval = tok
        if nm in lookup:
            nm = lookup[nm]
        elif nm not in originals:
            raise MpsParseError(f"column {nm!r} is not in the name map", k)
        if nm in out:
            raise MpsParseError(f"column {nm!r} given twice", k)
        out[nm] = _parse_float(sval, k)
    if not out:
        raise MpsParseError("no values in solution file")
    return out


def solution_vector(values: dict[str, float], milp: SparseMilp, missing: float = 0.0) -> np.ndarray:
    """Order ``values`` like ``milp``'s columns, filling absent ones with ``missing``."""
    return np.array([values.get(nm, missing) for nm in milp.col_names], dtype=float)


def write_solution(path, milp: SparseMilp, x) -> None:
    """Write ``x`` in the solution import format using original names."""
    buf = io.StringIO()
    buf.write(f"# {milp.name}\n")
    for nm, v in zip(milp.col_names, np.asarray(x, dtype=float)):
        buf.write(f"{nm} {float(v)!r}\n")
    _atomic_write(Path(path), buf.getvalue().encode())
