"""Observation containers, CSV input/output and bundled datasets.

Three observation designs are supported:

``FrequencyOfFrequencies``
    counts ``n_k`` of species seen exactly ``k`` times by the survey end ``t0``.
``RhoAppearanceData``
    counts ``n_1 .. n_{rho-1}`` plus the time of the ``rho``-th appearance of
    every species seen at least ``rho`` times.
``BinnedSac``
    the empirical species accumulation curve at a few breakpoints.

Infinite estimates are plain ``math.inf`` floats; :func:`to_jsonable` turns
them into the string ``"inf"`` for JSON output.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ConfigurationError, ParseError, ValidationError

DATASET_NAMES = ("swine", "accident", "tomato", "bird")


def _check_t0(t0):
    t0 = float(t0)
    if not (t0 > 0 and math.isfinite(t0)):
        raise ValidationError(f"t0 must be a positive finite number, got {t0!r}")
    return t0


@dataclass(frozen=True)
class FrequencyOfFrequencies:
    """Frequency of frequencies observed on ``[0, t0]``.

    Parameters
    ----------
    counts : mapping of int to int
        ``counts[k]`` is the number of species observed exactly ``k`` times.
        Zero entries are dropped, so storage is sparse.
    t0 : float, optional
        Survey end time. Defaults to 1.

    Examples
    --------
    >>> fof = FrequencyOfFrequencies({1: 11, 2: 12, 3: 10})
    >>> fof.n_plus, fof.s_total
    (33, 65)
    """

    counts: Mapping[int, int]
    t0: float = 1.0
    ks: np.ndarray = field(init=False, repr=False, compare=False)
    nk: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t0 = _check_t0(self.t0)
        clean = {}
        for k, n in dict(self.counts).items():
            if int(k) != k or int(n) != n:
                raise ValidationError(f"frequencies and counts must be integers, got ({k}, {n})")
            k, n = int(k), int(n)
            if k < 1:
                raise ValidationError(f"frequency k must be >= 1, got {k}")
            if n < 0:
                raise ValidationError(f"count for k={k} must be >= 0, got {n}")
            if n > 0:
                clean[k] = n
        clean = dict(sorted(clean.items()))
        object.__setattr__(self, "counts", clean)
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "ks", np.array(list(clean), dtype=np.int64))
        object.__setattr__(self, "nk", np.array(list(clean.values()), dtype=np.int64))

    __hash__ = None

    @classmethod
    def from_abundances(cls, abundances, t0=1.0):
        """Build the FoF from per-species observation counts (zeros ignored)."""
        abundances = np.asarray(abundances, dtype=np.int64)
        abundances = abundances[abundances > 0]
        ks, nk = np.unique(abundances, return_counts=True)
        return cls(dict(zip(ks.tolist(), nk.tolist())), t0)

    def n(self, k):
        """Number of species seen exactly ``k`` times."""
        return self.counts.get(int(k), 0)

    @property
    def n_plus(self):
        return int(self.nk.sum())

    @property
    def s_total(self):
        return int((self.ks * self.nk).sum())

    @property
    def max_k(self):
        return int(self.ks[-1]) if self.ks.size else 0

    def dense(self, kmax=None):
        """Counts ``n_1 .. n_kmax`` as a dense integer array."""
        kmax = self.max_k if kmax is None else int(kmax)
        out = np.zeros(kmax, dtype=np.int64)
        keep = self.ks <= kmax
        out[self.ks[keep] - 1] = self.nk[keep]
        return out


class FofSummary(NamedTuple):
    n_plus: int
    s_total: int
    max_k: int


def summarize(fof):
    """Number of species, number of individuals and largest frequency."""
    return FofSummary(fof.n_plus, fof.s_total, fof.max_k)


def merge_fof(first, second):
    """Pool two FoFs recorded over the same window."""
    if first.t0 != second.t0:
        raise ValidationError("cannot merge FoFs with different t0")
    counts = dict(first.counts)
    for k, n in second.counts.items():
        counts[k] = counts.get(k, 0) + n
    return FrequencyOfFrequencies(counts, first.t0)


@dataclass(frozen=True)
class RhoAppearanceData:
    """Data from a design that stops recording a species at its ``rho``-th sighting.

    Parameters
    ----------
    rho : int
        Design threshold, at least 1.
    t0 : float
        Survey end time.
    low_counts : sequence of int
        ``n_1 .. n_{rho-1}``; empty when ``rho == 1``.
    times : sequence of float
        ``rho``-appearance times, each in ``(0, t0]``.
    """

    rho: int
    t0: float
    low_counts: tuple
    times: np.ndarray

    def __post_init__(self):
        t0 = _check_t0(self.t0)
        if int(self.rho) != self.rho or self.rho < 1:
            raise ValidationError(f"rho must be an integer >= 1, got {self.rho!r}")
        low = tuple(int(n) for n in self.low_counts)
        if len(low) != self.rho - 1:
            raise ValidationError(f"expected {self.rho - 1} low counts, got {len(low)}")
        if any(n < 0 for n in low):
            raise ValidationError("low counts must be nonnegative")
        times = np.sort(np.asarray(self.times, dtype=float).ravel())
        if times.size and not (times[0] > 0 and times[-1] <= t0):
            raise ValidationError("appearance times must lie in (0, t0]")
        times.setflags(write=False)
        object.__setattr__(self, "rho", int(self.rho))
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "low_counts", low)
        object.__setattr__(self, "times", times)

    __hash__ = None

    @property
    def n_plus(self):
        return sum(self.low_counts) + int(self.times.size)

    @classmethod
    def from_fof(cls, fof, rho):
        """Wrap a FoF whose frequencies are all below ``rho`` (no times recorded)."""
        if fof.max_k >= rho:
            raise ValidationError("FoF has frequencies >= rho; appearance times are needed")
        return cls(rho, fof.t0, tuple(fof.dense(rho - 1)), np.empty(0))


@dataclass(frozen=True)
class BinnedSac:
    """Empirical species accumulation curve at breakpoints ``0 < l_1 < ... < l_m = t0``.

    ``cumulative[i]`` is the number of distinct species seen by ``breakpoints[i]``.
    The implicit starting point ``(0, 0)`` is not stored.
    """

    breakpoints: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float).ravel()
        n = np.asarray(self.cumulative).ravel()
        if t.size == 0 or t.size != n.size:
            raise ValidationError("breakpoints and cumulative counts must have equal nonzero length")
        if not (t[0] > 0 and np.all(np.diff(t) > 0) and np.isfinite(t[-1])):
            raise ValidationError("breakpoints must be positive and strictly increasing")
        if np.any(n != np.round(n)) or n[0] < 0 or np.any(np.diff(n) < 0):
            raise ValidationError("cumulative counts must be nondecreasing nonnegative integers")
        n = n.astype(np.int64)
        t.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "cumulative", n)

    __hash__ = None

    @property
    def t0(self):
        return float(self.breakpoints[-1])

    @property
    def increments(self):
        return np.diff(self.cumulative, prepend=0)


# ---------------------------------------------------------------------------
# extended reals and JSON


def to_jsonable(obj):
    """Recursively convert numpy scalars and infinities for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return x
    return obj


def from_extended(value):
    """Inverse of the ``"inf"`` encoding used in JSON output."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        if value.strip().lower() == "-inf":
            return -math.inf
    return float(value)


# ---------------------------------------------------------------------------
# CSV input/output


def _split_comments(text):
    """Return ({key: value} from ``# key=value`` lines, [(lineno, line)] of content)."""
    meta, rows = {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = (value.strip(), lineno)
            continue
        rows.append((lineno, line))
    return meta, rows


def _meta_t0(meta, t0):
    if t0 is not None:
        return _check_t0(t0)
    if "t0" in meta:
        value, lineno = meta["t0"]
        try:
            return _check_t0(float(value))
        except ValueError as exc:
            raise ParseError(f"bad t0 annotation {value!r}", lineno) from exc
    return None


def _parse_int(text, lineno, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", lineno) from None
    if value != int(value):
        raise ParseError(f"{what} {text!r} is not an integer", lineno)
    return int(value)


def _parse_kcount(rows):
    counts = {}
    for lineno, line in rows:
        cells = next(csv.reader([line]))
        if len(cells) != 2:
            raise ParseError(f"expected 2 fields, got {len(cells)}", lineno)
        k = _parse_int(cells[0], lineno, "frequency")
        n = _parse_int(cells[1], lineno, "count")
        if k < 1:
            raise ValidationError(f"line {lineno}: frequency k must be >= 1, got {k}")
        if n < 0:
            raise ValidationError(f"line {lineno}: count must be >= 0, got {n}")
        if k in counts:
            raise ParseError(f"duplicate frequency k={k}", lineno)
        counts[k] = n
    return counts


def _read_text(path_or_buffer):
    if hasattr(path_or_buffer, "read"):
        return path_or_buffer.read()
    with open(path_or_buffer, encoding="utf-8") as fh:
        return fh.read()


def parse_fof(text, t0=None, default_t0=None):
    """Parse FoF CSV text (see :func:`load_fof`)."""
    meta, rows = _split_comments(text)
    if rows:
        header = [c.strip().lower() for c in next(csv.reader([rows[0][1]]))]
        if header != ["k", "count"]:
            raise ParseError("expected header 'k,count'", rows[0][0])
        rows = rows[1:]
    t0 = _meta_t0(meta, t0)
    if t0 is None:
        if default_t0 is None:
            raise ConfigurationError("t0 is neither annotated ('# t0=...') nor supplied")
        t0 = default_t0
    return FrequencyOfFrequencies(_parse_kcount(rows), t0)


def load_fof(path, t0=None, default_t0=1.0):
    """Read a FoF from a ``k,count`` CSV file.

    Parameters
    ----------
    path : str or path-like or file object
    t0 : float, optional
        Overrides any ``# t0=<value>`` annotation in the file.
    default_t0 : float or None, optional
        Used when neither ``t0`` nor an annotation is present. Pass ``None``
        to make a missing ``t0`` an error.

    Raises
    ------
    ParseError
        Malformed rows (the message names the line) or duplicate ``k``.
    ValidationError
        ``k < 1`` or negative counts.
    ConfigurationError
        No ``t0`` available and ``default_t0`` is None.
    """
    return parse_fof(_read_text(path), t0=t0, default_t0=default_t0)


def format_fof(fof):
    lines = [f"# t0={fof.t0!r}", "k,count"]
    lines += [f"{k},{n}" for k, n in fof.counts.items()]
    return "\n".join(lines) + "\n"


def save_fof(fof, path):
    """Write a FoF as CSV; ``t0`` is stored with full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_fof(fof))


def load_rho(path, t0=None):
    """Read ``RhoAppearanceData`` (``# t0=``, ``# rho=``, ``k,count`` rows, ``time`` rows)."""
    meta, rows = _split_comments(_read_text(path))
    t0 = _meta_t0(meta, t0)
    if t0 is None:
        t0 = 1.0
    if "rho" not in meta:
        raise ConfigurationError("missing '# rho=<int>' annotation")
    rho = _parse_int(meta["rho"][0], meta["rho"][1], "rho")
    section, kc_rows, times = None, [], []
    for lineno, line in rows:
        low = line.lower().replace(" ", "")
        if low == "k,count":
            section = "k"
            continue
        if low == "time":
            section = "time"
            continue
        if section == "k":
            kc_rows.append((lineno, line))
        elif section == "time":
            try:
                times.append(float(line))
            except ValueError:
                raise ParseError(f"bad time {line!r}", lineno) from None
        else:
            raise ParseError("data row before a 'k,count' or 'time' header", lineno)
    counts = _parse_kcount(kc_rows)
    if any(k >= rho for k in counts):
        raise ValidationError("low counts must have k < rho")
    low = tuple(counts.get(k, 0) for k in range(1, rho))
    return RhoAppearanceData(rho, t0, low, np.array(times))


def save_rho(data, path):
    buf = io.StringIO()
    buf.write(f"# t0={data.t0!r}\n# rho={data.rho}\nk,count\n")
    for k, n in enumerate(data.low_counts, start=1):
        buf.write(f"{k},{n}\n")
    buf.write("time\n")
    for r in data.times:
        buf.write(f"{float(r)!r}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def load_binned(path):
    """Read a ``BinnedSac`` from a ``t,cum_species`` CSV file."""
    _, rows = _split_comments(_read_text(path))
    if not rows:
        raise ParseError("empty file")
    header = [c.strip().lower() for c in next(csv.reader([rows[0][1]]))]
    if header != ["t", "cum_species"]:
        raise ParseError("expected header 't,cum_species'", rows[0][0])
    t, n = [], []
    for lineno, line in rows[1:]:
        cells = next(csv.reader([line]))
        if len(cells) != 2:
            raise ParseError(f"expected 2 fields, got {len(cells)}", lineno)
        try:
            t.append(float(cells[0]))
        except ValueError:
            raise ParseError(f"bad time {cells[0]!r}", lineno) from None
        n.append(_parse_int(cells[1], lineno, "cumulative count"))
    if t and t[0] == 0:
        if n[0] != 0:
            raise ValidationError("cumulative count at t=0 must be 0")
        t, n = t[1:], n[1:]
    return BinnedSac(np.array(t), np.array(n))


def save_binned(binned, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,cum_species\n")
        for t, n in zip(binned.breakpoints, binned.cumulative):
            fh.write(f"{float(t)!r},{int(n)}\n")


# ---------------------------------------------------------------------------
# bundled data


def load_dataset(name):
    """One of the four bundled FoFs: ``swine``, ``accident``, ``tomato``, ``bird``."""
    if name not in DATASET_NAMES:
        raise ValidationError(f"unknown dataset {name!r}; choose from {', '.join(DATASET_NAMES)}")
    text = resources.files(__package__).joinpath("datasets").joinpath(f"{name}.csv").read_text()
    return parse_fof(text)


def bundled_datasets():
    """All bundled FoFs keyed by name."""
    return {name: load_dataset(name) for name in DATASET_NAMES}


def resolve_fof(spec, t0=None):
    """Load ``spec`` as a bundled dataset name or a CSV path."""
    if spec in DATASET_NAMES:
        fof = load_dataset(spec)
        return FrequencyOfFrequencies(fof.counts, t0) if t0 is not None else fof
    return load_fof(spec, t0=t0)
