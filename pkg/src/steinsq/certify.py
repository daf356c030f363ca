"""Structural verification and deficiency certificates.

If every N_i symbol lies in H_i u J_i, every B symbol lies in the F blocks
(and occurs at least once) and |N_i| >= 2 x_i - 1, then any partial
transversal T misses at least as many symbols as it puts cells into the F
blocks, and every B symbol it skips is missed too. That yields

    |T| <= min(n, m - |B|)          (``sharp_bound``)
    |T| <= n - ceil(|B| / 2)        (``bound``, the classic form, when m <= n)

T misses |B| - used_B symbols of B plus at least sum_i z_i >= used_B
symbols of the N classes. When m > n (padded grids) the classic form is not
implied, and ``bound`` falls back to ``sharp_bound``.

Note on the closing sum: it is taken over blocks with z_i >= 1, i.e.
sum_i max(2 z_i - 1, 0). A ``min`` there would make every term nonpositive.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidTransversal, StructureNotVerified
from .grid import Grid, PartialTransversal, grid_digest, validate_transversal
from .layout import CLASS_A, CLASS_B, RegionLayout, SymbolPartition, layout_digest

CERT_VERSION = "stein-cert/1"
HASH_NAME = "sha256"
MAX_REPORTED = 10
_CHUNK = 1 << 22  # cells per scan chunk


@dataclass
class ConditionResult:
    name: str
    ok: bool
    detail: str = ""
    violations: list = field(default_factory=list)  # up to MAX_REPORTED [row, col] pairs


@dataclass
class DeficiencyCertificate:
    n: int
    m: int
    b_size: int
    structure_ok: bool
    checked_conditions: list[ConditionResult]
    bound: int
    sharp_bound: int
    every_symbol_n_times: bool
    layout_digest: str
    grid_digest: str
    strict: bool = False
    hash: str = HASH_NAME
    version: str = CERT_VERSION

    @property
    def deficiency_certified(self) -> bool:
        return self.structure_ok and self.bound < self.n

    def failed(self) -> list[ConditionResult]:
        return [c for c in self.checked_conditions if not c.ok]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "DeficiencyCertificate":
        d = dict(d)
        if d.get("version") != CERT_VERSION:
            raise ValueError(f"unsupported certificate version {d.get('version')!r}")
        d["checked_conditions"] = [ConditionResult(**c) for c in d["checked_conditions"]]
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "DeficiencyCertificate":
        return cls.from_dict(json.loads(text))


def _check_dims(g: Grid, layout: RegionLayout, part: SymbolPartition):
    if layout.n != g.n or len(layout.row_label) != g.n or len(layout.col_label) != g.n:
        raise DimensionMismatch(f"layout is for n = {layout.n}, grid has n = {g.n}")
    if part.m != g.m or len(part.label) != g.m + 1:
        raise DimensionMismatch(f"partition is for m = {part.m}, grid has m = {g.m}")
    if part.n0 != layout.n0:
        raise DimensionMismatch(f"partition has {part.n0} N classes, layout has {layout.n0} blocks")


def _c1(layout: RegionLayout) -> ConditionResult:
    n, n0 = layout.n, layout.n0
    problems = []
    for name, lab in (("row", layout.row_label), ("column", layout.col_label)):
        if lab.min(initial=0) < 0 or lab.max(initial=0) > n0:
            problems.append(f"{name} labels outside 0..{n0}")
            continue
        counts = np.bincount(lab, minlength=n0 + 1)
        for i, x in enumerate(layout.xs, start=1):
            if counts[i] != x:
                problems.append(f"{name} block {i} has {counts[i]} members, expected {x}")
                break
        if counts[0] != n - sum(layout.xs):
            problems.append(f"{name} star part has {counts[0]} members, expected {n - sum(layout.xs)}")
    return ConditionResult("C1", not problems, "; ".join(problems))


def _scan_regions(g: Grid, layout: RegionLayout, part: SymbolPartition):
    """Cells breaking the N or B placement rule, as 1-indexed coordinates."""
    n, n0 = g.n, layout.n0
    rk = layout.row_keys().astype(np.int64)
    ck = layout.col_keys().astype(np.int64)
    label = part.label.astype(np.int64)
    bad_n, bad_b = [], []
    count_n = count_b = 0
    step = max(1, _CHUNK // n)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        R = rk[lo:hi, None]
        C = ck[None, :]
        lab = label[g.cells[lo:hi]]
        live = ~g.mask[lo:hi] if g.mask is not None else np.ones(lab.shape, bool)
        in_hj = (R != C) & (np.minimum(R, C) == lab)
        wrong_n = live & (lab >= 1) & ~in_hj
        in_f = (R == C) & (R <= n0)
        wrong_b = live & (lab == CLASS_B) & ~in_f
        cn = int(wrong_n.sum())
        cb = int(wrong_b.sum())
        if cn and len(bad_n) < MAX_REPORTED:
            rs, cs = np.nonzero(wrong_n)
            bad_n += [[int(r) + lo + 1, int(c) + 1] for r, c in zip(rs[:MAX_REPORTED], cs[:MAX_REPORTED])]
        if cb and len(bad_b) < MAX_REPORTED:
            rs, cs = np.nonzero(wrong_b)
            bad_b += [[int(r) + lo + 1, int(c) + 1] for r, c in zip(rs[:MAX_REPORTED], cs[:MAX_REPORTED])]
        count_n += cn
        count_b += cb
    return bad_n[:MAX_REPORTED], count_n, bad_b[:MAX_REPORTED], count_b


def verify_structure(
    g: Grid, layout: RegionLayout, part: SymbolPartition, strict: bool = False
) -> DeficiencyCertificate:
    """Check C1-C5 exhaustively and derive the certified bound.

    The per-symbol totals are not needed for the bound; whether every symbol
    occurs exactly n times is reported as ``every_symbol_n_times``.
    ``strict`` additionally demands exactly n occurrences of each B symbol.
    """
    _check_dims(g, layout, part)
    n, m = g.n, g.m
    conds = [_c1(layout)]
    counts = g.counts()

    c5_problems = []
    lab = part.label[1:]
    if np.any((lab != CLASS_A) & (lab != CLASS_B) & ((lab < 1) | (lab > layout.n0))):
        bad = (np.flatnonzero((lab != CLASS_A) & (lab != CLASS_B) & ((lab < 1) | (lab > layout.n0))) + 1)
        c5_problems.append(f"symbols without a valid class: {bad[:MAX_REPORTED].tolist()}")

    if conds[0].ok and not c5_problems:
        bad_n, cnt_n, bad_b, cnt_b = _scan_regions(g, layout, part)
    else:
        bad_n, cnt_n, bad_b, cnt_b = [], -1, [], -1

    if cnt_n < 0:
        conds.append(ConditionResult("C2", False, "not checked: layout or partition malformed"))
    else:
        conds.append(
            ConditionResult(
                "C2",
                cnt_n == 0,
                f"{cnt_n} N-class cells outside their H/J strips" if cnt_n else "",
                bad_n,
            )
        )

    if cnt_b < 0:
        conds.append(ConditionResult("C3", False, "not checked: layout or partition malformed"))
    else:
        problems = []
        if cnt_b:
            problems.append(f"{cnt_b} B cells outside the F blocks")
        B = part.B
        absent = B[counts[B] == 0] if len(B) else B
        if len(absent):
            problems.append(f"B symbols never used: {absent[:MAX_REPORTED].tolist()}")
        if strict and len(B):
            off = B[counts[B] != n]
            if len(off):
                problems.append(f"B symbols not used exactly n times: {off[:MAX_REPORTED].tolist()}")
        conds.append(ConditionResult("C3", not problems, "; ".join(problems), bad_b))

    short = [
        f"|N_{i}| = {k} < {2 * x - 1}"
        for i, (x, k) in enumerate(zip(layout.xs, part.class_sizes()), start=1)
        if k < 2 * x - 1
    ]
    conds.append(ConditionResult("C4", not short, "; ".join(short[:MAX_REPORTED])))
    conds.append(ConditionResult("C5", not c5_problems, "; ".join(c5_problems)))

    ok = all(c.ok for c in conds)
    b = part.b_size
    # the counting argument shows every transversal misses >= |B| symbols
    sharp = min(n, m - b) if ok else min(n, m)
    if not ok:
        bound = n
    elif m <= n:
        bound = n - (b + 1) // 2
    else:
        # more symbols than rows (e.g. after padding): only m - |B| is implied
        bound = sharp
    return DeficiencyCertificate(
        n=n,
        m=m,
        b_size=b,
        structure_ok=ok,
        checked_conditions=conds,
        bound=bound,
        sharp_bound=sharp,
        every_symbol_n_times=bool(np.all(counts[1:] == n)),
        layout_digest=layout_digest(layout, part),
        grid_digest=grid_digest(g),
        strict=strict,
    )


def check_certificate(cert, g: Grid, layout: RegionLayout, part: SymbolPartition) -> bool:
    """True iff re-running the verification reproduces ``cert`` exactly."""
    try:
        if isinstance(cert, DeficiencyCertificate):
            claimed = cert.to_dict()
            strict = cert.strict
        else:
            claimed = DeficiencyCertificate.from_dict(cert).to_dict()
            strict = claimed["strict"]
        fresh = verify_structure(g, layout, part, strict=strict)
    except (DimensionMismatch, ValueError, KeyError, TypeError):
        return False
    return fresh.to_dict() == claimed


@dataclass
class TransversalAudit:
    size: int
    z: list[int]  # cells of T in each F block
    hj: list[int]  # cells of T in each H_i u J_i
    per_i_claim_ok: list[bool]
    n_missed: list[int]  # symbols of each N class not used by T
    used_b: int
    predicted_missed_lower_bound: int
    actual_missed: int
    bound: int
    failed_steps: list[str]

    @property
    def ok(self) -> bool:
        return not self.failed_steps

    def to_dict(self) -> dict:
        return asdict(self)


def audit_transversal(
    g: Grid,
    layout: RegionLayout,
    part: SymbolPartition,
    t: PartialTransversal,
    cert: DeficiencyCertificate | None = None,
) -> TransversalAudit:
    """Replay the counting argument on a concrete transversal.

    Any entry in ``failed_steps`` on a structure-verified instance would
    contradict the argument itself.
    """
    if not validate_transversal(g, t):
        raise InvalidTransversal("cells share a row, column or symbol, or hit a forbidden cell")
    if cert is None:
        cert = verify_structure(g, layout, part)
    if not cert.structure_ok:
        raise StructureNotVerified(", ".join(c.name for c in cert.failed()))

    n0 = layout.n0
    rk = layout.row_keys()
    ck = layout.col_keys()
    z = [0] * n0
    hj = [0] * n0
    used = set()
    for r, c in t.cells:
        a, b = int(rk[r - 1]), int(ck[c - 1])
        if a == b and a <= n0:
            z[a - 1] += 1
        elif a != b:
            hj[min(a, b) - 1] += 1
        used.add(g.symbol(r, c))
    xs = layout.xs
    claim = [hj[i] <= 2 * xs[i] - 2 * z[i] for i in range(n0)]
    n_missed = []
    for i in range(1, n0 + 1):
        syms = part.N(i)
        n_missed.append(sum(1 for s in syms.tolist() if s not in used))
    B = set(part.B.tolist())
    used_b = len(B & used)
    predicted = sum(2 * zi - 1 for zi in z if zi >= 1)
    actual = g.m - len(t)

    failed = []
    for i in range(n0):
        if not claim[i]:
            failed.append(f"claim[{i + 1}]: {hj[i]} cells in H/J > {2 * xs[i] - 2 * z[i]}")
        if z[i] >= 1 and n_missed[i] < 2 * z[i] - 1:
            failed.append(f"missed[{i + 1}]: {n_missed[i]} < {2 * z[i] - 1}")
    if sum(n_missed) < predicted:
        failed.append(f"N-missed {sum(n_missed)} < predicted {predicted}")
    if predicted < sum(z):
        failed.append(f"predicted {predicted} < sum z = {sum(z)}")
    if sum(z) < used_b:
        failed.append(f"sum z = {sum(z)} < used B = {used_b}")
    if used_b < len(B) - actual:
        failed.append(f"used B = {used_b} < |B| - missed = {len(B) - actual}")
    if actual < predicted + (len(B) - used_b):
        failed.append(f"missed {actual} < {predicted} + {len(B) - used_b}")
    if len(t) > cert.bound:
        failed.append(f"|T| = {len(t)} exceeds bound {cert.bound}")
    if len(t) > cert.sharp_bound:
        failed.append(f"|T| = {len(t)} exceeds sharp bound {cert.sharp_bound}")
    return TransversalAudit(
        size=len(t),
        z=z,
        hj=hj,
        per_i_claim_ok=claim,
        n_missed=n_missed,
        used_b=used_b,
        predicted_missed_lower_bound=predicted,
        actual_missed=actual,
        bound=cert.bound,
        failed_steps=failed,
    )
