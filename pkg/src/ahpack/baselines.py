"""Classic reference packers, an exact small-instance OPT and input generators."""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor, lcm
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .numerics import parse_rational
from .params import ClassTable, HUGE, LARGE, SMALL, TINY


@dataclass
class Instance:
    sizes: List[Fraction]
    descriptor: str = "manual"
    seed: Optional[int] = None


@dataclass
class PackResult:
    bin_count: int
    assignment: List[int]  # item -> bin


@dataclass
class OptResult:
    bin_count: int
    assignment: Optional[List[int]]
    method: str  # exact | lower_bound


def next_fit(sizes: Sequence[Fraction]) -> PackResult:
    asg, level, bins = [], Fraction(0), 0
    for s in sizes:
        if bins == 0 or level + s > 1:
            bins += 1
            level = Fraction(0)
        level += s
        asg.append(bins - 1)
    return PackResult(bins, asg)


def first_fit(sizes: Sequence[Fraction]) -> PackResult:
    levels: List[Fraction] = []
    asg = []
    for s in sizes:
        for b, lv in enumerate(levels):
            if lv + s <= 1:
                levels[b] += s
                asg.append(b)
                break
        else:
            levels.append(s)
            asg.append(len(levels) - 1)
    return PackResult(len(levels), asg)


def best_fit(sizes: Sequence[Fraction]) -> PackResult:
    levels: List[Fraction] = []
    asg = []
    for s in sizes:
        best = None
        for b, lv in enumerate(levels):
            if lv + s <= 1 and (best is None or lv > levels[best]):
                best = b
        if best is None:
            levels.append(s)
            asg.append(len(levels) - 1)
        else:
            levels[best] += s
            asg.append(best)
    return PackResult(len(levels), asg)


def harmonic(sizes: Sequence[Fraction], k: int) -> PackResult:
    """Harmonic_k: class j < k holds sizes in (1/(j+1), 1/j], j items per bin;
    sizes up to 1/k are packed by Next Fit in their own bins."""
    open_bin = {}  # class -> (bin, count or level)
    bins = 0
    asg = []
    for s in sizes:
        j = min(floor(1 / s), k)
        cur = open_bin.get(j)
        if j < k:
            if cur is None or cur[1] == j:
                cur = (bins, 0)
                bins += 1
            cur = (cur[0], cur[1] + 1)
        else:
            if cur is None or cur[1] + s > 1:
                cur = (bins, Fraction(0))
                bins += 1
            cur = (cur[0], cur[1] + s)
        open_bin[j] = cur
        asg.append(cur[0])
    return PackResult(bins, asg)


def run_baseline(name: str, instance: Instance) -> PackResult:
    sizes = instance.sizes
    if name == "nf":
        return next_fit(sizes)
    if name == "ff":
        return first_fit(sizes)
    if name == "bf":
        return best_fit(sizes)
    m = re.fullmatch(r"harmonic\((\d+)\)|harmonic(\d+)", name)
    if m:
        return harmonic(sizes, int(m.group(1) or m.group(2)))
    raise ValueError(f"unknown baseline {name!r}")


def opt_exact(instance: Instance, max_items: int = 18) -> OptResult:
    """Minimum bin count by dynamic programming over item subsets.

    Each state is the set of items still unpacked; the next bin always takes
    the lowest remaining item plus any feasible subset of the others.
    """
    sizes = list(instance.sizes)
    n = len(sizes)
    lower = ceil(sum(sizes, Fraction(0)))
    if n > max_items:
        return OptResult(lower, None, "lower_bound")
    if n == 0:
        return OptResult(0, [], "exact")
    q = 1
    for s in sizes:
        q = lcm(q, s.denominator)
    S = [int(s * q) for s in sizes]

    def fills(mask: int):
        """Feasible bins containing the lowest item of mask."""
        low = (mask & -mask).bit_length() - 1
        rest = [i for i in range(n) if mask >> i & 1 and i != low]
        out = []

        def grow(pos, used, load):
            out.append(used)
            for t in range(pos, len(rest)):
                i = rest[t]
                if load + S[i] <= q:
                    grow(t + 1, used | (1 << i), load + S[i])

        grow(0, 1 << low, S[low])
        return out

    @lru_cache(maxsize=None)
    def best(mask: int) -> Tuple[int, int]:
        if mask == 0:
            return 0, 0
        top = None
        for f in fills(mask):
            cnt = best(mask & ~f)[0] + 1
            if top is None or cnt < top[0]:
                top = (cnt, f)
        return top

    full = (1 << n) - 1
    count = best(full)[0]
    asg = [0] * n
    mask, b = full, 0
    while mask:
        f = best(mask)[1]
        for i in range(n):
            if f >> i & 1:
                asg[i] = b
        mask &= ~f
        b += 1
    best.cache_clear()
    return OptResult(count, asg, "exact")


def generate_instance(descriptor: str, n: int, seed: int,
                      table: Optional[ClassTable] = None) -> Instance:
    """``uniform(lo,hi)``, ``grid(kind)`` with kind in all/huge/large/small/tiny,
    or ``replay(path)``."""
    rng = random.Random(seed)
    m = re.fullmatch(r"uniform\(([^,]+),([^)]+)\)", descriptor.replace(" ", ""))
    if m:
        lo, hi = parse_rational(m.group(1)), parse_rational(m.group(2))
        if not 0 < lo <= hi <= 1:
            raise ValueError(f"bad range in {descriptor!r}")
        d = lcm(10**6, lo.denominator, hi.denominator)
        a, b = int(lo * d), int(hi * d)
        return Instance([Fraction(rng.randint(a, b), d) for _ in range(n)], descriptor, seed)
    m = re.fullmatch(r"grid(?:-adversarial)?\((\w+)\)", descriptor.replace(" ", ""))
    if m:
        if table is None:
            raise ValueError("grid instances need a class table")
        kinds = {"all": (HUGE, LARGE, SMALL, TINY)}.get(m.group(1), (m.group(1),))
        classes = [j for j in range(1, table.M + 2) if table.kind(j) in kinds]
        if not classes:
            raise ValueError(f"no classes of kind {m.group(1)!r}")
        eps = Fraction(1, 10**6)
        return Instance([table.t(rng.choice(classes)) + eps for _ in range(n)], descriptor, seed)
    m = re.fullmatch(r"replay\((.+)\)", descriptor)
    if m:
        return Instance(read_sizes(Path(m.group(1)).read_text())[:n or None], descriptor, seed)
    raise ValueError(f"unknown generator {descriptor!r}")


def read_sizes(text: str) -> List[Fraction]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_rational(line))
    return out
