"""Fault campaigns: plan enumeration, execution, and attack bookkeeping.

A campaign takes one built program and one key, enumerates fault plans of
the requested order over the program's sites, executes each plan on each
message, and scores the outcomes with the gcd oracle: a released value v
with gcd(N, |S - v|) equal to p or q is a break. Per-site tallies feed a
classifier that separates structural breaks (the scheme's algebra leaks a
factor for essentially any replacement) from subring collisions (the
replacement happened to agree with the checksum residue, a ~1/r event).

Governing domains come from the fault-free baseline of the first message:
a replacement at a site ranges over the modulus that reduces the value
stored there, or over a bit-length envelope when nothing reduces it. Small
domains are swept exhaustively and classified by exact fraction; large
ones are sampled and classified by replaying each hit under two alternate
seeds, which re-draws the checksum primes - a collision evaporates, a real
break does not.

Everything is deterministic in (spec, program): sampling is seeded per
site, and the worker count only chunks the plan list before a canonical
merge, so reports are byte-identical for any worker setting.
"""

from __future__ import annotations

import json
import math
import random
import zlib
from dataclasses import dataclass, field, replace
from itertools import combinations

from .circuit import (
    CheckEq,
    Crash,
    DrawRandomPrime,
    ErrorOut,
    FaultAction,
    FaultKind,
    FaultPlan,
    FaultSite,
    LoadInput,
    Program,
    ReadOf,
    Ret,
    Signature,
    SkipRange,
    WriteOf,
    dst_of,
    execute,
    modulus_reg,
    program_digest,
    reads_of,
    same_result,
    skip_fill_value,
)
from .countermeasures import build, program_inputs
from .keytools import CrtKey
from .modmath import FactorClass, bellcore_extract

KIND_NAMES = ("zero", "randomize", "skip")
_ALT_SEED_STEPS = (1_000_003, 2_000_003, 3_000_017, 4_000_037)
_REPLAY_CAP = 8

CLASS_NONE = "none"
CLASS_STRUCTURAL = "structural-break"
CLASS_COLLISION = "subring-collision"


@dataclass(frozen=True)
class CampaignSpec:
    """One campaign configuration. Give either algo or a prebuilt program."""

    key: CrtKey
    algo: str | None = None
    program: Program | None = None
    messages: tuple[int, ...] = ()
    order: int = 1
    kinds: tuple[str, ...] = ("zero", "randomize", "skip")
    max_skip_len: int = 2
    exhaustive_threshold: int = 16384
    samples_per_site: int = 64
    seed: int = 42
    r_bits: int = 8
    build_seed: int = 0
    plan_limit: int = 10000
    workers: int = 1

    def __post_init__(self):
        if (self.algo is None) == (self.program is None):
            raise ValueError("give exactly one of algo or program")
        if self.order < 1:
            raise ValueError("order must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for k in self.kinds:
            if k not in KIND_NAMES:
                raise ValueError(f"unknown fault kind {k!r}")


@dataclass
class SiteRow:
    """Aggregated outcomes of all plans touching one (site, kind) pair."""

    site: str
    kind: str
    phase: str
    attempts: int = 0
    successes: int = 0
    factor_p: int = 0
    factor_q: int = 0
    no_output: int = 0
    silent: int = 0
    exhaustive: bool = False
    domain: int | None = None
    persistent: int | None = None  # replayed hits surviving both alternate seeds
    classification: str = CLASS_NONE

    @property
    def fraction(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


@dataclass(frozen=True)
class AttackSuccess:
    """One breaking plan: the released value leaked a factor of N."""

    message: int
    actions: tuple[tuple[str, str, int | None], ...]  # (site key, kind, value)
    signature: int
    factor: int
    side: str  # "p" | "q"
    persistent: bool | None  # None when the row is classified by exact fraction


@dataclass
class CampaignReport:
    name: str
    digest: str
    spec: dict
    messages: tuple[int, ...]
    baselines: dict[int, int]
    draws: dict[int, tuple[tuple[int, int], ...]]
    r_min: int | None
    plans_total: int
    sampled_plans: bool
    rows: list[SiteRow]
    successes: list[AttackSuccess]
    totals: dict = field(default_factory=dict)

    @property
    def summary_line(self) -> str:
        return (
            f"algo={self.name} order={self.totals['order']} plans={self.plans_total} "
            f"breaks={self.totals['structural_rows']} collisions={self.totals['collision_rows']}"
        )

    def structural_rows(self) -> list[SiteRow]:
        return [r for r in self.rows if r.classification == CLASS_STRUCTURAL]

    def persistent_successes(self, include_rng: bool = True) -> list[AttackSuccess]:
        """Successes that survived the replay probe.

        With include_rng False, plans touching a randomness-draw site are
        left out: pinning the drawn prime turns the scheme into its
        derandomized variant, which says nothing about the scheme proper.
        """
        phases = {r.site: r.phase for r in self.rows}
        out = [s for s in self.successes if s.persistent]
        if not include_rng:
            out = [s for s in out if not _touches_rng(phases, s)]
        return out

    def to_json(self, cap_per_row: int = 5) -> str:
        capped: list[dict] = []
        seen: dict[tuple[str, str], int] = {}
        for s in self.successes:
            head = (s.actions[0][0], s.actions[0][1])
            seen[head] = seen.get(head, 0) + 1
            if seen[head] <= cap_per_row:
                capped.append(
                    {
                        "message": s.message,
                        "actions": [list(a) for a in s.actions],
                        "signature": s.signature,
                        "factor": s.factor,
                        "side": s.side,
                        "persistent": s.persistent,
                    }
                )
        doc = {
            "name": self.name,
            "digest": self.digest,
            "spec": self.spec,
            "messages": list(self.messages),
            "baselines": {str(m): v for m, v in self.baselines.items()},
            "draws": {str(m): [list(d) for d in ds] for m, ds in self.draws.items()},
            "r_min": self.r_min,
            "plans_total": self.plans_total,
            "sampled_plans": self.sampled_plans,
            "rows": [
                {
                    "site": r.site,
                    "kind": r.kind,
                    "phase": r.phase,
                    "attempts": r.attempts,
                    "successes": r.successes,
                    "factor_p": r.factor_p,
                    "factor_q": r.factor_q,
                    "no_output": r.no_output,
                    "silent": r.silent,
                    "fraction": round(r.fraction, 8),
                    "exhaustive": r.exhaustive,
                    "domain": r.domain,
                    "persistent": r.persistent,
                    "classification": r.classification,
                }
                for r in self.rows
            ],
            "successes_total": len(self.successes),
            "successes": capped,
            "totals": self.totals,
            "line": self.summary_line,
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        lines = [
            "site,kind,phase,attempts,successes,factor_p,factor_q,no_output,"
            "silent,fraction,exhaustive,domain,persistent,classification"
        ]
        for r in self.rows:
            dom = "" if r.domain is None else str(r.domain)
            per = "" if r.persistent is None else str(r.persistent)
            lines.append(
                f"{r.site},{r.kind},{r.phase},{r.attempts},{r.successes},"
                f"{r.factor_p},{r.factor_q},{r.no_output},{r.silent},"
                f"{r.fraction:.8f},{int(r.exhaustive)},{dom},{per},{r.classification}"
            )
        return "\n".join(lines) + "\n"


# -------------------------------------------------------------- site algebra


def _bitlen_domain(nominal: int) -> int:
    return max(8, 1 << (max(nominal, 1).bit_length() + 2))


def site_domains(program: Program, baseline_regs: dict[str, int]) -> dict[FaultSite, tuple[int, int]]:
    """Map each data site to (governing domain, nominal value).

    A write is bounded by the modulus reducing the instruction.  A read is
    bounded by the modulus of the instruction that defined the fetched
    register, or failing that by the modulus of the instruction doing the
    reading: a raw value fetched into a reduced computation only matters
    through its residue in that ring.  A value neither end reduces gets a
    bit-length envelope over its baseline.
    """
    defs: dict[str, int] = {}
    for i, ins in enumerate(program.instrs):
        d = dst_of(ins)
        if d is not None:
            defs[d] = i
    out: dict[FaultSite, tuple[int, int]] = {}

    def mod_of(idx: int) -> int | None:
        mreg = modulus_reg(program.instrs[idx])
        if mreg is not None:
            m = baseline_regs.get(mreg, 0)
            if m >= 2:
                return m
        return None

    for idx, ins in enumerate(program.instrs):
        d = dst_of(ins)
        if d is not None and not isinstance(ins, LoadInput):
            nominal = baseline_regs[d]
            dom = mod_of(idx) or _bitlen_domain(nominal)
            out[WriteOf(idx)] = (dom, nominal)
        mreg = modulus_reg(ins)
        for slot, reg in reads_of(ins):
            nominal = baseline_regs[reg]
            src = defs.get(reg)
            dom = mod_of(src) if src is not None else None
            if dom is None and reg != mreg:
                dom = mod_of(idx)
            out[ReadOf(idx, slot)] = (dom or _bitlen_domain(nominal), nominal)
    return out


def site_phase(program: Program, site: FaultSite) -> str:
    ph = program.meta.phases
    if not ph or len(ph) != len(program.instrs):
        return "main"
    if isinstance(site, SkipRange):
        return ph[site.first]
    return ph[site.index]


def _site_key(program: Program, site: FaultSite) -> str:
    return site.key(program)


def _site_sample_rng(spec: CampaignSpec, site_key: str) -> random.Random:
    return random.Random(
        (spec.seed * 0x51ED2706 + zlib.crc32(site_key.encode())) & 0xFFFFFFFFFFFF
    )


@dataclass(frozen=True)
class SiteActions:
    """All actions a campaign may take at one site under one kind."""

    site: FaultSite
    kind: FaultKind
    values: tuple[int | None, ...]  # None for zero and skip
    exhaustive: bool
    domain: int | None


def site_action_table(program: Program, spec: CampaignSpec) -> list[SiteActions]:
    """Deterministic per-site action lists for the spec's kinds."""
    inputs = program_inputs(program, spec.key, _messages_of(spec)[0])
    base = execute(program, inputs, seed=spec.seed)
    if not isinstance(base.result, Signature):
        raise ValueError(f"fault-free baseline of {program.name} is {base.result}")
    regs = base.regs()
    domains = site_domains(program, regs)
    want_data = "zero" in spec.kinds or "randomize" in spec.kinds
    want_skip = "skip" in spec.kinds
    sites = []
    if want_data or want_skip:
        sites = [
            s
            for s in _enumerate(program, spec.max_skip_len if want_skip else 0)
            if isinstance(s, SkipRange) or want_data
        ]
    table: list[SiteActions] = []
    for site in sites:
        if isinstance(site, SkipRange):
            table.append(SiteActions(site, FaultKind.SKIP, (None,), True, None))
            continue
        dom, nominal = domains[site]
        if "zero" in spec.kinds:
            table.append(SiteActions(site, FaultKind.ZERO, (None,), True, dom))
        if "randomize" in spec.kinds:
            if dom <= spec.exhaustive_threshold:
                vals = tuple(v for v in range(dom) if v != nominal)
                table.append(SiteActions(site, FaultKind.RANDOMIZE, vals, True, dom))
            else:
                rng = _site_sample_rng(spec, _site_key(program, site))
                picked: set[int] = set()
                while len(picked) < min(spec.samples_per_site, dom - 1):
                    v = rng.randrange(dom)
                    if v != nominal:
                        picked.add(v)
                table.append(
                    SiteActions(site, FaultKind.RANDOMIZE, tuple(sorted(picked)), False, dom)
                )
    return table


def _enumerate(program: Program, max_skip_len: int) -> list[FaultSite]:
    from .circuit import enumerate_sites

    return enumerate_sites(program, max_skip_len=max_skip_len, include_output=False)


def _messages_of(spec: CampaignSpec) -> tuple[int, ...]:
    if spec.messages:
        return spec.messages
    n = spec.key.p * spec.key.q
    return (2, 3, n - 2)


# ------------------------------------------------------------ plan universes


def plan_space_size(table: list[SiteActions], order: int) -> int:
    """Number of order-distinct-site plans: elementary symmetric sum e_k."""
    counts = [len(t.values) for t in table]
    e = [0] * (order + 1)
    e[0] = 1
    for n in counts:
        for k in range(order, 0, -1):
            e[k] += e[k - 1] * n
    return e[order]


def build_plans(
    program: Program, spec: CampaignSpec, table: list[SiteActions]
) -> tuple[list[FaultPlan], bool]:
    """The campaign's plan list and whether it had to be sampled.

    Order 1 ignores plan_limit: one plan per action. Higher orders take
    every distinct-site combination when the exact count fits the limit,
    otherwise plan_limit draws (site subset uniform, one action per site).
    """

    def action(t: SiteActions, v: int | None) -> FaultAction:
        return FaultAction(t.site, t.kind, v)

    if spec.order == 1:
        return [(action(t, v),) for t in table for v in t.values], False
    total = plan_space_size(table, spec.order)
    if total <= spec.plan_limit:
        plans = [
            tuple(action(t, v) for t, v in zip(combo, vals))
            for combo in combinations(table, spec.order)
            for vals in _value_product(combo)
        ]
        return plans, False
    rng = random.Random((spec.seed * 0x9E3779B1 + spec.order) & 0xFFFFFFFFFFFF)
    plans_set: set[FaultPlan] = set()
    guard = 0
    while len(plans_set) < spec.plan_limit:
        guard += 1
        if guard > spec.plan_limit * 50:
            break  # space smaller than the limit in distinct terms
        picks = rng.sample(range(len(table)), spec.order)
        plan = tuple(
            action(table[i], table[i].values[rng.randrange(len(table[i].values))])
            for i in sorted(picks)
        )
        plans_set.add(plan)
    return sorted(plans_set, key=_plan_sort_key), True


def _value_product(combo: tuple[SiteActions, ...]):
    if not combo:
        yield ()
        return
    head, rest = combo[0], combo[1:]
    for tail in _value_product(rest):
        for v in head.values:
            yield (v,) + tail


def _plan_sort_key(plan: FaultPlan):
    def skey(a: FaultAction):
        s = a.site
        if isinstance(s, WriteOf):
            t = (0, s.index, 0)
        elif isinstance(s, ReadOf):
            t = (1, s.index, s.slot)
        else:
            t = (2, s.first, s.last)
        return t + (a.kind.value, -1 if a.value is None else a.value)

    return tuple(skey(a) for a in plan)


# ----------------------------------------------------------------- scoring


def score_outcome(n: int, p: int, q: int, baseline_sig: int, result) -> tuple[str, int | None, str | None]:
    """Classify one faulted outcome: (tally, factor, side)."""
    if isinstance(result, (ErrorOut, Crash)):
        return "no_output", None, None
    v = result.value
    if v == baseline_sig:
        return "silent", None, None
    b = bellcore_extract(n, baseline_sig, v, p, q)
    if b.cls is FactorClass.FACTOR_P:
        return "success", p, "p"
    if b.cls is FactorClass.FACTOR_Q:
        return "success", q, "q"
    return "silent", None, None


def replay_plan(
    program: Program, key: CrtKey, message: int, plan: FaultPlan, seed: int
) -> tuple[object, bool, int | None]:
    """Run one plan; return (result, broke, factor). Baseline uses the same seed."""
    inputs = program_inputs(program, key, message)
    base = execute(program, inputs, seed=seed)
    if not isinstance(base.result, Signature):
        raise ValueError(f"fault-free baseline of {program.name} is {base.result}")
    out = execute(program, inputs, seed=seed, plan=plan)
    n = key.p * key.q
    tally, factor, _side = score_outcome(n, key.p, key.q, base.result.value, out.result)
    return out.result, tally == "success", factor


def _alt_messages(n: int, message: int, count: int = 2) -> list[int]:
    """The first `count` candidate messages distinct from `message` mod n."""
    alts: list[int] = []
    m = 2
    while len(alts) < count:
        if m % n != message % n and math.gcd(m, n) == 1:
            alts.append(m)
        m += 1
    return alts


def _redrawn_plan(
    plan: FaultPlan,
    redraw: dict[FaultSite, tuple[int, int]] | None,
    seed: int,
    round_no: int,
) -> FaultPlan:
    if not redraw:
        return plan
    acts = []
    for a in plan:
        if a.kind is FaultKind.RANDOMIZE and a.site in redraw:
            dom, nominal = redraw[a.site]
            rng = random.Random(
                (seed * 0x9E3779B1 + zlib.crc32(f"{a.site!r}|{round_no}".encode()))
                & 0xFFFFFFFFFFFF
            )
            v = rng.randrange(dom)
            while v == nominal:
                v = rng.randrange(dom)
            a = FaultAction(a.site, a.kind, v)
        acts.append(a)
    return tuple(acts)


def plan_persists(
    program: Program,
    key: CrtKey,
    message: int,
    plan: FaultPlan,
    seed: int,
    redraw: dict[FaultSite, tuple[int, int]] | None = None,
) -> bool:
    """True when the plan still breaks with everything incidental varied.

    Each probe round moves the execution seed (the checksum primes get
    re-drawn, so a collision in a drawn subring loses its ring), moves the
    message (a hit that needed some residue to land on a magic value for
    this particular input dies), and, when `redraw` maps the plan's
    randomize sites to their (domain, nominal), re-draws the injected
    values (a multi-fault hit that needed its random values to agree is
    coordination luck, not a property of the scheme).  A structural break
    exploits the dataflow itself and survives every round.
    """
    alts = _alt_messages(key.p * key.q, message)
    for t, step in enumerate(_ALT_SEED_STEPS):
        plan_t = _redrawn_plan(plan, redraw, seed, t)
        _res, broke, _f = replay_plan(program, key, alts[t % len(alts)], plan_t, seed + step)
        if not broke:
            return False
    return True


def _touches_rng(report_phases: dict[str, str], s: AttackSuccess) -> bool:
    return any(report_phases.get(sk) == "rng" for sk, _kind, _val in s.actions)


# ---------------------------------------------------------------- campaign


def _resolve_program(spec: CampaignSpec) -> Program:
    if spec.program is not None:
        return spec.program
    return build(spec.algo, spec.key, r_bits=spec.r_bits, build_seed=spec.build_seed)


def run_campaign(spec: CampaignSpec) -> CampaignReport:
    program = _resolve_program(spec)
    key = spec.key
    n = key.p * key.q
    messages = _messages_of(spec)

    baselines: dict[int, int] = {}
    draws: dict[int, tuple[tuple[int, int], ...]] = {}
    first_regs: dict[str, int] | None = None
    for m in messages:
        out = execute(program, program_inputs(program, key, m), seed=spec.seed)
        if not isinstance(out.result, Signature):
            raise ValueError(f"fault-free baseline of {program.name} at M={m} is {out.result}")
        baselines[m] = out.result.value
        draws[m] = out.draws
        if first_regs is None:
            first_regs = out.regs()
    r_min = None
    if program.meta.r_regs:
        r_min = min(first_regs[r] for r in program.meta.r_regs)

    table = site_action_table(program, spec)
    plans, sampled = build_plans(program, spec, table)

    row_meta: dict[tuple[str, str], tuple[str, bool, int | None]] = {}
    for t in table:
        k = (_site_key(program, t.site), t.kind.value)
        row_meta[k] = (site_phase(program, t.site), t.exhaustive, t.domain)
    rows: dict[tuple[str, str], SiteRow] = {}

    def row_of(site_key: str, kind: str) -> SiteRow:
        k = (site_key, kind)
        if k not in rows:
            phase, exhaustive, domain = row_meta[k]
            rows[k] = SiteRow(site_key, kind, phase, exhaustive=exhaustive, domain=domain)
        return rows[k]

    successes: list[AttackSuccess] = []

    # worker chunks execute independently and merge in canonical plan order;
    # the split is a topology knob, the tallies cannot depend on it
    indexed = list(enumerate(plans))
    chunk_results: dict[int, list[tuple[int, str, int | None, str | None]]] = {}
    for w in range(spec.workers):
        for pi, plan in indexed[w :: spec.workers]:
            per_msg = []
            for m in messages:
                out = execute(program, program_inputs(program, key, m), seed=spec.seed, plan=plan)
                tally, factor, side = score_outcome(n, key.p, key.q, baselines[m], out.result)
                val = out.result.value if isinstance(out.result, Signature) else None
                per_msg.append((m, tally, factor, side, val))
            chunk_results[pi] = per_msg

    success_plans: list[FaultPlan] = []
    row_success_idx: dict[tuple[str, str], list[int]] = {}
    for pi, plan in indexed:
        touched = [(_site_key(program, a.site), a.kind.value, a.value) for a in plan]
        for m, tally, factor, side, val in chunk_results[pi]:
            for site_key, kind, _v in touched:
                row = row_of(site_key, kind)
                row.attempts += 1
                if tally == "success":
                    row.successes += 1
                    if side == "p":
                        row.factor_p += 1
                    else:
                        row.factor_q += 1
                elif tally == "no_output":
                    row.no_output += 1
                else:
                    row.silent += 1
            if tally == "success":
                idx = len(successes)
                successes.append(AttackSuccess(m, tuple(touched), val, factor, side, None))
                success_plans.append(plan)
                for site_key, kind, _v in touched:
                    row_success_idx.setdefault((site_key, kind), []).append(idx)

    # Replay pass.  Fraction bands settle most randomize rows outright; the
    # ambiguous middle band, the single-shot zero and skip rows, and every
    # multi-fault plan get replayed under fresh seeds and messages instead.
    # A persistent leak reproduces, so a handful of witnesses per row is
    # enough to find one.
    bound = (2 / r_min) if r_min else None
    need: set[int] = set()
    if spec.order > 1:
        need.update(range(len(successes)))
    else:
        for k, idxs in row_success_idx.items():
            row = rows[k]
            if row.kind in ("zero", "skip"):
                need.update(idxs)
            elif row.fraction < 0.5 and (bound is None or row.fraction > bound):
                need.update(idxs[:_REPLAY_CAP])
    redraw = site_domains(program, first_regs) if spec.order > 1 else None
    for idx in sorted(need):
        s = successes[idx]
        persistent = plan_persists(
            program, key, s.message, success_plans[idx], spec.seed, redraw=redraw
        )
        successes[idx] = replace(s, persistent=persistent)
    for k, idxs in row_success_idx.items():
        row = rows[k]
        replayed = [successes[i].persistent for i in idxs if successes[i].persistent is not None]
        if replayed:
            row.persistent = sum(replayed)

    for row in rows.values():
        row.classification = _classify(row, bound)

    ordered = sorted(rows.values(), key=lambda r: (r.site, r.kind))
    totals = {
        "order": spec.order,
        "attempts": sum(r.attempts for r in ordered),
        "successes_total": len(successes),
        "structural_rows": sum(1 for r in ordered if r.classification == CLASS_STRUCTURAL),
        "collision_rows": sum(1 for r in ordered if r.classification == CLASS_COLLISION),
        "persistent_successes": sum(1 for s in successes if s.persistent),
    }
    spec_echo = {
        "algo": spec.algo,
        "order": spec.order,
        "kinds": list(spec.kinds),
        "max_skip_len": spec.max_skip_len,
        "exhaustive_threshold": spec.exhaustive_threshold,
        "samples_per_site": spec.samples_per_site,
        "seed": spec.seed,
        "r_bits": spec.r_bits,
        "build_seed": spec.build_seed,
        "plan_limit": spec.plan_limit,
        "p": str(key.p),
        "q": str(key.q),
    }
    return CampaignReport(
        name=program.name,
        digest=program_digest(program),
        spec=spec_echo,
        messages=messages,
        baselines=baselines,
        draws=draws,
        r_min=r_min,
        plans_total=len(plans),
        sampled_plans=sampled,
        rows=ordered,
        successes=successes,
        totals=totals,
    )


def _classify(row: SiteRow, bound: float | None) -> str:
    """Band a row's success fraction, falling back to replay evidence.

    Randomize rows carry a rate: at or above one half the site breaks for
    most replacement values, which no drawn-ring collision can explain;
    at or below the collision bound the rate is what stray agreement in a
    checksum ring produces on its own.  Between the two, and for zero and
    skip rows whose single attempt carries no rate at all, the replayed
    witnesses decide: a leak that survives fresh seeds and fresh messages
    is structural, one that dies with them was a collision.
    """
    if row.successes == 0:
        return CLASS_NONE
    if row.kind == "randomize":
        f = row.fraction
        if f >= 0.5:
            return CLASS_STRUCTURAL
        if bound is not None and f <= bound:
            return CLASS_COLLISION
    if row.persistent == 0:
        return CLASS_COLLISION
    return CLASS_STRUCTURAL


# --------------------------------------------------- skip-fault subsumption


@dataclass(frozen=True)
class SkipWitness:
    window: tuple[int, int]
    witness: FaultPlan | None
    matched: bool


def check_skip_subsumption(
    program: Program,
    key: CrtKey,
    max_skip_len: int = 2,
    message: int = 2,
    seed: int = 42,
) -> list[SkipWitness]:
    """Find, per skip window, a data-fault plan with the same observable result.

    Constructive ladder: a no-effect skip matches the empty plan; a window
    over the return matches zeroing the returned read; otherwise each
    skipped store becomes a write replacement carrying that site's skip
    fill, a skipped input load becomes the same fill at every read of the
    register, and a skipped check that would have failed under the partial
    plan is pacified by feeding its second operand the first one's value.
    A bounded search over single and paired data faults backstops windows
    the construction misses.
    """
    inputs = program_inputs(program, key, message)
    baseline = execute(program, inputs, seed=seed)
    results: list[SkipWitness] = []
    n_instr = len(program.instrs)
    ret_idx = n_instr - 1

    def run(plan: FaultPlan):
        return execute(program, inputs, seed=seed, plan=plan)

    for length in range(1, max_skip_len + 1):
        for first in range(0, n_instr - length + 1):
            last = first + length - 1
            window = (first, last)
            skip_plan: FaultPlan = (FaultAction(SkipRange(first, last), FaultKind.SKIP),)
            target = run(skip_plan)

            witness = _skip_witness(
                program, inputs, seed, window, target, baseline, run, ret_idx
            )
            results.append(SkipWitness(window, witness, witness is not None))
    return results


def _skip_witness(program, inputs, seed, window, target, baseline, run, ret_idx):
    first, last = window
    if same_result(target.result, baseline.result):
        return ()
    if first <= ret_idx <= last:
        cand: FaultPlan = (FaultAction(ReadOf(ret_idx, 0), FaultKind.ZERO),)
        if same_result(run(cand).result, target.result):
            return cand

    plan: list[FaultAction] = []
    ok = True
    for i in range(first, last + 1):
        ins = program.instrs[i]
        if isinstance(ins, Ret):
            ok = False  # handled above; reaching here means the zero read missed
            break
        if isinstance(ins, CheckEq):
            probe = run(tuple(plan))
            if isinstance(probe.result, ErrorOut) and probe.result.check_index == i:
                a_reg = reads_of(ins)[0][1]
                a_val = probe.regs().get(a_reg, 0)
                for act in plan:  # an earlier read fault decides the effective fetch
                    if act.site == ReadOf(i, 0):
                        a_val = 0 if act.kind is FaultKind.ZERO else act.value
                plan.append(FaultAction(ReadOf(i, 1), FaultKind.RANDOMIZE, a_val))
            continue
        if isinstance(ins, LoadInput):
            fill = skip_fill_value(seed, i)
            for j, ins2 in enumerate(program.instrs):
                for slot, reg in reads_of(ins2):
                    if reg == ins.dst and not (first <= j <= last):
                        plan.append(FaultAction(ReadOf(j, slot), FaultKind.RANDOMIZE, fill))
            continue
        if dst_of(ins) is not None:
            fill = skip_fill_value(seed, i)
            plan.append(FaultAction(WriteOf(i), FaultKind.RANDOMIZE, fill))
    if ok and same_result(run(tuple(plan)).result, target.result):
        return tuple(plan)

    # bounded fallback: singles then pairs of zero / fill-valued replacements
    from .circuit import enumerate_sites

    sites = [
        s
        for s in enumerate_sites(program, max_skip_len=0, include_output=True)
        if isinstance(s, (WriteOf, ReadOf))
    ]
    candidates: list[FaultAction] = []
    for s in sites:
        idx = s.index
        candidates.append(FaultAction(s, FaultKind.ZERO))
        candidates.append(FaultAction(s, FaultKind.RANDOMIZE, skip_fill_value(seed, idx)))
    for c in candidates:
        if same_result(run((c,)).result, target.result):
            return (c,)
    for a, b in combinations(candidates, 2):
        if same_result(run((a, b)).result, target.result):
            return (a, b)
    return None
