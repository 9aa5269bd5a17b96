"""Experiment driver: the eight-case design matrix, baselines and
speed-ups, parameter sweeps, and deterministic CSV/JSON report rows."""

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

from .addrspace import (HASH_ALL_BUT_STACK, HASH_NONE, AddressSpace,
                        AddrSpaceConfig, HomePolicy)
from .coherence import CacheConfig, CacheSystem, LatencyParams
from .engine import MigratingLinux, StaticOrdered, run
from .errors import ConfigurationError, UsageError
from .geometry import DEFAULT_ANCHORS, MeshConfig
from .workloads import MERGESORT, MICROBENCH, WorkloadSpec, build_workload, verify

STATIC = "static"
LINUX = "linux"

SWEEP_AXES = ("size", "threads", "reps", "striping")


@dataclass(frozen=True)
class CaseConfig:
    case_id: int
    localised: bool
    mapper: str
    hash_mode: str


# The eight-case design matrix: one parameter changes at a time on the way
# from the conventional style (case 1) to full localisation (case 8).
CASES = {
    1: CaseConfig(1, False, LINUX, HASH_ALL_BUT_STACK),
    2: CaseConfig(2, False, LINUX, HASH_NONE),
    3: CaseConfig(3, False, STATIC, HASH_ALL_BUT_STACK),
    4: CaseConfig(4, False, STATIC, HASH_NONE),
    5: CaseConfig(5, True, LINUX, HASH_ALL_BUT_STACK),
    6: CaseConfig(6, True, LINUX, HASH_NONE),
    7: CaseConfig(7, True, STATIC, HASH_ALL_BUT_STACK),
    8: CaseConfig(8, True, STATIC, HASH_NONE),
}


@dataclass(frozen=True)
class SimConfig:
    """Every file-configurable model parameter, with the defaults used in
    all reported experiments."""

    width: int = 8
    height: int = 8
    usable_tiles: int = None  # default: 63 for microbench, 64 for merge sort
    controller_anchors: tuple = DEFAULT_ANCHORS
    line_size: int = 64
    page_size: int = 65536
    stripe_chunk: int = 8192
    element_size: int = 4
    l2_capacity: int = 65536
    associativity: int = 4
    replacement: str = "lru"
    caches_enabled: bool = True
    t_l2: int = 8
    t_hop: int = 1
    t_dir: int = 4
    t_dram: int = 80
    t_mem_svc: int = 10
    t_migrate: int = 10000
    quantum: int = 100000
    migrate_prob: float = 0.05
    variant: str = None    # mapping override; the case normally decides
    seed: int = None       # mapping-seed override; defaults to the run seed
    hash_mode: str = None  # the case normally decides
    striping: bool = None  # the CLI flag normally decides

    def resolved_usable(self, workload_kind):
        if self.usable_tiles is not None:
            return self.usable_tiles
        # One tile stays reserved in the micro-benchmark runs; the merge
        # sort sweeps use the whole mesh so 64 leaves stay distinct.
        return 64 if workload_kind == MERGESORT else 63

    def mesh(self, workload_kind):
        return MeshConfig(self.width, self.height,
                          self.resolved_usable(workload_kind),
                          tuple(tuple(a) for a in self.controller_anchors))

    def addr_config(self):
        return AddrSpaceConfig(self.line_size, self.page_size,
                               self.stripe_chunk, self.element_size)

    def cache_config(self):
        return CacheConfig(self.l2_capacity, self.associativity,
                           self.replacement, self.caches_enabled)

    def latency_params(self):
        return LatencyParams(self.t_l2, self.t_hop, self.t_dir,
                             self.t_dram, self.t_mem_svc, self.t_migrate)


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "on", "yes"):
        return True
    if t in ("0", "false", "off", "no"):
        return False
    raise ConfigurationError(f"expected a boolean, got {text!r}")


def _parse_anchors(text):
    anchors = []
    for part in text.split(";"):
        x, y = part.split(",")
        anchors.append((int(x), int(y)))
    return tuple(anchors)


_PARAM_PARSERS = {
    "width": int, "height": int, "usable_tiles": int,
    "controller_anchors": _parse_anchors,
    "line_size": int, "page_size": int, "stripe_chunk": int, "element_size": int,
    "l2_capacity": int, "associativity": int, "replacement": str,
    "caches_enabled": _parse_bool,
    "t_l2": int, "t_hop": int, "t_dir": int, "t_dram": int,
    "t_mem_svc": int, "t_migrate": int,
    "quantum": int, "migrate_prob": float,
    "variant": str, "seed": int, "hash_mode": str,
    "striping": _parse_bool,
}


def parse_params(text, base=None):
    """Apply flat key=value overrides to a SimConfig.  Unknown keys and
    malformed lines are configuration errors."""
    cfg = base if base is not None else SimConfig()
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"params line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        parser = _PARAM_PARSERS.get(key)
        if parser is None:
            raise ConfigurationError(f"params line {lineno}: unknown key {key!r}")
        try:
            overrides[key] = parser(value.strip())
        except ConfigurationError:
            raise
        except ValueError as exc:
            raise ConfigurationError(f"params line {lineno}: {exc}") from exc
    return replace(cfg, **overrides)


def load_params(path, base=None):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_params(fh.read(), base)


@dataclass
class ReportRow:
    """One experiment outcome, echoing every model parameter so rows are
    self-describing.  CSV columns follow field order."""

    case: int
    workload: str
    n: int
    m: int
    reps: int
    striping: bool
    seed: int
    total_cycles: int
    l2_hits: int
    l3_hits: int
    dram_fills: int
    invalidations: int
    migrations: int
    max_home_queue_depth: int
    max_controller_queue_depth: int
    speedup_vs_base: float = None
    localised: bool = False
    intermediate_step: bool = False
    mapper: str = STATIC
    hash_mode: str = HASH_NONE
    caches_enabled: bool = True
    width: int = 8
    height: int = 8
    usable_tiles: int = 63
    line_size: int = 64
    page_size: int = 65536
    stripe_chunk: int = 8192
    element_size: int = 4
    l2_capacity: int = 65536
    associativity: int = 4
    t_l2: int = 8
    t_hop: int = 1
    t_dir: int = 4
    t_dram: int = 80
    t_mem_svc: int = 10
    t_migrate: int = 10000
    quantum: int = 100000
    migrate_prob: float = 0.05


CSV_COLUMNS = tuple(f.name for f in fields(ReportRow))


def run_experiment(wspec, mapper, hash_mode, cfg=None, striping=None,
                   seed=None, case_id=0):
    """Run one fully specified simulation, verify its output, and return
    the report row."""
    cfg = cfg if cfg is not None else SimConfig()
    if striping is None:
        striping = cfg.striping if cfg.striping is not None else True
    if seed is None:
        seed = cfg.seed if cfg.seed is not None else wspec.rng_seed
    wspec = replace(wspec, rng_seed=seed)

    mesh = cfg.mesh(wspec.kind)
    aspace = AddressSpace(cfg.addr_config(), mesh, HomePolicy(hash_mode=hash_mode))
    cache = CacheSystem(cfg.cache_config(), cfg.latency_params(), mesh, aspace, striping)
    program = build_workload(wspec, cfg.element_size)
    if mapper == STATIC:
        mapping = StaticOrdered()
    else:
        mapping = MigratingLinux(seed, cfg.quantum, cfg.migrate_prob)

    report = run(program, mapping, mesh, aspace, cache)
    verify(wspec, report.result)  # never emit a row for a wrong result
    stats = report.stats
    return ReportRow(
        case=case_id,
        workload=wspec.kind,
        n=wspec.n,
        m=wspec.m,
        reps=wspec.reps,
        striping=striping,
        seed=seed,
        total_cycles=report.total_cycles,
        l2_hits=stats["l2_hits"],
        l3_hits=stats["l3_hits"],
        dram_fills=stats["dram_fills"],
        invalidations=stats["invalidations"],
        migrations=report.migrations,
        max_home_queue_depth=stats["max_home_queue_depth"],
        max_controller_queue_depth=stats["max_controller_queue_depth"],
        localised=wspec.localised,
        intermediate_step=wspec.intermediate_step,
        mapper=mapper,
        hash_mode=hash_mode,
        caches_enabled=cfg.caches_enabled,
        width=cfg.width,
        height=cfg.height,
        usable_tiles=mesh.usable_tiles,
        line_size=cfg.line_size,
        page_size=cfg.page_size,
        stripe_chunk=cfg.stripe_chunk,
        element_size=cfg.element_size,
        l2_capacity=cfg.l2_capacity,
        associativity=cfg.associativity,
        t_l2=cfg.t_l2,
        t_hop=cfg.t_hop,
        t_dir=cfg.t_dir,
        t_dram=cfg.t_dram,
        t_mem_svc=cfg.t_mem_svc,
        t_migrate=cfg.t_migrate,
        quantum=cfg.quantum,
        migrate_prob=cfg.migrate_prob,
    )


def run_case(case_id, wspec, cfg=None, striping=None, seed=None):
    """Run one row of the design matrix; the case decides localisation,
    mapper and hash mode."""
    case = CASES.get(case_id)
    if case is None:
        raise UsageError(f"case id must be in 1..8, got {case_id}")
    wspec = replace(wspec, localised=case.localised)
    return run_experiment(wspec, case.mapper, case.hash_mode, cfg,
                          striping, seed, case_id=case_id)


def baseline(wspec, cfg=None, striping=None, seed=None):
    """Cycles of the single-thread run under the default policies
    (case 1: non-localised, Linux mapping, hash-for-home)."""
    w1 = replace(wspec, m=1, localised=False)
    row = run_experiment(w1, LINUX, HASH_ALL_BUT_STACK, cfg, striping,
                         seed, case_id=1)
    return row.total_cycles


def speedup(row, base_cycles):
    """Speed-up of a run against the baseline cycle count."""
    if row.total_cycles <= 0:
        raise ArithmeticError("degenerate run: zero total cycles")
    return base_cycles / row.total_cycles


def _sweep_one(args):
    case_id, wspec, cfg, striping, seed = args
    return run_case(case_id, wspec, cfg, striping, seed)


def sweep(axis, values, wspec, case_id=1, cfg=None, striping=None,
          seed=None, jobs=1):
    """One run per value along the axis, everything else fixed.  Rows come
    back in value order regardless of how many worker processes ran them."""
    if axis not in SWEEP_AXES:
        raise UsageError(f"unknown sweep axis {axis!r}; pick one of {SWEEP_AXES}")
    if not values:
        raise UsageError("sweep needs at least one value")
    runs = []
    for value in values:
        if axis == "size":
            w, s = replace(wspec, n=int(value)), striping
        elif axis == "threads":
            w, s = replace(wspec, m=int(value)), striping
        elif axis == "reps":
            w, s = replace(wspec, reps=int(value)), striping
        else:
            w = wspec
            s = value if isinstance(value, bool) else _parse_bool(str(value))
        runs.append((case_id, w, cfg, s, seed))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_one, runs))
    return [_sweep_one(r) for r in runs]


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(getattr(row, c)) for c in CSV_COLUMNS])
    return out.getvalue()


def rows_to_json(rows):
    payload = [{c: getattr(row, c) for c in CSV_COLUMNS} for row in rows]
    return json.dumps(payload, indent=2) + "\n"
