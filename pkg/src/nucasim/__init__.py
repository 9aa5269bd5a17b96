"""nucasim: a deterministic discrete-event simulator of a tiled NUCA
manycore with distributed home caches, used to study how homing policy,
thread mapping, data localisation and memory striping shape the run time
of parallel array workloads."""

from .addrspace import (HASH_ALL_BUT_STACK, HASH_FOR_HOME, HASH_NONE, HASHED,
                        LOCAL, REMOTE, AddressSpace, AddrSpaceConfig,
                        HomePolicy, Region)
from .coherence import (DRAM_FILL, L2_HIT, L3_HIT, AccessResult, CacheConfig,
                        CacheSystem, LatencyParams)
from .engine import (MigratingLinux, Program, Report, SimThread,
                     StaticOrdered, maybe_migrate, place_thread, run)
from .errors import (ConfigurationError, SimulationFault, UsageError,
                     VerificationError)
from .geometry import (DEFAULT_ANCHORS, MeshConfig, coords_of, hop_distance,
                       nearest_controller, tile_of)
from .harness import (CASES, CSV_COLUMNS, CaseConfig, ReportRow, SimConfig,
                      baseline, load_params, parse_params, rows_to_csv,
                      rows_to_json, run_case, run_experiment, speedup, sweep)
from .workloads import (MERGESORT, MICROBENCH, SimArray, WorkloadSpec,
                        build_mergesort, build_microbench, build_workload,
                        generate_input, merge, serial_mergesort, verify)

__version__ = "0.1.0"
