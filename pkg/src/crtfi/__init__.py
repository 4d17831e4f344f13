"""Desk-scale fault-injection laboratory for CRT-RSA countermeasures.

Signature algorithms are straight-line programs over modular arithmetic;
faults (zero, randomize, skip) are injected at every write, read, and skip
window; success is decided by whether the released value shares a factor
with the public modulus. Small primes make every sweep exhaustive.
"""

from .circuit import (
    Crash,
    ErrorOut,
    FaultAction,
    FaultKind,
    Program,
    ReadOf,
    Signature,
    SkipRange,
    WriteOf,
    dump_program,
    enumerate_sites,
    execute,
    parse_dump,
    program_digest,
)
from .countermeasures import build, catalog, program_inputs
from .faultengine import (
    CampaignReport,
    CampaignSpec,
    check_skip_subsumption,
    plan_persists,
    replay_plan,
    run_campaign,
)
from .keytools import (
    CrtKey,
    RsaKey,
    crt_from_rsa,
    derive_crt,
    gen_key,
    read_key_file,
    recover_d,
    recover_e,
    write_key_file,
)
from .modmath import (
    BellcoreResult,
    FactorClass,
    bellcore_extract,
    binomial_checksum,
    garner_recombine,
    mod_exp,
    mod_inv,
)
from .transforms import harden, to_infective, to_testbased

__version__ = "0.1.0"

__all__ = [
    "BellcoreResult",
    "CampaignReport",
    "CampaignSpec",
    "Crash",
    "CrtKey",
    "ErrorOut",
    "FactorClass",
    "FaultAction",
    "FaultKind",
    "Program",
    "ReadOf",
    "RsaKey",
    "Signature",
    "SkipRange",
    "WriteOf",
    "bellcore_extract",
    "binomial_checksum",
    "build",
    "catalog",
    "check_skip_subsumption",
    "crt_from_rsa",
    "derive_crt",
    "dump_program",
    "enumerate_sites",
    "execute",
    "garner_recombine",
    "gen_key",
    "harden",
    "mod_exp",
    "mod_inv",
    "parse_dump",
    "plan_persists",
    "program_digest",
    "program_inputs",
    "read_key_file",
    "recover_d",
    "recover_e",
    "replay_plan",
    "run_campaign",
    "to_infective",
    "to_testbased",
    "write_key_file",
    "__version__",
]
