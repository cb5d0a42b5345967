"""Thread algebra for fragmented programs: poly-threading, interleaving, migration."""

from .errors import (
    ExecutionError, PolythreadError, StateOverflow, SwitchOutsideContext, TermError,
    UnresolvedChoice, UnservedFocus,
)
from .terms import (
    D, EXTERN, S, TAU, Basic, Choice, LocAction, Mig, Pcc, Pcs, RecRef, RecSpec, Switch,
    Tau, Thread, Var, equivalent, head_normal, prefix, project, to_term, unfold,
)
from .services import (
    BLOCKED, BitStack, BoolRegister, Constant, NatCounter, Reply, Scripted, Use,
    builtin_service, load_services, use,
)
from .runtime import ReplySource, Resolver, Step, Trace, execute
from .polythreading import Spt, internalize, internalize_binary, spt, swap_extern
from .interleave import Pci, Std, pci, std
from .distributed import PciD, Site, app, dist_vector, is_proper, pci_d
from .fragsearch import FsSite, PciFs, appfs, fs_vector, iml, iml_prime, pci_fs, pv
from .acp import trace_match, translate_service, translate_thread, use_match
from .dsl import format_thread, parse_thread
from .progfrag import Architecture, extract, parse_program, run_architecture

__version__ = "0.1.0"
