"""Machine-readable ledger of formula variants and the forms adopted here.

Each entry names an alternative form of a formula that circulates for these
models, the form this package implements, and the check that arbitrates
between them. The ledger is written into the comment header of every CSV
the command-line tool emits and printed in full by ``rabipat validate``.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["Erratum", "LEDGER", "entries_for", "format_entry"]


@dataclass(frozen=True)
class Erratum:
    key: str
    variant: str
    adopted: str
    check: str
    commands: frozenset


_DRIVEN = frozenset({"spectrum", "phase-diagram", "analytic", "validate"})
_ANALYTIC = frozenset({"analytic", "validate"})

LEDGER = (
    Erratum(
        key="squeeze-couplings",
        variant="g1 = g cosh 2r, g2 = g sinh 2r",
        adopted="g1 = g cosh r, g2 = g sinh r",
        check="unitary-equivalence",
        commands=_DRIVEN,
    ),
    Erratum(
        key="squeeze-vacuum-shift",
        variant="squeezed-frame Hamiltonian with no constant term",
        adopted="lab spectrum = squeezed-frame spectrum + (dc sech 2r - dc)/2",
        check="unitary-equivalence",
        commands=_DRIVEN,
    ),
    Erratum(
        key="pattern-assembly",
        variant="A_n = u_n1 (i sy) + u_n2 sz + u_n3 a",
        adopted="A_n = u_n1 sx + u_n2 (-i sy) + u_n3 a",
        check="reconstruction",
        commands=frozenset({"patterns", "validate"}),
    ),
    Erratum(
        key="eps-np-denominator",
        variant="eps_np = sqrt((w0 - (xi1^2 + xi2^2)/2)^2 - (2 xi1 xi2/W)^2)",
        adopted="eps_np = sqrt((w0 - (xi1^2 + xi2^2)/W)^2 - (2 xi1 xi2/W)^2)",
        check="branch-consistency",
        commands=_ANALYTIC,
    ),
    Erratum(
        key="E-np-constant",
        variant="E_np = (eps_np - w0 + (xi1^2 + xi2^2)/W - W)/2",
        adopted="E_np = (eps_np - w0 + (xi1^2 - xi2^2)/W - W)/2",
        check="ed-ground-energy",
        commands=_ANALYTIC,
    ),
    Erratum(
        key="driven-np-offset",
        variant="H_np constant -g1^2/dq - dq/2",
        adopted="H_np constant -g2^2/dq - dq/2 (spin-down block of H_I)",
        check="dispersive-block",
        commands=_ANALYTIC,
    ),
    Erratum(
        key="driven-eps-np-radicand",
        variant="(dc sech 2r - g^2 cosh 2r/dq)^2 - g^4 sinh^2(2r)/dq",
        adopted="(dc sech 2r - g^2 cosh 2r/dq)^2 - (g^2 sinh 2r/dq)^2",
        check="substitution",
        commands=_ANALYTIC,
    ),
    Erratum(
        key="E-sp-bracket",
        variant="E_sp = (eps_sp - w0 - (xi1^2 + xi2^2)/W)/2 + ...",
        adopted="E_sp = (eps_sp - w0 + ((xi1+xi2)^2 x^-4 + (xi1-xi2)^2)/(2 W x^2))/2 + ...",
        check="ed-ground-energy",
        commands=_ANALYTIC,
    ),
    Erratum(
        key="E-sp-constant",
        variant="-[(xi1+xi2) x^-2 - (xi1-xi2)]/(2 W x^2)",
        adopted="-[(xi1+xi2) x^-2 - (xi1-xi2)]^2/(4 W x^2)",
        check="ed-ground-energy",
        commands=_ANALYTIC,
    ),
    Erratum(
        key="driven-sp-mean-field",
        variant="mean-field constant -W x^-2/2 with W undefined for the driven model",
        adopted="-(dq/4)(x^2 + x^-2) with x = g/g0",
        check="branch-consistency",
        commands=_ANALYTIC,
    ),
    Erratum(
        key="dispersive-ordering",
        variant="((g1^2 - g2^2)/dq) s+ s-",
        adopted="((g1^2 - g2^2)/dq) s- s+",
        check="dispersive-perturbative",
        commands=frozenset({"spectrum", "validate"}),
    ),
)


def entries_for(command: str) -> tuple:
    """Ledger entries relevant to one CLI command, in ledger order."""
    return tuple(e for e in LEDGER if command in e.commands)


def format_entry(e: Erratum) -> str:
    return f"{e.key} | variant: {e.variant} | adopted: {e.adopted} | check: {e.check}"
