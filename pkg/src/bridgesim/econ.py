"""Security-deposit economics: the vByte cost model and parallelism bounds.

The worst case for a single functionary is securing N-1 simultaneous
challenge-response protocols, each costing the most expensive path through
the dispute DAG (the hash check at the end of the read-value search).
"""

from __future__ import annotations

from dataclasses import dataclass

SATS_PER_BTC = 100_000_000

# Published per-transaction costs in vBytes for the challenge-response DAG.
DEFAULT_COST_TABLE_VALUES = dict(
    commit_proof=2513,
    challenge=653,
    publish_hashes_per_step=5118,
    publish_choice_per_step=205,
    publish_full_trace=3105,
    publish_read_trace=1063,
    sha256_computation=97780,
)


@dataclass(frozen=True)
class CostTable:
    commit_proof: int
    challenge: int
    publish_hashes_per_step: int
    publish_choice_per_step: int
    publish_full_trace: int
    publish_read_trace: int
    sha256_computation: int

    def __post_init__(self):
        for name, v in vars(self).items():
            if v < 0:
                raise ValueError(f"{name} must be non-negative")

    @staticmethod
    def default() -> "CostTable":
        return CostTable(**DEFAULT_COST_TABLE_VALUES)


@dataclass(frozen=True)
class DepositParams:
    n_functionaries: int
    fee_rate: int  # sats per vByte
    arity: int = 4
    hash_steps: int = 16
    choice_steps: int = 16

    def __post_init__(self):
        if self.n_functionaries < 1:
            raise ValueError("need at least one functionary")
        if self.fee_rate <= 0:
            raise ValueError("fee rate must be positive")


@dataclass(frozen=True)
class TimingParams:
    t_max: int
    t_min: int
    t_force: int
    t_safety: int
    t_total: int = 0

    def __post_init__(self):
        if not (self.t_max >= self.t_min > 0):
            raise ValueError("need t_max >= t_min > 0")
        if self.t_force < 0 or self.t_safety < 0:
            raise ValueError("t_force and t_safety must be non-negative")


def worst_case_vbytes(table: CostTable, hash_steps: int = 16,
                      choice_steps: int = 16) -> int:
    """Total vBytes of the most expensive dispute path.

    Hash publications happen hash_steps + (hash_steps - 1) times across the
    main and read searches; step choices happen choice_steps + choice_steps
    times.  With the default table and 16-slot searches this is 270332.
    """
    return (table.commit_proof
            + table.challenge
            + table.publish_hashes_per_step * (hash_steps + hash_steps - 1)
            + table.publish_choice_per_step * (choice_steps + choice_steps)
            + table.publish_full_trace
            + table.publish_read_trace
            + table.sha256_computation)


def required_deposit(params: DepositParams, table: CostTable | None = None) -> int:
    """Deposit in satoshis covering N-1 worst-case dispute protocols."""
    table = table or CostTable.default()
    per_protocol = worst_case_vbytes(table, params.hash_steps, params.choice_steps)
    return per_protocol * params.fee_rate * (params.n_functionaries - 1)


def worst_case_protocol_count(n_functionaries: int) -> tuple[int, int]:
    """(gross, secured) protocol counts for one deposit.

    Gross counts both directions against a single disruptive actor,
    2*(N-1); only N-1 must actually be secured because the first lost
    dispute burns all of the actor's enablers.
    """
    return 2 * (n_functionaries - 1), n_functionaries - 1


def btc(sats: int) -> str:
    """Format satoshis as a BTC decimal; a single trailing zero is trimmed
    so deposit-table cells read with 7 fractional digits."""
    whole, frac = divmod(sats, SATS_PER_BTC)
    s = f"{whole}.{frac:08d}"
    return s[:-1] if s.endswith("0") else s


def reproduce_deposit_table(fee_rates: list[int] | None = None,
                            ns: list[int] | None = None,
                            table: CostTable | None = None) -> list[tuple[int, int, int]]:
    """Deposit grid as (n_functionaries, fee_rate, deposit_sats) rows."""
    fee_rates = fee_rates or [5, 10, 20, 30]
    ns = ns or [10, 25, 50, 100]
    rows = []
    for n in ns:
        for x in fee_rates:
            rows.append((n, x, required_deposit(DepositParams(n, x), table)))
    return rows


def format_deposit_table(rows: list[tuple[int, int, int]]) -> str:
    lines = [f"{'Functionaries':>13} | {'Fee rate (sats/vByte)':>21} | {'Total amount (BTC)':>18}"]
    for n, x, sats in rows:
        lines.append(f"{n:>13} | {x:>21} | {btc(sats):>18}")
    return "\n".join(lines)


def min_separation(t: TimingParams) -> int:
    """Minimum spacing between one operator's consecutive peg-outs."""
    return (t.t_max - t.t_min) + t.t_force + t.t_safety


def max_parallelism(t_total: int, t_min: int) -> int:
    """Maximum concurrent peg-outs allowed per functionary."""
    if t_min <= 0:
        raise ValueError("t_min must be positive")
    return t_total // t_min
