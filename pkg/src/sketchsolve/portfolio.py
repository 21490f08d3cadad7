"""Markowitz mean-variance portfolio allocation as a linear system.

Daily opening prices become simple returns; the expected-return vector and
second-moment matrix are bordered into

    [[0, r^T], [r, Sigma]] [nu, w]^T = [mu, 0]^T

whose minimum-norm solution allocates wealth w (negative entries mean
short-selling) with Lagrange multiplier nu. The right-hand side has a
single nonzero entry, so A^T b = mu * A_row0.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import InvalidInput
from .matrices import DenseSampleableMatrix
from .pipeline import SolverParams, run_direct, run_sampled_linear

_COLUMN_ALIASES = {
    "date": ("date", "Date", "timestamp"),
    "ticker": ("ticker", "Ticker", "Name", "name", "symbol", "Symbol"),
    "open": ("open", "Open"),
}


@dataclass
class ReturnsPanel:
    """Per-asset daily simple returns computed from opening prices."""

    asset_ids: list
    returns: np.ndarray          # (n_assets, n_days - 1)
    n_days: int
    n_rejected_rows: int = 0
    rejected_examples: list = field(default_factory=list)


def _pick_column(df: pd.DataFrame, role: str) -> str:
    for name in _COLUMN_ALIASES[role]:
        if name in df.columns:
            return name
    raise InvalidInput(f"no {role} column found (have {list(df.columns)})")


def load_prices(csv_path) -> ReturnsPanel:
    """Read a (date, ticker, open) CSV into a complete returns panel.

    Only tickers quoted on every date in the file are kept. Rows that fail
    to parse are counted and reported on the panel, never silently dropped.
    """
    df = pd.read_csv(csv_path)
    date_col = _pick_column(df, "date")
    ticker_col = _pick_column(df, "ticker")
    open_col = _pick_column(df, "open")
    df = df[[date_col, ticker_col, open_col]].copy()
    df.columns = ["date", "ticker", "open"]
    df["open"] = pd.to_numeric(df["open"], errors="coerce")
    df["date"] = pd.to_datetime(df["date"], errors="coerce")
    bad = df["open"].isna() | df["date"].isna() | df["ticker"].isna() \
        | (df["open"] <= 0)
    n_rejected = int(bad.sum())
    examples = df[bad].head(5).to_dict("records")
    df = df[~bad]
    if df.empty:
        raise InvalidInput("no parsable price rows")

    wide = df.pivot_table(index="ticker", columns="date", values="open",
                          aggfunc="last")
    wide = wide.sort_index(axis=1)
    complete = wide.dropna(axis=0)
    if complete.shape[0] == 0 or complete.shape[1] < 2:
        raise InvalidInput("no ticker spans the full date range")
    prices = complete.to_numpy()
    returns = np.diff(prices, axis=1) / prices[:, :-1]
    return ReturnsPanel(asset_ids=list(complete.index), returns=returns,
                        n_days=complete.shape[1], n_rejected_rows=n_rejected,
                        rejected_examples=examples)


@dataclass
class MarkowitzSystem:
    """Bordered linear system for minimum-risk allocation at target return."""

    A: np.ndarray
    b: np.ndarray
    mu: float

    @property
    def n_assets(self) -> int:
        return self.A.shape[0] - 1


def build_markowitz(panel: ReturnsPanel, mu: float = None) -> MarkowitzSystem:
    """Assemble the bordered system from a returns panel.

    ``mu`` defaults to the average expected return across all assets.
    """
    rets = np.asarray(panel.returns, dtype=np.float64)
    if rets.ndim != 2 or rets.size == 0:
        raise InvalidInput("panel has no return data")
    n_days = rets.shape[1]
    r_bar = rets.mean(axis=1)
    second_moment = (rets @ rets.T) / n_days
    if mu is None:
        mu = float(r_bar.mean())
    n = r_bar.size
    A = np.zeros((n + 1, n + 1))
    A[0, 1:] = r_bar
    A[1:, 0] = r_bar
    A[1:, 1:] = second_moment
    b = np.zeros(n + 1)
    b[0] = mu
    return MarkowitzSystem(A=A, b=b, mu=mu)


def synthetic_panel(n_assets: int, n_days: int, seed) -> ReturnsPanel:
    """Random returns panel for pipeline tests when no price data is on disk."""
    rng = np.random.default_rng(seed)
    drift = rng.uniform(-0.0005, 0.002, size=(n_assets, 1))
    noise = 0.02 * rng.standard_normal((n_assets, n_days - 1))
    return ReturnsPanel(asset_ids=[f"SYN{i:03d}" for i in range(n_assets)],
                        returns=drift + noise, n_days=n_days)


@dataclass
class PortfolioResult:
    system: MarkowitzSystem
    run: object               # SampledRun
    baseline: object          # DirectRun
    allocation_samples: np.ndarray


def solve_portfolio(system: MarkowitzSystem, params: SolverParams, rng,
                    sample_solution: bool = True) -> PortfolioResult:
    """Sampled pipeline plus exact baseline on the bordered system."""
    run = run_sampled_linear(lambda: DenseSampleableMatrix(system.A),
                             system.b, params, rng,
                             sample_solution=sample_solution)
    baseline = run_direct(system.A, b=system.b, k=params.k)
    return PortfolioResult(system=system, run=run, baseline=baseline,
                           allocation_samples=run.sampled_indices)
