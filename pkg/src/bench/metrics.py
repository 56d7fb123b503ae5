"""
Benchmark statistics: the per-(dataset, decomposition, optimizer) means over
batches and seeds.
"""

from __future__ import annotations

from typing import Dict

import pandas as pd

GROUP_KEYS = ["dataset", "decomposition", "optimizer"]


def aggregate(rows: pd.DataFrame) -> pd.DataFrame:
    """
    Mean final loss, mean wall time and mean q per (dataset, decomposition,
    optimizer), over every batch and seed. Undefined rates are ignored.
    """
    columns = GROUP_KEYS + ["mean_final_loss", "mean_wall_time_s", "mean_q", "cells"]
    if rows.empty:
        return pd.DataFrame(columns=columns)
    numeric = rows.assign(
        final_loss=pd.to_numeric(rows["final_loss"], errors="coerce"),
        wall_time_s=pd.to_numeric(rows["wall_time_s"], errors="coerce"),
        q=pd.to_numeric(rows["q"], errors="coerce"),
    )
    grouped = numeric.groupby(GROUP_KEYS, sort=True)
    summary = grouped.agg(
        mean_final_loss=("final_loss", "mean"),
        mean_wall_time_s=("wall_time_s", "mean"),
        mean_q=("q", "mean"),
        cells=("final_loss", "size"),
    )
    return summary.reset_index()[columns]


def summary_tables(aggregates: pd.DataFrame) -> Dict[str, pd.DataFrame]:
    """Decompositions x optimizers pivots of the three means, one row block per dataset."""
    tables = {}
    for name, column in (
        ("final_loss", "mean_final_loss"),
        ("wall_time_s", "mean_wall_time_s"),
        ("q", "mean_q"),
    ):
        if aggregates.empty:
            tables[name] = pd.DataFrame()
            continue
        tables[name] = aggregates.pivot_table(
            index=["dataset", "decomposition"],
            columns="optimizer",
            values=column,
            aggfunc="mean",
            dropna=False,
        )
    return tables
