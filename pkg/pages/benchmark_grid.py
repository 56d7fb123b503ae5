import sys
from pathlib import Path

import streamlit as st

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from bench.datasets import DatasetSpec
from bench.errors import BenchError
from bench.metrics import summary_tables
from bench.report import render_report, report_table
from bench.runner import BenchmarkConfig, DecompositionTemplate, run_benchmark
from components.downloads import render_downloads
from components.session_state import init_session_state
from decompositions import Family
from solvers.config import OptimizerConfig, OptimizerFamily


st.set_page_config(page_title="Benchmark Grid", layout="wide")
init_session_state()

st.title("Optimizer x Decomposition Grid")
st.caption(
    "Every optimizer fits every decomposition on seeded exact-rank synthetic tensors; "
    "the tables show mean final loss, mean time and mean convergence rate."
)

# --- Sidebar ---
st.sidebar.header("Data")
size = st.sidebar.number_input("Tensor size (I = J = K)", min_value=2, max_value=32, value=6)
true_rank = st.sidebar.number_input("Rank", min_value=1, max_value=8, value=2)
noise = st.sidebar.number_input("Noise std", min_value=0.0, value=0.0, step=0.01)
n_tensors = st.sidebar.number_input("Tensors", min_value=1, max_value=10, value=2)

st.sidebar.header("Grid")
families = st.sidebar.multiselect("Decompositions", [f.value for f in Family], default=["cp"])
optimizers = st.sidebar.multiselect(
    "Optimizers",
    [f.value for f in OptimizerFamily],
    default=["vechgrad", "lbfgs", "sgd", "adam", "als"],
)
max_iter = st.sidebar.number_input("Max iterations per run", min_value=1, value=100)
workers = st.sidebar.number_input("Parallel cells", min_value=1, max_value=16, value=2)

if st.button("Run grid"):
    if not families or not optimizers:
        st.error("Pick at least one decomposition and one optimizer.")
        st.stop()
    rank = int(true_rank)
    try:
        cfg = BenchmarkConfig(
            datasets=tuple(
                DatasetSpec(
                    name=f"synthetic-{seed}",
                    dims=(int(size),) * 3,
                    noise_sigma=float(noise),
                    seed=seed,
                )
                for seed in range(int(n_tensors))
            ),
            decompositions=tuple(
                DecompositionTemplate(Family(f), (rank, rank) if f == "paratuck2" else (rank,))
                for f in families
            ),
            optimizers=tuple(
                OptimizerConfig.for_family(name, max_iter=int(max_iter)) for name in optimizers
            ),
            workers=int(workers),
        )
    except BenchError as err:
        st.error(f"Invalid grid: {err}")
        st.stop()

    with st.spinner("Running benchmark grid..."):
        result = run_benchmark(cfg)
    st.session_state.benchmark_cells = result.cells
    st.session_state.benchmark_aggregates = result.aggregates

cells = st.session_state.benchmark_cells
aggregates = st.session_state.benchmark_aggregates
if cells:
    failed = [cell for cell in cells if cell.failed]
    if failed:
        st.warning(f"{len(failed)} of {len(cells)} cell(s) failed.")
    else:
        st.success(f"{len(cells)} cell(s) finished.")

    tables = summary_tables(aggregates)
    for title, name in (
        ("Mean final loss", "final_loss"),
        ("Mean time (s)", "wall_time_s"),
        ("Mean convergence rate q", "q"),
    ):
        st.subheader(title)
        st.dataframe(tables[name], width="stretch")

    with st.expander("All cells"):
        st.dataframe(report_table(cells), width="stretch")

    render_downloads(
        report_table(cells),
        "benchmark",
        json_text=render_report(cells, "json"),
        sheets=tables,
    )
