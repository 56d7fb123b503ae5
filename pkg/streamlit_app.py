import sys
from pathlib import Path

import pandas as pd
import streamlit as st

sys.path.insert(0, str(Path(__file__).parent / "src"))

from bench.datasets import synthesize_tensor
from bench.errors import DataFormatError
from bench.idx import parse_idx
from bench.report import render_report, report_table
from bench.runner import CellResult, DecompositionTemplate, run_cell
from components.downloads import render_downloads
from components.session_state import init_session_state
from decompositions import Family
from solvers.config import OptimizerConfig, OptimizerFamily
from tensors import frobenius_norm

# --- App ---
st.set_page_config(page_title="VecHGrad Decomposition Lab", layout="centered")
init_session_state()

st.title("Tensor Decomposition with VecHGrad")
st.caption("Fit CP, DEDICOM or PARATUCK2 to one tensor and watch the loss go down.")

# --- Sidebar ---
st.sidebar.header("Tensor")
source = st.sidebar.radio("Source", ["Synthetic", "IDX file"], horizontal=True)
if source == "Synthetic":
    dims = (
        st.sidebar.number_input("I", min_value=1, max_value=64, value=8),
        st.sidebar.number_input("J", min_value=1, max_value=64, value=8),
        st.sidebar.number_input("K", min_value=1, max_value=64, value=8),
    )
    true_rank = st.sidebar.number_input("True rank", min_value=1, max_value=16, value=3)
    noise = st.sidebar.number_input("Noise std", min_value=0.0, value=0.0, step=0.01)
    data_seed = st.sidebar.number_input("Data seed", min_value=0, value=0)
    idx_file = None
else:
    idx_file = st.sidebar.file_uploader("Upload IDX tensor", type=None)

st.sidebar.header("Decomposition")
family = Family(st.sidebar.selectbox("Family", [f.value for f in Family]))
if family is Family.PARATUCK2:
    ranks = (
        st.sidebar.number_input("P", min_value=1, max_value=32, value=3),
        st.sidebar.number_input("Q", min_value=1, max_value=32, value=3),
    )
else:
    ranks = (st.sidebar.number_input("Rank R", min_value=1, max_value=32, value=3),)

st.sidebar.header("Optimizer")
optimizer_name = st.sidebar.selectbox("Optimizer", [f.value for f in OptimizerFamily])
max_iter = st.sidebar.number_input("Max iterations", min_value=1, value=200)
init_seed = st.sidebar.number_input("Init seed", min_value=0, value=0)

# --- Main Page ---
if st.button("Run"):
    if source == "Synthetic":
        if family is Family.DEDICOM and dims[0] != dims[1]:
            st.error("DEDICOM needs I == J.")
            st.stop()
        data_ranks = (int(true_rank),) * (2 if family is Family.PARATUCK2 else 1)
        tensor, _ = synthesize_tensor(dims, family, data_ranks, noise, int(data_seed))
        dataset = f"synthetic-{family.value}"
    elif idx_file is None:
        st.error("Please upload an IDX file first.")
        st.stop()
    else:
        try:
            tensor = parse_idx(idx_file.getvalue())
        except DataFormatError as err:
            st.error(f"Could not read IDX file: {err}")
            st.stop()
        dataset = idx_file.name

    template = DecompositionTemplate(family, tuple(int(r) for r in ranks))
    optimizer = OptimizerConfig.for_family(optimizer_name, max_iter=int(max_iter))
    cell = CellResult(
        dataset=dataset,
        decomposition=template.label,
        optimizer=optimizer.name,
        seed=int(init_seed),
        batch_index=0,
        target_norm=frobenius_norm(tensor),
    )
    with st.spinner(f"Running {optimizer.name} on a {tensor.dims} tensor..."):
        try:
            cell.report = run_cell(tensor, template, optimizer, int(init_seed))
        except Exception as err:
            cell.error = str(err)
    st.session_state.decompose_cell = cell

# --- Display Results ---
cell = st.session_state.decompose_cell
if cell is not None:
    if cell.failed:
        st.error(f"Run failed: {cell.error}")
    else:
        report = cell.report
        st.success(f"Stopped with {report.stop_reason.value} after {report.iterations} iterations.")
        col_loss, col_rel, col_q = st.columns(3)
        col_loss.metric("Final loss", f"{report.final_loss:.6g}")
        col_rel.metric("Relative error", f"{cell.relative_error:.3%}" if cell.relative_error is not None else "-")
        col_q.metric("Convergence rate q", "-" if report.convergence_rate_q is None else f"{report.convergence_rate_q:.3f}")

        st.subheader("Loss history")
        st.line_chart(pd.DataFrame({"loss": report.loss_history}))

        render_downloads(
            report_table([cell]),
            "decomposition",
            json_text=render_report([cell], "json", histories=True),
        )
