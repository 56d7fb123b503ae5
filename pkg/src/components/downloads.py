from io import BytesIO
from typing import Dict, Optional

import pandas as pd
import streamlit as st

XLSX_MIME = "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"


def excel_bytes(sheets: Dict[str, pd.DataFrame], index: bool = False) -> BytesIO:
    """Write one sheet per frame into an in-memory workbook."""
    buffer = BytesIO()
    with pd.ExcelWriter(buffer, engine="openpyxl") as writer:
        for name, frame in sheets.items():
            frame.to_excel(writer, sheet_name=name[:31], index=index)
    buffer.seek(0)
    return buffer


def render_downloads(
    frame: pd.DataFrame,
    stem: str,
    *,
    json_text: Optional[str] = None,
    sheets: Optional[Dict[str, pd.DataFrame]] = None,
) -> None:
    """JSON, CSV and Excel download buttons for one table."""
    json_bytes = (json_text or frame.to_json(orient="records", force_ascii=False, indent=2)).encode("utf-8")
    csv_bytes = frame.to_csv(index=False).encode("utf-8")
    workbook = excel_bytes(sheets, index=True) if sheets else excel_bytes({stem: frame})

    col_json, col_csv, col_xlsx = st.columns(3)
    col_json.download_button("Download JSON", data=json_bytes, file_name=f"{stem}.json", mime="application/json")
    col_csv.download_button("Download CSV", data=csv_bytes, file_name=f"{stem}.csv", mime="text/csv")
    col_xlsx.download_button("Download Excel", data=workbook, file_name=f"{stem}.xlsx", mime=XLSX_MIME)
